use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, ToPrimitive};
use proptest::prelude::*;
use rnstpu_core::{mac_capacity_check, ModuliSet, RawProduct, RnsFixed, RnsInt};
use rnstpu_oracle::{oracle_normalize, BigRational};

fn default_set() -> ModuliSet {
    ModuliSet::default_set()
}

fn set_a() -> ModuliSet {
    ModuliSet::with_fractional(&[2, 3, 5, 7, 11, 13], &[5, 7], 8).unwrap()
}

fn raw_value() -> impl Strategy<Value = u128> {
    let m = default_set().range().to_u128().unwrap();
    (0..m).prop_map(|x| x)
}

fn signed_value() -> impl Strategy<Value = i128> {
    let m = default_set().range().to_u128().unwrap() as i128;
    (-(m / 2)..=(m - 1) / 2).prop_map(|x| x)
}

fn residues(x: i128, set: &ModuliSet) -> Vec<u32> {
    set.moduli().iter().map(|&m| x.rem_euclid(m as i128) as u32).collect()
}

proptest! {
    #[test]
    fn round_trip(x in raw_value()) {
        let set = default_set();
        let v = RnsInt::encode(&BigUint::from(x), &set);
        let expect = residues(x as i128, &set);
        prop_assert_eq!(v.digits(), expect.as_slice());
        prop_assert_eq!(v.decode(), BigUint::from(x));
        prop_assert_eq!(v.to_mixed_radix().reconstruct(), BigUint::from(x));
    }

    #[test]
    fn digitwise_ops_are_homomorphic(x in raw_value(), y in raw_value()) {
        let set = default_set();
        let m = set.range().to_u128().unwrap();
        let a = RnsInt::encode(&BigUint::from(x), &set);
        let b = RnsInt::encode(&BigUint::from(y), &set);
        let (bx, by, bm) = (BigUint::from(x), BigUint::from(y), BigUint::from(m));
        prop_assert_eq!(a.add(&b).unwrap().decode(), (&bx + &by) % &bm);
        prop_assert_eq!(a.sub(&b).unwrap().decode(), (&bx + &bm - &by) % &bm);
        prop_assert_eq!(a.mul(&b).unwrap().decode(), (&bx * &by) % &bm);
        prop_assert_eq!(a.compare_unsigned(&b).unwrap(), x.cmp(&y));
    }

    #[test]
    fn normalize_truncates(k in signed_value()) {
        let set = default_set();
        let p = RawProduct::new(RnsInt::encode_signed(&BigInt::from(k), &set), 2).unwrap();
        let n = p.normalize().unwrap();
        let expect = oracle_normalize(&BigInt::from(k), set.frac_range());
        let expect = residues(expect.to_i128().unwrap(), &set);
        prop_assert_eq!(n.digits(), expect.as_slice());
    }

    #[test]
    fn sign_and_signed_compare(a in signed_value(), b in signed_value()) {
        let set = default_set();
        let fa = RnsFixed::from_scaled(&BigInt::from(a), &set).unwrap();
        let fb = RnsFixed::from_scaled(&BigInt::from(b), &set).unwrap();
        prop_assert_eq!(fa.sign().as_i8() as i128, a.signum());
        prop_assert_eq!(fa.compare_signed(&fb).unwrap(), a.cmp(&b));
        prop_assert_eq!(fa.scaled(), BigInt::from(a));
    }

    #[test]
    fn base_extend_then_restrict(x in raw_value()) {
        let set = default_set();
        let wider = ModuliSet::new(
            &[256, 255, 253, 251, 247, 241, 239, 233, 229, 227, 223, 211],
            4,
            8,
        ).unwrap();
        let v = RnsInt::encode(&BigUint::from(x), &set);
        let e = v.base_extend(&wider).unwrap();
        prop_assert_eq!(e.digits()[10] as u128, x % 223);
        prop_assert_eq!(e.digits()[11] as u128, x % 211);
        prop_assert_eq!(e.restrict(&set).unwrap(), v);
    }

    #[test]
    fn perturbing_one_digit_only_touches_that_digit(
        x in raw_value(), y in raw_value(), i in 0usize..10, bump in 1u32..200,
    ) {
        let set = default_set();
        let a = RnsFixed::from_raw(RnsInt::encode(&BigUint::from(x), &set));
        let b = RnsFixed::from_raw(RnsInt::encode(&BigUint::from(y), &set));
        let mut d = a.digits().to_vec();
        d[i] = (d[i] + bump) % set.modulus(i);
        let a2 = RnsFixed::from_raw(RnsInt::from_digits(&set, d).unwrap());
        let k = b.raw().clone();
        let pairs = [
            (a.add(&b).unwrap().into_raw(), a2.add(&b).unwrap().into_raw()),
            (a.sub(&b).unwrap().into_raw(), a2.sub(&b).unwrap().into_raw()),
            (a.neg().into_raw(), a2.neg().into_raw()),
            (a.scale_by_integer(&k).unwrap().into_raw(), a2.scale_by_integer(&k).unwrap().into_raw()),
            (a.multiply_raw(&b).unwrap().raw().clone(), a2.multiply_raw(&b).unwrap().raw().clone()),
        ];
        for (r1, r2) in pairs {
            for j in 0..set.len() {
                if j != i {
                    prop_assert_eq!(r1.digits()[j], r2.digits()[j]);
                }
            }
        }
    }

    /// Summing raw products and normalizing once gives the exact truncated
    /// dot product; normalizing each term is off by at most one unit per term.
    #[test]
    fn deferred_normalization(terms in prop::collection::vec((-60i64..=60, -60i64..=60), 1..=4)) {
        let set = set_a();
        let mf = set.frac_range().clone();
        let bound = |v: i64| BigRational::new(v.abs().into(), 35.into());
        let bx = terms.iter().map(|t| t.0.abs()).max().unwrap();
        let by = terms.iter().map(|t| t.1.abs()).max().unwrap();
        prop_assume!(mac_capacity_check(&set, terms.len() as u64, &bound(bx), &bound(by)).is_ok());

        let mut acc = RawProduct::zero(&set);
        let mut eager = RnsFixed::zero(&set);
        let mut exact = BigInt::from(0);
        for &(x, y) in &terms {
            let a = RnsFixed::from_scaled(&x.into(), &set).unwrap();
            let b = RnsFixed::from_scaled(&y.into(), &set).unwrap();
            acc = acc.accumulate(&a.multiply_raw(&b).unwrap()).unwrap();
            eager = eager.add(&a.multiply(&b).unwrap()).unwrap();
            exact += BigInt::from(x * y);
        }
        let deferred = acc.normalize().unwrap().scaled();
        prop_assert_eq!(&deferred, &oracle_normalize(&exact, &mf));
        prop_assert!((deferred - eager.scaled()).abs() <= BigInt::from(terms.len()));
    }
}
