//! Full-domain checks on small moduli sets against plain integer arithmetic.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_traits::ToPrimitive;
use rnstpu_core::{MixedRadixDigits, ModuliSet, RawProduct, RnsFixed, RnsInt, Signum};
use rnstpu_oracle::{oracle_encode, oracle_normalize, BigRational};

fn s357() -> ModuliSet {
    ModuliSet::new(&[3, 5, 7], 1, 8).unwrap()
}

fn s2357() -> ModuliSet {
    ModuliSet::new(&[2, 3, 5, 7], 2, 8).unwrap()
}

fn set_a() -> ModuliSet {
    ModuliSet::with_fractional(&[2, 3, 5, 7, 11, 13], &[5, 7], 8).unwrap()
}

fn range(set: &ModuliSet) -> u64 {
    set.range().to_u64().unwrap()
}

fn signed(x: u64, m: u64) -> i64 {
    if x >= m.div_ceil(2) {
        x as i64 - m as i64
    } else {
        x as i64
    }
}

fn residues(x: i64, set: &ModuliSet) -> Vec<u32> {
    set.moduli().iter().map(|&m| x.rem_euclid(m as i64) as u32).collect()
}

#[test]
fn brute_force_decode() {
    // scan [0, M) for the value matching each digit vector
    for set in [s357(), s2357()] {
        let m = range(&set);
        for x in 0..m {
            let v = RnsInt::from_u64(x, &set);
            let found = (0..m).find(|&y| residues(y as i64, &set) == v.digits()).unwrap();
            assert_eq!(v.decode(), BigUint::from(found));
        }
    }
}

#[test]
fn round_trip_and_mixed_radix() {
    for set in [s357(), s2357(), set_a()] {
        let m = range(&set);
        for x in 0..m {
            let v = RnsInt::encode(&BigUint::from(x), &set);
            assert_eq!(v.digits(), residues(x as i64, &set));
            assert_eq!(v.decode(), BigUint::from(x));
            let mr = v.to_mixed_radix();
            assert_eq!(mr.reconstruct(), BigUint::from(x));
            assert_eq!(RnsInt::from_mixed_radix(&mr), v);
            let again = MixedRadixDigits::new(&set, mr.digits().to_vec()).unwrap();
            assert_eq!(again.to_rns(), v);
        }
    }
}

#[test]
fn homomorphism() {
    for set in [s357(), s2357()] {
        let m = range(&set);
        for x in 0..m {
            let a = RnsInt::from_u64(x, &set);
            for y in 0..m {
                let b = RnsInt::from_u64(y, &set);
                assert_eq!(a.add(&b).unwrap().decode(), BigUint::from((x + y) % m));
                assert_eq!(a.sub(&b).unwrap().decode(), BigUint::from((x + m - y) % m));
                assert_eq!(a.mul(&b).unwrap().decode(), BigUint::from(x * y % m));
                assert_eq!(a.compare_unsigned(&b).unwrap(), x.cmp(&y));
            }
        }
    }
}

#[test]
fn base_extension() {
    let s = s357();
    let t = ModuliSet::new(&[3, 5, 7, 11, 13], 1, 8).unwrap();
    for x in 0..105u64 {
        let v = RnsInt::from_u64(x, &s);
        let e = v.base_extend(&t).unwrap();
        assert_eq!(e.digits()[3] as u64, x % 11);
        assert_eq!(e.digits()[4] as u64, x % 13);
        assert_eq!(e.decode(), BigUint::from(x));
        assert_eq!(e.restrict(&s).unwrap(), v);
    }
}

#[test]
fn fixed_encode_decode_exact() {
    for set in [s357(), s2357(), set_a()] {
        let m = range(&set);
        let mf = set.frac_range().clone();
        for x in 0..m {
            let k = signed(x, m);
            let v = RnsFixed::from_raw(RnsInt::from_u64(x, &set));
            let d = v.decode();
            assert_eq!(d.numerator, BigInt::from(k));
            assert_eq!(d.denominator, mf);
            let expect_sign = match k.cmp(&0) {
                Ordering::Less => Signum::Negative,
                Ordering::Equal => Signum::Zero,
                Ordering::Greater => Signum::Positive,
            };
            assert_eq!(v.sign(), expect_sign);
            // encode(k / M_F) is exact
            let q = BigRational::new(BigInt::from(k), BigInt::from(mf.clone()));
            assert_eq!(RnsFixed::encode(&q, &set).unwrap(), v);
            assert_eq!(oracle_encode(&q, &mf), BigInt::from(k));
        }
    }
}

#[test]
fn fixed_pairs() {
    for set in [s357(), s2357()] {
        let m = range(&set);
        let lo = -(m as i64 / 2);
        let hi = (m as i64 - 1) / 2;
        let mf = set.frac_range().clone();
        let in_range = |v: i64| v >= lo && v <= hi;
        for x in 0..m {
            let a = RnsFixed::from_raw(RnsInt::from_u64(x, &set));
            let ka = signed(x, m);
            for y in 0..m {
                let b = RnsFixed::from_raw(RnsInt::from_u64(y, &set));
                let kb = signed(y, m);
                if in_range(ka + kb) {
                    assert_eq!(a.add(&b).unwrap().scaled(), BigInt::from(ka + kb));
                }
                if in_range(ka - kb) {
                    assert_eq!(a.sub(&b).unwrap().scaled(), BigInt::from(ka - kb));
                }
                assert_eq!(a.compare_signed(&b).unwrap(), ka.cmp(&kb));
                let p = ka * kb;
                if in_range(p) {
                    let raw = a.multiply_raw(&b).unwrap();
                    assert_eq!(raw.decode_signed(), BigInt::from(p));
                    let expect = oracle_normalize(&BigInt::from(p), &mf);
                    assert_eq!(a.multiply(&b).unwrap().scaled(), expect);
                }
                let k = RnsInt::from_i64(kb, &set);
                if in_range(ka * kb) {
                    assert_eq!(a.scale_by_integer(&k).unwrap().scaled(), BigInt::from(ka * kb));
                }
            }
        }
    }
}

#[test]
fn normalize_matches_truncation() {
    for set in [s357(), s2357(), set_a()] {
        let m = range(&set);
        let mf = set.frac_range().clone();
        for x in 0..m {
            let k = signed(x, m);
            let p = RawProduct::new(RnsInt::from_u64(x, &set), 2).unwrap();
            let (n, sign) = p.normalize_with_sign().unwrap();
            assert_eq!(n.scaled(), oracle_normalize(&BigInt::from(k), &mf), "x={x}");
            assert_eq!(sign.as_i8() as i64, k.signum());
        }
    }
}

#[test]
fn single_digit_perturbation() {
    let set = set_a();
    let m = range(&set);
    for x in (0..m).step_by(97) {
        let a = RnsInt::from_u64(x, &set);
        let b = RnsInt::from_u64((x * 7919 + 13) % m, &set);
        for i in 0..set.len() {
            let mut digits = a.digits().to_vec();
            digits[i] = (digits[i] + 1) % set.modulus(i);
            let a2 = RnsInt::from_digits(&set, digits).unwrap();
            for (r1, r2) in [
                (a.add(&b).unwrap(), a2.add(&b).unwrap()),
                (a.sub(&b).unwrap(), a2.sub(&b).unwrap()),
                (a.mul(&b).unwrap(), a2.mul(&b).unwrap()),
                (a.neg(), a2.neg()),
            ] {
                for j in 0..set.len() {
                    if j != i {
                        assert_eq!(r1.digits()[j], r2.digits()[j]);
                    }
                }
            }
        }
    }
}
