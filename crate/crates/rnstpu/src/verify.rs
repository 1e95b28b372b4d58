//! Oracle equivalence sweeps for moduli sets.
//!
//! Every residue operation is checked against plain big-integer arithmetic.
//! Small sets are swept over their full domain; larger ones are sampled
//! with a seeded generator so runs are reproducible.

use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rnstpu_core::{
    mac_capacity_check, relu_activate, BigRational, ModuliSet, RawProduct, RnsFixed, RnsInt, Signum,
};
use rnstpu_oracle::{oracle_encode, oracle_normalize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteOptions {
    /// Sweep every value when `M` is at most this.
    pub unary_limit: u64,
    /// Sweep every pair when `M` is at most this.
    pub pair_limit: u64,
    /// Cases per operation when sampling.
    pub samples: usize,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { unary_limit: 1_000_000, pair_limit: 2_048, samples: 100_000, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpReport {
    pub name: &'static str,
    /// Cases checked; pairs outside the signed range are not counted for
    /// operations that only promise exactness in range.
    pub cases: u64,
    pub mismatches: u64,
    pub first_mismatch: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteReport {
    pub moduli: Vec<u32>,
    pub exhaustive_unary: bool,
    pub exhaustive_pairs: bool,
    pub ops: Vec<OpReport>,
}

impl SuiteReport {
    pub fn mismatches(&self) -> u64 {
        self.ops.iter().map(|o| o.mismatches).sum()
    }

    pub fn min_cases(&self) -> u64 {
        self.ops.iter().map(|o| o.cases).min().unwrap_or(0)
    }

    pub fn render(&self) -> String {
        let mode = |b| if b { "exhaustive" } else { "sampled" };
        let mut s = format!(
            "moduli {:?}: unary {}, pairs {}\n",
            self.moduli,
            mode(self.exhaustive_unary),
            mode(self.exhaustive_pairs)
        );
        for op in &self.ops {
            let _ = writeln!(s, "  {:<18} {:>10} cases {:>6} mismatches", op.name, op.cases, op.mismatches);
            if let Some(m) = &op.first_mismatch {
                let _ = writeln!(s, "    first: {m}");
            }
        }
        s
    }
}

type Outcome = Option<Result<(), String>>;

struct Ctx {
    set: ModuliSet,
    m: BigInt,
    mf: BigUint,
    lo: BigInt,
    hi: BigInt,
    wider: ModuliSet,
    extra: u32,
}

impl Ctx {
    fn new(set: &ModuliSet) -> Self {
        let m = BigInt::from(set.range().clone());
        let lo: BigInt = -(&m / BigInt::from(2));
        let hi: BigInt = (&m - 1) / BigInt::from(2);
        let extra = extra_modulus(set);
        let mut moduli = set.moduli().to_vec();
        moduli.push(extra);
        let width = set.digit_width_bits().max(32 - extra.leading_zeros());
        let wider = ModuliSet::with_fractional(&moduli, set.fractional_moduli(), width)
            .expect("extra modulus is coprime");
        Ctx { set: set.clone(), m, mf: set.frac_range().clone(), lo, hi, wider, extra }
    }

    fn signed(&self, x: &BigUint) -> BigInt {
        let x = BigInt::from(x.clone());
        if x > self.hi {
            x - &self.m
        } else {
            x
        }
    }

    fn unsigned(&self, k: &BigInt) -> BigUint {
        let r = ((k % &self.m) + &self.m) % &self.m;
        r.to_biguint().unwrap()
    }

    fn in_range(&self, k: &BigInt) -> bool {
        *k >= self.lo && *k <= self.hi
    }

    fn residues(&self, k: &BigInt) -> Vec<u32> {
        self.set.moduli().iter().map(|&m| residue(k, m)).collect()
    }

    fn int(&self, x: &BigUint) -> RnsInt {
        RnsInt::encode(x, &self.set)
    }

    fn fixed(&self, x: &BigUint) -> RnsFixed {
        RnsFixed::from_raw(self.int(x))
    }
}

fn residue(k: &BigInt, m: u32) -> u32 {
    let m = BigInt::from(m);
    (((k % &m) + &m) % &m).to_u32().unwrap()
}

/// Smallest prime above every modulus; coprime with the whole set.
fn extra_modulus(set: &ModuliSet) -> u32 {
    let mut p = set.moduli().iter().copied().max().unwrap_or(2) + 1;
    while !(2..p).take_while(|d| d * d <= p).all(|d| p % d != 0) {
        p += 1;
    }
    p
}

fn check<T: PartialEq + std::fmt::Debug>(got: T, want: T, what: impl FnOnce() -> String) -> Outcome {
    if got == want {
        Some(Ok(()))
    } else {
        Some(Err(format!("{}: got {got:?}, want {want:?}", what())))
    }
}

fn signum(k: &BigInt) -> Signum {
    match k.sign() {
        Sign::Minus => Signum::Negative,
        Sign::NoSign => Signum::Zero,
        Sign::Plus => Signum::Positive,
    }
}

struct Unary {
    name: &'static str,
    run: fn(&Ctx, &BigUint) -> Outcome,
}

#[derive(Clone, Copy)]
enum Domain {
    /// Any raw pair.
    Full,
    /// Signed values within a quarter of `M`; sums stay in range.
    Half,
    /// Signed values whose product stays in range.
    Product,
}

struct Binary {
    name: &'static str,
    domain: Domain,
    run: fn(&Ctx, &BigUint, &BigUint) -> Outcome,
}

const UNARY: &[Unary] = &[
    Unary { name: "encode", run: |c, x| {
        let k = BigInt::from(x.clone());
        check(c.int(x).digits().to_vec(), c.residues(&k), || format!("x={x}"))
    } },
    Unary { name: "decode", run: |c, x| {
        let v = RnsInt::from_digits(&c.set, c.residues(&BigInt::from(x.clone()))).ok()?;
        check(v.decode(), x.clone(), || format!("x={x}"))
    } },
    Unary { name: "mixed_radix", run: |c, x| {
        let v = c.int(x);
        let mr = v.to_mixed_radix();
        let ok = mr.reconstruct() == *x && RnsInt::from_mixed_radix(&mr) == v;
        check(ok, true, || format!("x={x} digits={:?}", mr.digits()))
    } },
    Unary { name: "negate", run: |c, x| {
        let k = -BigInt::from(x.clone());
        check(c.fixed(x).neg().digits().to_vec(), c.residues(&k), || format!("x={x}"))
    } },
    Unary { name: "base_extend", run: |c, x| {
        let v = c.int(x);
        let e = v.base_extend(&c.wider).ok()?;
        let want = (x % c.extra).to_u32().unwrap();
        let ok = e.digits()[c.set.len()] == want && e.restrict(&c.set).ok()? == v;
        check(ok, true, || format!("x={x} extended={:?}", e.digits()))
    } },
    Unary { name: "fixed_decode", run: |c, x| {
        let d = c.fixed(x).decode();
        check((d.numerator, d.denominator), (c.signed(x), c.mf.clone()), || format!("x={x}"))
    } },
    Unary { name: "fixed_encode", run: |c, x| {
        let k = c.signed(x);
        let q = BigRational::new(k.clone(), BigInt::from(c.mf.clone()));
        let ok = oracle_encode(&q, &c.mf) == k;
        let got = RnsFixed::encode(&q, &c.set).map(|v| v.digits().to_vec()).ok();
        check((ok, got), (true, Some(c.residues(&k))), || format!("k={k}"))
    } },
    Unary { name: "sign", run: |c, x| {
        check(c.fixed(x).sign(), signum(&c.signed(x)), || format!("x={x}"))
    } },
    Unary { name: "normalize", run: |c, x| {
        let k = c.signed(x);
        let got = RawProduct::new(c.int(x), 2).ok()?.normalize_with_sign().ok()?;
        let want = oracle_normalize(&k, &c.mf);
        check((got.0.digits().to_vec(), got.1), (c.residues(&want), signum(&k)), || format!("k={k}"))
    } },
    Unary { name: "relu", run: |c, x| {
        let k = c.signed(x);
        let want = if k.is_negative() { BigInt::zero() } else { k.clone() };
        check(relu_activate(&c.fixed(x)).digits().to_vec(), c.residues(&want), || format!("k={k}"))
    } },
];

const BINARY: &[Binary] = &[
    Binary { name: "add", domain: Domain::Full, run: |c, x, y| {
        let want = c.residues(&(BigInt::from(x.clone()) + BigInt::from(y.clone())));
        check(c.int(x).add(&c.int(y)).ok()?.digits().to_vec(), want, || format!("x={x} y={y}"))
    } },
    Binary { name: "sub", domain: Domain::Full, run: |c, x, y| {
        let want = c.residues(&(BigInt::from(x.clone()) - BigInt::from(y.clone())));
        check(c.int(x).sub(&c.int(y)).ok()?.digits().to_vec(), want, || format!("x={x} y={y}"))
    } },
    Binary { name: "mul", domain: Domain::Full, run: |c, x, y| {
        let want = c.residues(&(BigInt::from(x.clone()) * BigInt::from(y.clone())));
        check(c.int(x).mul(&c.int(y)).ok()?.digits().to_vec(), want, || format!("x={x} y={y}"))
    } },
    Binary { name: "compare_unsigned", domain: Domain::Full, run: |c, x, y| {
        check(c.int(x).compare_unsigned(&c.int(y)).ok()?, x.cmp(y), || format!("x={x} y={y}"))
    } },
    Binary { name: "compare_signed", domain: Domain::Full, run: |c, x, y| {
        let want = c.signed(x).cmp(&c.signed(y));
        check(c.fixed(x).compare_signed(&c.fixed(y)).ok()?, want, || format!("x={x} y={y}"))
    } },
    Binary { name: "fixed_add", domain: Domain::Half, run: |c, x, y| {
        let k = c.signed(x) + c.signed(y);
        if !c.in_range(&k) {
            return None;
        }
        check(c.fixed(x).add(&c.fixed(y)).ok()?.scaled(), k, || format!("x={x} y={y}"))
    } },
    Binary { name: "fixed_sub", domain: Domain::Half, run: |c, x, y| {
        let k = c.signed(x) - c.signed(y);
        if !c.in_range(&k) {
            return None;
        }
        check(c.fixed(x).sub(&c.fixed(y)).ok()?.scaled(), k, || format!("x={x} y={y}"))
    } },
    Binary { name: "accumulate", domain: Domain::Half, run: |c, x, y| {
        let k = c.signed(x) + c.signed(y);
        if !c.in_range(&k) {
            return None;
        }
        let a = RawProduct::new(c.int(x), 2).ok()?;
        let b = RawProduct::new(c.int(y), 2).ok()?;
        check(a.accumulate(&b).ok()?.decode_signed(), k, || format!("x={x} y={y}"))
    } },
    Binary { name: "scale", domain: Domain::Product, run: |c, x, y| {
        let ky = c.signed(y);
        let k = c.signed(x) * &ky;
        if !c.in_range(&k) {
            return None;
        }
        let n = RnsInt::encode_signed(&ky, &c.set);
        check(c.fixed(x).scale_by_integer(&n).ok()?.scaled(), k, || format!("x={x} y={y}"))
    } },
    Binary { name: "multiply_raw", domain: Domain::Product, run: |c, x, y| {
        let k = c.signed(x) * c.signed(y);
        if !c.in_range(&k) {
            return None;
        }
        check(c.fixed(x).multiply_raw(&c.fixed(y)).ok()?.decode_signed(), k, || format!("x={x} y={y}"))
    } },
    Binary { name: "multiply", domain: Domain::Product, run: |c, x, y| {
        let k = c.signed(x) * c.signed(y);
        if !c.in_range(&k) {
            return None;
        }
        let want = c.residues(&oracle_normalize(&k, &c.mf));
        check(c.fixed(x).multiply(&c.fixed(y)).ok()?.digits().to_vec(), want, || format!("x={x} y={y}"))
    } },
];

/// Uniform value in `[0, bound)`.
fn below(rng: &mut ChaCha8Rng, bound: &BigUint) -> BigUint {
    if let Some(b) = bound.to_u128() {
        return BigUint::from(rng.random_range(0..b));
    }
    let bits = bound.bits();
    let bytes = bits.div_ceil(8) as usize;
    let mut buf = vec![0u8; bytes];
    loop {
        rng.fill(&mut buf[..]);
        let spare = (bytes as u64 * 8 - bits) as u32;
        buf[bytes - 1] &= 0xffu8 >> spare;
        let v = BigUint::from_bytes_le(&buf);
        if v < *bound {
            return v;
        }
    }
}

/// Uniform signed value in `[-r, r]`, returned as a raw residue value.
fn signed_within(rng: &mut ChaCha8Rng, c: &Ctx, r: &BigUint) -> BigUint {
    let v = BigInt::from(below(rng, &(r * 2u32 + 1u32))) - BigInt::from(r.clone());
    c.unsigned(&v)
}

fn sample(rng: &mut ChaCha8Rng, c: &Ctx, domain: Domain) -> BigUint {
    let m = c.set.range();
    match domain {
        Domain::Full => below(rng, m),
        Domain::Half => signed_within(rng, c, &((m - 1u32) / 4u32)),
        Domain::Product => signed_within(rng, c, &((m - 1u32) / 2u32).sqrt()),
    }
}

fn tally(name: &'static str, outcomes: impl Iterator<Item = Outcome>) -> OpReport {
    let mut r = OpReport { name, cases: 0, mismatches: 0, first_mismatch: None };
    for o in outcomes.flatten() {
        r.cases += 1;
        if let Err(e) = o {
            r.mismatches += 1;
            r.first_mismatch.get_or_insert(e);
        }
    }
    r
}

fn op_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Checks every residue operation on `set`. Mismatches are report content;
/// the suite itself never fails.
pub fn exhaustive_smallset_suite(set: &ModuliSet, opts: &SuiteOptions) -> SuiteReport {
    let ctx = Ctx::new(set);
    let m = set.range().to_u64();
    let exhaustive_unary = m.is_some_and(|m| m <= opts.unary_limit);
    let exhaustive_pairs = m.is_some_and(|m| m <= opts.pair_limit);

    let unary = UNARY.par_iter().enumerate().map(|(i, op)| {
        if exhaustive_unary {
            tally(op.name, (0..m.unwrap()).map(|x| (op.run)(&ctx, &BigUint::from(x))))
        } else {
            let mut rng = op_rng(opts.seed, i);
            let xs: Vec<_> = (0..opts.samples).map(|_| sample(&mut rng, &ctx, Domain::Full)).collect();
            tally(op.name, xs.iter().map(|x| (op.run)(&ctx, x)))
        }
    });
    let binary = BINARY.par_iter().enumerate().map(|(i, op)| {
        if exhaustive_pairs {
            let m = m.unwrap();
            tally(
                op.name,
                (0..m * m).map(|p| (op.run)(&ctx, &BigUint::from(p / m), &BigUint::from(p % m))),
            )
        } else {
            let mut rng = op_rng(opts.seed, UNARY.len() + i);
            let xs: Vec<_> = (0..opts.samples)
                .map(|_| (sample(&mut rng, &ctx, op.domain), sample(&mut rng, &ctx, op.domain)))
                .collect();
            tally(op.name, xs.iter().map(|(x, y)| (op.run)(&ctx, x, y)))
        }
    });
    let mut ops: Vec<OpReport> = unary.collect();
    ops.extend(binary.collect::<Vec<_>>());
    SuiteReport { moduli: set.moduli().to_vec(), exhaustive_unary, exhaustive_pairs, ops }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MacReport {
    /// Term lists that passed the capacity check and were evaluated.
    pub lists: u64,
    /// Deferred sums that differ from the truncated exact sum.
    pub mismatches: u64,
    /// Lists where eager per-term normalization drifted more than one unit
    /// per term from the deferred result.
    pub drift_violations: u64,
    /// Largest drift seen, in units of `1/M_F`.
    pub max_drift: u64,
}

/// Dot products accumulated at raw scale and normalized once, against the
/// exact truncated sum. Each list has 1 to `max_terms` terms with operand
/// magnitudes drawn so the capacity check passes.
pub fn deferred_mac_suite(set: &ModuliSet, lists: usize, max_terms: usize, seed: u64) -> MacReport {
    let mf = set.frac_range().clone();
    let mfr = BigInt::from(mf.clone());
    let avail = (set.range() - 1u32) / 2u32;
    let chunks: Vec<MacReport> = (0..lists)
        .collect::<Vec<_>>()
        .par_chunks(256)
        .map(|chunk| {
            let mut rng = op_rng(seed, chunk[0]);
            let mut r = MacReport { lists: 0, mismatches: 0, drift_violations: 0, max_drift: 0 };
            for _ in chunk {
                let k = rng.random_range(1..=max_terms);
                // (b + 1)^2 * k <= avail
                let b = (&avail / k as u32).sqrt().to_i64().unwrap_or(i64::MAX / 4) - 1;
                if b < 0 {
                    continue;
                }
                let b = rng.random_range(0..=b);
                let terms: Vec<(i64, i64)> =
                    (0..k).map(|_| (rng.random_range(-b..=b), rng.random_range(-b..=b))).collect();
                let bound = |v: i64| BigRational::new(v.into(), mfr.clone());
                let bx = terms.iter().map(|t| t.0.abs()).max().unwrap();
                let by = terms.iter().map(|t| t.1.abs()).max().unwrap();
                if mac_capacity_check(set, k as u64, &bound(bx), &bound(by)).is_err() {
                    continue;
                }
                let mut acc = RawProduct::zero(set);
                let mut eager = RnsFixed::zero(set);
                let mut exact = BigInt::zero();
                for &(x, y) in &terms {
                    let a = RnsFixed::from_scaled(&x.into(), set).expect("bounded");
                    let b = RnsFixed::from_scaled(&y.into(), set).expect("bounded");
                    acc = acc.accumulate(&a.multiply_raw(&b).unwrap()).unwrap();
                    eager = eager.add(&a.multiply(&b).unwrap()).unwrap();
                    exact += BigInt::from(x) * BigInt::from(y);
                }
                let deferred = acc.normalize().unwrap().scaled();
                r.lists += 1;
                if deferred != oracle_normalize(&exact, &mf) {
                    r.mismatches += 1;
                }
                let drift = (&deferred - eager.scaled()).abs().to_u64().unwrap_or(u64::MAX);
                r.max_drift = r.max_drift.max(drift);
                if drift > k as u64 {
                    r.drift_violations += 1;
                }
            }
            r
        })
        .collect();
    chunks.into_iter().fold(
        MacReport { lists: 0, mismatches: 0, drift_violations: 0, max_drift: 0 },
        |a, b| MacReport {
            lists: a.lists + b.lists,
            mismatches: a.mismatches + b.mismatches,
            drift_violations: a.drift_violations + b.drift_violations,
            max_drift: a.max_drift.max(b.max_drift),
        },
    )
}
