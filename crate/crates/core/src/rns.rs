//! Residue integers: conversion, CRT reconstruction, mixed-radix
//! conversion, base extension and unsigned comparison.

use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Result, RnsError};
use crate::moduli::{digit_add, digit_mul, digit_neg, digit_sub, ModuliSet};

/// An integer in `[0, M)` held as one residue per modulus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RnsInt {
    digits: Vec<u32>,
    set: ModuliSet,
}

/// Positional digits `d_0 + d_1 r_1 + d_2 r_1 r_2 + ...` where the radices
/// `r_i` are the moduli in elimination order (see
/// [`ModuliSet::radices`]). That is the declared order unless the set
/// names fractional moduli that are not a prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedRadixDigits {
    digits: Vec<u32>,
    set: ModuliSet,
}

/// Evaluates a mixed-radix number modulo `m` by Horner's rule.
pub(crate) fn horner_mod(digits: &[u32], radices: &[u32], m: u32) -> u32 {
    debug_assert_eq!(digits.len(), radices.len());
    digits
        .iter()
        .zip(radices)
        .rev()
        .fold(0u32, |acc, (&d, &r)| digit_add(digit_mul(acc, r % m, m), d % m, m))
}

/// Sequential elimination: peel off the lowest residue, subtract it from
/// every remaining digit and divide them by its modulus. `D - 1` steps.
pub(crate) fn mixed_radix(residues: &[u32], set: &ModuliSet) -> Vec<u32> {
    let radices = set.radices();
    let n = radices.len();
    let mut work: Vec<u32> = set.elimination_order().iter().map(|&i| residues[i]).collect();
    for a in 0..n {
        let d = work[a];
        for b in a + 1..n {
            let m = radices[b];
            work[b] = digit_mul(digit_sub(work[b], d % m, m), set.mrc_inverse(a, b), m);
        }
    }
    work
}

/// Lexicographic comparison from the most significant mixed-radix digit.
pub(crate) fn compare_mixed(a: &[u32], b: &[u32]) -> Ordering {
    a.iter().rev().cmp(b.iter().rev())
}

impl RnsInt {
    pub fn from_digits(set: &ModuliSet, digits: Vec<u32>) -> Result<Self> {
        if digits.len() != set.len() {
            return Err(RnsError::DigitCount { expected: set.len(), found: digits.len() });
        }
        if let Some(index) = digits.iter().zip(set.moduli()).position(|(&d, &m)| d >= m) {
            return Err(RnsError::DigitOutOfRange { index });
        }
        Ok(RnsInt { digits, set: set.clone() })
    }

    pub(crate) fn from_digits_unchecked(set: &ModuliSet, digits: Vec<u32>) -> Self {
        debug_assert!(digits.iter().zip(set.moduli()).all(|(&d, &m)| d < m));
        RnsInt { digits, set: set.clone() }
    }

    pub fn zero(set: &ModuliSet) -> Self {
        RnsInt { digits: alloc::vec![0; set.len()], set: set.clone() }
    }

    /// Residues of `x mod M`.
    pub fn encode(x: &BigUint, set: &ModuliSet) -> Self {
        let digits = set
            .moduli()
            .iter()
            .map(|&m| (x % m).to_u32().expect("residue fits"))
            .collect();
        RnsInt { digits, set: set.clone() }
    }

    /// Residues of `x mod M` for a signed `x`; negatives land at `M - |x|`.
    pub fn encode_signed(x: &BigInt, set: &ModuliSet) -> Self {
        let digits = set
            .moduli()
            .iter()
            .map(|&m| x.mod_floor(&BigInt::from(m)).to_u32().expect("residue fits"))
            .collect();
        RnsInt { digits, set: set.clone() }
    }

    pub fn from_u64(x: u64, set: &ModuliSet) -> Self {
        let digits = set.moduli().iter().map(|&m| (x % m as u64) as u32).collect();
        RnsInt { digits, set: set.clone() }
    }

    pub fn from_i64(x: i64, set: &ModuliSet) -> Self {
        let digits = set
            .moduli()
            .iter()
            .map(|&m| x.rem_euclid(m as i64) as u32)
            .collect();
        RnsInt { digits, set: set.clone() }
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn into_digits(self) -> Vec<u32> {
        self.digits
    }

    pub fn set(&self) -> &ModuliSet {
        &self.set
    }

    pub fn is_zero(&self) -> bool {
        self.digits.iter().all(|&d| d == 0)
    }

    /// CRT reconstruction: `sum(r_i * inv_i mod m_i * M/m_i) mod M`.
    pub fn decode(&self) -> BigUint {
        let set = &self.set;
        let sum = self.digits.iter().enumerate().fold(BigUint::zero(), |acc, (i, &r)| {
            let m = set.modulus(i);
            let coeff = digit_mul(r, set.crt_inverse(i), m);
            acc + set.crt_weight(i) * coeff
        });
        sum % set.range()
    }

    /// Signed reading with the method of complements: raw values at or
    /// above `ceil(M/2)` are `X - M`.
    pub fn decode_signed(&self) -> BigInt {
        let x = self.decode();
        if x >= *self.set.half_range() {
            BigInt::from_biguint(Sign::Plus, x) - BigInt::from_biguint(Sign::Plus, self.set.range().clone())
        } else {
            BigInt::from_biguint(Sign::Plus, x)
        }
    }

    pub fn to_mixed_radix(&self) -> MixedRadixDigits {
        MixedRadixDigits { digits: mixed_radix(&self.digits, &self.set), set: self.set.clone() }
    }

    pub fn from_mixed_radix(d: &MixedRadixDigits) -> RnsInt {
        let set = &d.set;
        let digits = set
            .moduli()
            .iter()
            .map(|&m| horner_mod(&d.digits, set.radices(), m))
            .collect();
        RnsInt { digits, set: set.clone() }
    }

    fn zip_with(&self, other: &RnsInt, f: impl Fn(u32, u32, u32) -> u32) -> Result<RnsInt> {
        self.set.check_same(&other.set)?;
        let digits = self
            .digits
            .iter()
            .zip(&other.digits)
            .zip(self.set.moduli())
            .map(|((&a, &b), &m)| f(a, b, m))
            .collect();
        Ok(RnsInt { digits, set: self.set.clone() })
    }

    pub fn add(&self, other: &RnsInt) -> Result<RnsInt> {
        self.zip_with(other, digit_add)
    }

    pub fn sub(&self, other: &RnsInt) -> Result<RnsInt> {
        self.zip_with(other, digit_sub)
    }

    pub fn mul(&self, other: &RnsInt) -> Result<RnsInt> {
        self.zip_with(other, digit_mul)
    }

    pub fn neg(&self) -> RnsInt {
        let digits = self
            .digits
            .iter()
            .zip(self.set.moduli())
            .map(|(&a, &m)| digit_neg(a, m))
            .collect();
        RnsInt { digits, set: self.set.clone() }
    }

    /// Orders the represented integers in `[0, M)`.
    pub fn compare_unsigned(&self, other: &RnsInt) -> Result<Ordering> {
        self.set.check_same(&other.set)?;
        Ok(compare_mixed(
            &mixed_radix(&self.digits, &self.set),
            &mixed_radix(&other.digits, &other.set),
        ))
    }

    /// True if the raw value is at least `ceil(M/2)`.
    pub fn is_negative(&self) -> bool {
        let mr = mixed_radix(&self.digits, &self.set);
        compare_mixed(&mr, self.set.half_mixed_radix()) != Ordering::Less
    }

    /// Re-expresses this value over `target`, whose moduli must include
    /// every modulus of this value's set. Digits for the new moduli come
    /// from the mixed-radix form over the source set.
    pub fn base_extend(&self, target: &ModuliSet) -> Result<RnsInt> {
        let source = self.set.moduli();
        for &m in source {
            if target.position(m).is_none() {
                return Err(RnsError::ModulusMismatch(m));
            }
        }
        let mr = mixed_radix(&self.digits, &self.set);
        let digits = target
            .moduli()
            .iter()
            .map(|&m| match source.iter().position(|&s| s == m) {
                Some(i) => self.digits[i],
                None => horner_mod(&mr, self.set.radices(), m),
            })
            .collect();
        Ok(RnsInt { digits, set: target.clone() })
    }

    /// Drops digits for moduli that `subset` does not carry.
    pub fn restrict(&self, subset: &ModuliSet) -> Result<RnsInt> {
        let digits = subset
            .moduli()
            .iter()
            .map(|&m| {
                self.set
                    .position(m)
                    .map(|i| self.digits[i])
                    .ok_or(RnsError::ModulusMismatch(m))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RnsInt { digits, set: subset.clone() })
    }
}

impl MixedRadixDigits {
    pub fn new(set: &ModuliSet, digits: Vec<u32>) -> Result<Self> {
        if digits.len() != set.len() {
            return Err(RnsError::DigitCount { expected: set.len(), found: digits.len() });
        }
        if let Some(index) = digits.iter().zip(set.radices()).position(|(&d, &m)| d >= m) {
            return Err(RnsError::DigitOutOfRange { index });
        }
        Ok(MixedRadixDigits { digits, set: set.clone() })
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn set(&self) -> &ModuliSet {
        &self.set
    }

    /// Positional value, computed with big integers.
    pub fn reconstruct(&self) -> BigUint {
        self.digits
            .iter()
            .zip(self.set.radices())
            .rev()
            .fold(BigUint::zero(), |acc, (&d, &m)| acc * m + d)
    }

    pub fn to_rns(&self) -> RnsInt {
        RnsInt::from_mixed_radix(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn s357() -> ModuliSet {
        ModuliSet::new(&[3, 5, 7], 1, 8).unwrap()
    }

    fn enc(x: u64, set: &ModuliSet) -> RnsInt {
        RnsInt::from_u64(x, set)
    }

    #[test]
    fn encode_examples() {
        let s = s357();
        assert_eq!(enc(23, &s).digits(), &[2, 3, 2]);
        assert_eq!(enc(0, &s).digits(), &[0, 0, 0]);
        assert_eq!(enc(107, &s).digits(), &[2, 2, 2]);
        assert_eq!(RnsInt::encode(&BigUint::from(107u32), &s).digits(), &[2, 2, 2]);
        assert_eq!(RnsInt::encode_signed(&BigInt::from(-1), &s).digits(), &[2, 4, 6]);
    }

    #[test]
    fn decode_examples() {
        let s = s357();
        let d = |v: Vec<u32>| RnsInt::from_digits(&s, v).unwrap().decode();
        assert_eq!(d(vec![2, 3, 2]), BigUint::from(23u32));
        assert_eq!(d(vec![0, 0, 0]), BigUint::zero());
        assert_eq!(d(vec![1, 1, 1]), BigUint::from(1u32));
    }

    #[test]
    fn from_digits_validates() {
        let s = s357();
        assert_eq!(
            RnsInt::from_digits(&s, vec![3, 0, 0]).unwrap_err(),
            RnsError::DigitOutOfRange { index: 0 }
        );
        assert_eq!(
            RnsInt::from_digits(&s, vec![0, 0]).unwrap_err(),
            RnsError::DigitCount { expected: 3, found: 2 }
        );
    }

    #[test]
    fn mixed_radix_examples() {
        let s = s357();
        assert_eq!(enc(23, &s).to_mixed_radix().digits(), &[2, 2, 1]);
        assert_eq!(enc(0, &s).to_mixed_radix().digits(), &[0, 0, 0]);
        assert_eq!(enc(107, &s).to_mixed_radix().digits(), &[2, 0, 0]);
        // 107 wraps to 2 mod 105; the unreduced form 2 + 7*15 is not a
        // valid digit vector since d_2 < 7.
        assert_eq!(
            MixedRadixDigits::new(&s, vec![2, 0, 7]).unwrap_err(),
            RnsError::DigitOutOfRange { index: 2 }
        );

        let m = MixedRadixDigits::new(&s, vec![2, 2, 1]).unwrap();
        assert_eq!(m.to_rns().digits(), &[2, 3, 2]);
        assert_eq!(m.reconstruct(), BigUint::from(23u32));
        let z = MixedRadixDigits::new(&s, vec![0, 0, 0]).unwrap();
        assert!(z.to_rns().is_zero());
    }

    #[test]
    fn base_extend_examples() {
        let s = s357();
        let t = ModuliSet::new(&[3, 5, 7, 11], 1, 8).unwrap();
        assert_eq!(enc(23, &s).base_extend(&t).unwrap().digits(), &[2, 3, 2, 1]);
        assert_eq!(enc(0, &s).base_extend(&t).unwrap().digits(), &[0, 0, 0, 0]);
        // 107 is held as 2 over {3,5,7}
        assert_eq!(enc(107, &s).base_extend(&t).unwrap().digits(), &[2, 2, 2, 2]);
        let u = ModuliSet::new(&[3, 5, 11], 1, 8).unwrap();
        assert_eq!(enc(1, &s).base_extend(&u).unwrap_err(), RnsError::ModulusMismatch(7));
        // non-prefix superset in a different order
        let v = ModuliSet::new(&[11, 7, 3, 13, 5], 1, 8).unwrap();
        assert_eq!(enc(104, &s).base_extend(&v).unwrap().digits(), &[5, 6, 2, 0, 4]);
    }

    #[test]
    fn permuted_elimination_order() {
        let s = ModuliSet::with_fractional(&[2, 3, 5, 7, 11, 13], &[5, 7], 8).unwrap();
        let x = enc(12345, &s);
        let mr = x.to_mixed_radix();
        // radices 5, 7, 2, 3, 11, 13: 12345 = 0 + 5*(... )
        assert_eq!(mr.digits()[0], 0);
        assert_eq!(mr.reconstruct(), BigUint::from(12345u32));
        assert_eq!(mr.to_rns(), x);
        assert_eq!(
            MixedRadixDigits::new(&s, vec![4, 6, 1, 2, 10, 12]).unwrap().reconstruct(),
            BigUint::from(30029u32)
        );
        let t = ModuliSet::with_fractional(&[2, 3, 5, 7, 11, 13, 17], &[5, 7], 8).unwrap();
        assert_eq!(x.base_extend(&t).unwrap().digits()[6], 12345 % 17);
    }

    #[test]
    fn compare_examples() {
        let s = s357();
        assert_eq!(enc(23, &s).compare_unsigned(&enc(8, &s)), Ok(Ordering::Greater));
        assert_eq!(enc(9, &s).compare_unsigned(&enc(9, &s)), Ok(Ordering::Equal));
        assert_eq!(enc(0, &s).compare_unsigned(&enc(1, &s)), Ok(Ordering::Less));
        let other = ModuliSet::new(&[3, 5, 7], 2, 8).unwrap();
        assert_eq!(enc(0, &s).compare_unsigned(&enc(0, &other)), Err(RnsError::SetMismatch));
    }

    #[test]
    fn negativity_threshold() {
        let s = s357();
        assert!(!enc(52, &s).is_negative());
        assert!(enc(53, &s).is_negative());
        let even = ModuliSet::new(&[2, 3, 5, 7], 2, 8).unwrap();
        assert!(!enc(104, &even).is_negative());
        assert!(enc(105, &even).is_negative());
        assert_eq!(enc(105, &even).decode_signed(), BigInt::from(-105));
    }
}
