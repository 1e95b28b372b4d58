//! Fractional fixed-point arithmetic on residue integers.
//!
//! A raw residue integer `X` stands for `X / M_F`, with raw values at or
//! above `ceil(M/2)` read as negative (`(X - M) / M_F`). Addition,
//! subtraction, negation, integer scaling and raw multiplication are
//! digit-parallel. Only [`RawProduct::normalize`] needs the digits to talk
//! to each other.
//!
//! Nothing here traps on overflow: values wrap modulo `M` like the modeled
//! hardware does. [`mac_capacity_check`] tells a caller whether a product
//! sum is guaranteed to stay inside the signed range.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Result, RnsError};
use crate::moduli::{digit_neg, ModuliSet};
use crate::rns::{compare_mixed, horner_mod, mixed_radix, RnsInt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Signum {
    Negative,
    Zero,
    Positive,
}

impl Signum {
    pub fn as_i8(self) -> i8 {
        match self {
            Signum::Negative => -1,
            Signum::Zero => 0,
            Signum::Positive => 1,
        }
    }
}

/// Signed fixed-point fraction `X / M_F` in residue form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RnsFixed {
    raw: RnsInt,
}

/// A product sum that has not been rescaled yet.
///
/// `scale_exponent` is 1 for a value at scale `M_F` and 2 for a raw product
/// at scale `M_F^2`. Values with different exponents never mix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawProduct {
    raw: RnsInt,
    scale_exponent: u8,
}

/// Exact decoded value `numerator / denominator`, where the denominator is
/// the `M_F` of the originating set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedValue {
    pub numerator: BigInt,
    pub denominator: BigUint,
}

fn to_int(x: &BigUint) -> BigInt {
    BigInt::from_biguint(Sign::Plus, x.clone())
}

/// Parses a decimal (`-1.25`, `3`, `2.5e-3`) or a ratio (`-7/3`).
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let err = || RnsError::Parse(text.to_string());
    let s = text.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| err())?),
        None => (s, 0),
    };
    let (negative, body) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(err());
    }
    let mut digits = String::with_capacity(int_part.len() + frac_part.len());
    digits.push_str(int_part);
    digits.push_str(frac_part);
    let mut numer: BigInt = digits.parse().map_err(|_| err())?;
    if negative {
        numer = -numer;
    }
    let shift = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u8);
    let pow = num_traits::pow(ten, shift.unsigned_abs() as usize);
    Ok(if shift >= 0 {
        BigRational::from_integer(numer * pow)
    } else {
        BigRational::new(numer, pow)
    })
}

/// `round(value * scale)` with ties away from zero.
fn round_scaled(value: &BigRational, scale: &BigUint) -> BigInt {
    let num = value.numer() * to_int(scale);
    let den = value.denom();
    let (q, r) = num.abs().div_rem(den);
    let mag = if r * 2u8 >= *den { q + 1u8 } else { q };
    if num.is_negative() {
        -mag
    } else {
        mag
    }
}

fn signed_in_range(x: &BigInt, set: &ModuliSet) -> bool {
    if x.is_negative() {
        // -floor(M/2) is the most negative value
        x.magnitude() <= &(set.range() >> 1)
    } else {
        x.magnitude() < set.half_range()
    }
}

impl RnsFixed {
    /// Encodes `value` as `round(value * M_F)`, ties away from zero.
    pub fn encode(value: &BigRational, set: &ModuliSet) -> Result<Self> {
        let x = round_scaled(value, set.frac_range());
        Self::from_scaled(&x, set)
    }

    pub fn encode_str(text: &str, set: &ModuliSet) -> Result<Self> {
        Self::encode(&parse_rational(text)?, set)
    }

    /// Wraps an already scaled signed numerator `k` (value `k / M_F`).
    pub fn from_scaled(k: &BigInt, set: &ModuliSet) -> Result<Self> {
        if !signed_in_range(k, set) {
            return Err(RnsError::OutOfRange);
        }
        Ok(RnsFixed { raw: RnsInt::encode_signed(k, set) })
    }

    pub fn from_raw(raw: RnsInt) -> Self {
        RnsFixed { raw }
    }

    pub fn zero(set: &ModuliSet) -> Self {
        RnsFixed { raw: RnsInt::zero(set) }
    }

    pub fn one(set: &ModuliSet) -> Self {
        RnsFixed { raw: RnsInt::encode(set.frac_range(), set) }
    }

    pub fn raw(&self) -> &RnsInt {
        &self.raw
    }

    pub fn into_raw(self) -> RnsInt {
        self.raw
    }

    pub fn set(&self) -> &ModuliSet {
        self.raw.set()
    }

    pub fn digits(&self) -> &[u32] {
        self.raw.digits()
    }

    /// The signed numerator `k` of `k / M_F`.
    pub fn scaled(&self) -> BigInt {
        self.raw.decode_signed()
    }

    pub fn decode(&self) -> FixedValue {
        FixedValue { numerator: self.scaled(), denominator: self.set().frac_range().clone() }
    }

    pub fn add(&self, other: &RnsFixed) -> Result<RnsFixed> {
        Ok(RnsFixed { raw: self.raw.add(&other.raw)? })
    }

    pub fn sub(&self, other: &RnsFixed) -> Result<RnsFixed> {
        Ok(RnsFixed { raw: self.raw.sub(&other.raw)? })
    }

    pub fn neg(&self) -> RnsFixed {
        RnsFixed { raw: self.raw.neg() }
    }

    /// Multiplies by an integer held in residue form (negative integers in
    /// complement form, see [`RnsInt::from_i64`]).
    pub fn scale_by_integer(&self, k: &RnsInt) -> Result<RnsFixed> {
        Ok(RnsFixed { raw: self.raw.mul(k)? })
    }

    /// Digit-parallel product at scale `M_F^2`.
    pub fn multiply_raw(&self, other: &RnsFixed) -> Result<RawProduct> {
        Ok(RawProduct { raw: self.raw.mul(&other.raw)?, scale_exponent: 2 })
    }

    /// Raw multiply followed by normalization.
    pub fn multiply(&self, other: &RnsFixed) -> Result<RnsFixed> {
        self.multiply_raw(other)?.normalize()
    }

    pub fn sign(&self) -> Signum {
        if self.raw.is_zero() {
            Signum::Zero
        } else if self.raw.is_negative() {
            Signum::Negative
        } else {
            Signum::Positive
        }
    }

    pub fn compare_signed(&self, other: &RnsFixed) -> Result<Ordering> {
        compare_signed_raw(&self.raw, &other.raw)
    }

    /// Lifts this value to a scale-1 [`RawProduct`].
    pub fn into_product(self) -> RawProduct {
        RawProduct { raw: self.raw, scale_exponent: 1 }
    }
}

fn compare_signed_raw(a: &RnsInt, b: &RnsInt) -> Result<Ordering> {
    a.set().check_same(b.set())?;
    let sa = a.is_negative();
    let sb = b.is_negative();
    // within one sign class the raw order is the signed order
    Ok(match (sa, sb) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        _ => a.compare_unsigned(b)?,
    })
}

impl RawProduct {
    /// Empty accumulator at scale `M_F^2`.
    pub fn zero(set: &ModuliSet) -> Self {
        RawProduct { raw: RnsInt::zero(set), scale_exponent: 2 }
    }

    pub fn new(raw: RnsInt, scale_exponent: u8) -> Result<Self> {
        if !(1..=2).contains(&scale_exponent) {
            return Err(RnsError::ScaleMismatch);
        }
        Ok(RawProduct { raw, scale_exponent })
    }

    /// `c * M_F^2` in raw form, for comparing product sums against a constant.
    pub fn from_value(value: &BigRational, set: &ModuliSet) -> Result<Self> {
        let f = set.frac_range();
        let x = round_scaled(value, &(f * f));
        if !signed_in_range(&x, set) {
            return Err(RnsError::OutOfRange);
        }
        Ok(RawProduct { raw: RnsInt::encode_signed(&x, set), scale_exponent: 2 })
    }

    pub fn raw(&self) -> &RnsInt {
        &self.raw
    }

    pub fn scale_exponent(&self) -> u8 {
        self.scale_exponent
    }

    pub fn set(&self) -> &ModuliSet {
        self.raw.set()
    }

    fn check_compatible(&self, other: &RawProduct) -> Result<()> {
        self.set().check_same(other.set())?;
        if self.scale_exponent != other.scale_exponent {
            return Err(RnsError::ScaleMismatch);
        }
        Ok(())
    }

    pub fn accumulate(&self, term: &RawProduct) -> Result<RawProduct> {
        self.check_compatible(term)?;
        Ok(RawProduct { raw: self.raw.add(&term.raw)?, scale_exponent: self.scale_exponent })
    }

    pub fn subtract(&self, term: &RawProduct) -> Result<RawProduct> {
        self.check_compatible(term)?;
        Ok(RawProduct { raw: self.raw.sub(&term.raw)?, scale_exponent: self.scale_exponent })
    }

    pub fn compare_signed(&self, other: &RawProduct) -> Result<Ordering> {
        self.check_compatible(other)?;
        compare_signed_raw(&self.raw, &other.raw)
    }

    /// Signed raw numerator over `M_F^scale_exponent`.
    pub fn decode_signed(&self) -> BigInt {
        self.raw.decode_signed()
    }

    /// Divides by `M_F`, truncating toward zero.
    pub fn normalize(&self) -> Result<RnsFixed> {
        self.normalize_with_sign().map(|(v, _)| v)
    }

    /// Normalizes and also reports the sign of the unnormalized value, which
    /// falls out of the same mixed-radix pass.
    ///
    /// The sign comes from comparing the mixed-radix digits with those of
    /// `ceil(M/2)`. Negative values are complemented to their magnitude.
    /// Since the fractional moduli are eliminated first, dropping the lowest
    /// `frac_count` mixed-radix digits divides by `M_F`; the remaining digits
    /// are evaluated modulo every modulus to re-extend the quotient.
    pub fn normalize_with_sign(&self) -> Result<(RnsFixed, Signum)> {
        if self.scale_exponent != 2 {
            return Err(RnsError::ScaleMismatch);
        }
        let set = self.set();
        let digits = self.raw.digits();
        let mr = mixed_radix(digits, set);
        let negative = compare_mixed(&mr, set.half_mixed_radix()) != Ordering::Less;
        let sign = if negative {
            Signum::Negative
        } else if self.raw.is_zero() {
            Signum::Zero
        } else {
            Signum::Positive
        };
        let magnitude = if negative {
            let neg: Vec<u32> =
                digits.iter().zip(set.moduli()).map(|(&d, &m)| digit_neg(d, m)).collect();
            mixed_radix(&neg, set)
        } else {
            mr
        };
        let f = set.frac_count();
        let whole_radices = &set.radices()[f..];
        let quotient = &magnitude[f..];
        let out = set
            .moduli()
            .iter()
            .map(|&m| {
                let q = horner_mod(quotient, whole_radices, m);
                if negative {
                    digit_neg(q, m)
                } else {
                    q
                }
            })
            .collect();
        Ok((RnsFixed { raw: RnsInt::from_digits_unchecked(set, out) }, sign))
    }
}

impl FixedValue {
    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.numerator.clone(), to_int(&self.denominator))
    }

    pub fn is_negative(&self) -> bool {
        self.numerator.is_negative()
    }

    /// Decimal rendering with `places` fractional digits, rounded half away
    /// from zero. Always uses `.` and no grouping.
    pub fn to_decimal(&self, places: usize) -> String {
        let ten = BigUint::from(10u8);
        let pow = num_traits::pow(ten, places);
        let mag = self.numerator.magnitude() * &pow;
        let (q, r) = mag.div_rem(&self.denominator);
        let q = if &r * 2u8 >= self.denominator { q + 1u8 } else { q };
        let (int_part, frac_part) = q.div_rem(&pow);
        let mut out = String::new();
        if self.numerator.is_negative() && !(int_part.is_zero() && frac_part.is_zero()) {
            out.push('-');
        }
        out.push_str(&int_part.to_string());
        if places > 0 {
            let frac = frac_part.to_string();
            out.push('.');
            for _ in frac.len()..places {
                out.push('0');
            }
            out.push_str(&frac);
        }
        out
    }
}

impl fmt::Display for FixedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

/// The two sides of a failed [`mac_capacity_check`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapacityViolation {
    pub terms: u64,
    /// `K * (bx * M_F + 1) * (by * M_F + 1)`
    pub required: BigRational,
    /// `(M - 1) / 2`
    pub available: BigRational,
}

impl fmt::Display for CapacityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} terms need {} but only {} is available",
            self.terms, self.required, self.available
        )
    }
}

/// Checks that a sum of `terms` products with `|x| <= bound_x` and
/// `|y| <= bound_y` stays inside the signed range. Each bound gets one
/// extra raw unit for encoding rounding.
#[allow(clippy::result_large_err)]
pub fn mac_capacity_check(
    set: &ModuliSet,
    terms: u64,
    bound_x: &BigRational,
    bound_y: &BigRational,
) -> core::result::Result<(), CapacityViolation> {
    let mf = BigRational::from_integer(to_int(set.frac_range()));
    let one = BigRational::one();
    let required = BigRational::from_integer(BigInt::from(terms))
        * (bound_x.abs() * &mf + &one)
        * (bound_y.abs() * &mf + &one);
    let available = BigRational::new(to_int(set.range()) - 1, BigInt::from(2u8));
    if terms == 0 || required <= available {
        Ok(())
    } else {
        Err(CapacityViolation { terms, required, available })
    }
}
