//! Exact reference arithmetic for fixed-point fractions with denominator `M_F`.
//!
//! Everything here works on plain arbitrary-precision integers and
//! rationals. Nothing in this crate knows about residues, moduli sets or
//! mixed-radix digits, so it can be used to check the residue code paths
//! without sharing any of their machinery.

#![no_std]

extern crate alloc;

use alloc::vec::Vec;
use core::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{Signed, Zero};

pub use num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("scale must be positive")]
    ZeroScale,
}

/// An exact fixed-point value `numerator / denominator`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactFixed {
    pub numerator: BigInt,
    pub denominator: BigUint,
}

impl ExactFixed {
    pub fn new(numerator: BigInt, denominator: BigUint) -> Result<Self, OracleError> {
        if denominator.is_zero() {
            return Err(OracleError::ZeroScale);
        }
        Ok(ExactFixed { numerator, denominator })
    }

    /// Rounds `value` onto the grid `k / scale`.
    pub fn encode(value: &BigRational, scale: &BigUint) -> Result<Self, OracleError> {
        if scale.is_zero() {
            return Err(OracleError::ZeroScale);
        }
        Ok(ExactFixed {
            numerator: oracle_encode(value, scale),
            denominator: scale.clone(),
        })
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(
            self.numerator.clone(),
            BigInt::from_biguint(Sign::Plus, self.denominator.clone()),
        )
    }

    pub fn is_negative(&self) -> bool {
        self.numerator.is_negative()
    }
}

impl fmt::Display for ExactFixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

fn scale_int(scale: &BigUint) -> BigInt {
    BigInt::from_biguint(Sign::Plus, scale.clone())
}

/// `round(value * scale)`, ties rounded away from zero.
pub fn oracle_encode(value: &BigRational, scale: &BigUint) -> BigInt {
    let num = value.numer() * scale_int(scale);
    let den = value.denom().clone();
    let two = BigInt::from(2u8);
    // floor((2|n| + d) / 2d) == round-half-up of |n|/d
    let mag = (num.abs() * &two + &den).div_floor(&(den * two));
    if num.is_negative() {
        -mag
    } else {
        mag
    }
}

/// `sign(x) * floor(|x| / scale)`.
pub fn oracle_normalize(x: &BigInt, scale: &BigUint) -> BigInt {
    let q = x.abs().div_floor(&scale_int(scale));
    if x.is_negative() {
        -q
    } else {
        q
    }
}

/// Exact dot product of fixed-point numerators, normalized once.
pub fn oracle_dot(w_row: &[BigInt], x: &[BigInt], scale: &BigUint) -> Result<BigInt, OracleError> {
    if w_row.len() != x.len() {
        return Err(OracleError::DimensionMismatch {
            expected: w_row.len(),
            found: x.len(),
        });
    }
    let sum: BigInt = w_row.iter().zip(x).map(|(a, b)| a * b).sum();
    Ok(oracle_normalize(&sum, scale))
}

/// `relu(W x)` on fixed-point numerators with a single deferred
/// normalization per output. Inputs and outputs are numerators over `scale`.
pub fn oracle_matmul_relu(
    w: &[Vec<BigInt>],
    x: &[BigInt],
    scale: &BigUint,
) -> Result<Vec<BigInt>, OracleError> {
    w.iter()
        .map(|row| {
            let v = oracle_dot(row, x, scale)?;
            Ok(if v.is_negative() { BigInt::zero() } else { v })
        })
        .collect()
}

/// Same as [`oracle_matmul_relu`] without the activation.
pub fn oracle_matmul(
    w: &[Vec<BigInt>],
    x: &[BigInt],
    scale: &BigUint,
) -> Result<Vec<BigInt>, OracleError> {
    w.iter().map(|row| oracle_dot(row, x, scale)).collect()
}

/// Iterations before `z <- z^2 + c` escapes `|z|^2 > 4`.
///
/// `cx` and `cy` are numerators over `scale`. Each update normalizes the
/// raw product sums once (truncating toward zero) and the escape test is
/// done on the unnormalized squares against `4 * scale^2`. Returns
/// `max_iter` for orbits that stay bounded.
pub fn oracle_escape_count(cx: &BigInt, cy: &BigInt, max_iter: u32, scale: &BigUint) -> u32 {
    let s = scale_int(scale);
    let threshold = BigInt::from(4u8) * &s * &s;
    let mut x = BigInt::zero();
    let mut y = BigInt::zero();
    for n in 1..=max_iter {
        let xx = &x * &x;
        let yy = &y * &y;
        let xy = &x * &y;
        let nx = oracle_normalize(&(xx - yy), scale) + cx;
        let ny = oracle_normalize(&(xy * BigInt::from(2u8)), scale) + cy;
        x = nx;
        y = ny;
        if &x * &x + &y * &y > threshold {
            return n;
        }
    }
    max_iter
}

/// Rectangular region of the complex plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Viewport {
    pub x_min: BigRational,
    pub x_max: BigRational,
    pub y_min: BigRational,
    pub y_max: BigRational,
}

impl Viewport {
    /// Exact point for pixel `(px, py)`; row 0 is `y_max`.
    pub fn point(&self, px: u32, py: u32, width: u32, height: u32) -> (BigRational, BigRational) {
        let fx = BigRational::new(BigInt::from(px), BigInt::from(width));
        let fy = BigRational::new(BigInt::from(py), BigInt::from(height));
        let x = &self.x_min + (&self.x_max - &self.x_min) * fx;
        let y = &self.y_max - (&self.y_max - &self.y_min) * fy;
        (x, y)
    }
}

/// Row-major grid of escape counts.
pub fn oracle_mandelbrot(
    width: u32,
    height: u32,
    viewport: &Viewport,
    max_iter: u32,
    scale: &BigUint,
) -> Vec<u32> {
    let mut out = Vec::with_capacity(width as usize * height as usize);
    for py in 0..height {
        for px in 0..width {
            out.push(oracle_pixel(px, py, width, height, viewport, max_iter, scale));
        }
    }
    out
}

/// Escape count of a single pixel of [`oracle_mandelbrot`].
pub fn oracle_pixel(
    px: u32,
    py: u32,
    width: u32,
    height: u32,
    viewport: &Viewport,
    max_iter: u32,
    scale: &BigUint,
) -> u32 {
    let (x, y) = viewport.point(px, py, width, height);
    let cx = oracle_encode(&x, scale);
    let cy = oracle_encode(&y, scale);
    oracle_escape_count(&cx, &cy, max_iter, scale)
}
