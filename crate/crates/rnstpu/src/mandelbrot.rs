//! Mandelbrot renderer whose complex arithmetic runs entirely on residue
//! fractions. Only the iteration counter is an ordinary integer.

use num_traits::Signed;
use rayon::prelude::*;
use rnstpu_core::{
    mac_capacity_check, parse_rational, BigRational, CycleMeter, ModuliSet, RawProduct, RnsFixed,
};
use std::cmp::Ordering;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Viewport {
    pub x_min: BigRational,
    pub x_max: BigRational,
    pub y_min: BigRational,
    pub y_max: BigRational,
}

impl Default for Viewport {
    fn default() -> Self {
        let q = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        Viewport { x_min: q(-2, 1), x_max: q(1, 1), y_min: q(-5, 4), y_max: q(5, 4) }
    }
}

impl Viewport {
    /// Parses `xmin,xmax,ymin,ymax`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Error::Invalid(format!("viewport needs 4 values, got {}", parts.len())));
        }
        let v = parts.iter().map(|p| parse_rational(p)).collect::<Result<Vec<_>, _>>()?;
        if v[0] >= v[1] || v[2] >= v[3] {
            return Err(Error::Invalid("viewport bounds must be increasing".into()));
        }
        Ok(Viewport { x_min: v[0].clone(), x_max: v[1].clone(), y_min: v[2].clone(), y_max: v[3].clone() })
    }

    /// Point sampled by pixel `(px, py)`: the pixel's top-left corner, with
    /// row 0 at `y_max`.
    pub fn point(&self, px: u32, py: u32, width: u32, height: u32) -> (BigRational, BigRational) {
        let fx = BigRational::new(px.into(), width.into());
        let fy = BigRational::new(py.into(), height.into());
        (
            &self.x_min + (&self.x_max - &self.x_min) * fx,
            &self.y_max - (&self.y_max - &self.y_min) * fy,
        )
    }

    /// Largest `|c|` over the viewport corners.
    pub fn max_modulus(&self) -> BigRational {
        let ax = self.x_min.abs().max(self.x_max.abs());
        let ay = self.y_min.abs().max(self.y_max.abs());
        // |c| <= |x| + |y|; cheap and exact
        ax + ay
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Render {
    pub width: u32,
    pub height: u32,
    pub max_iter: u32,
    /// Row-major escape counts.
    pub counts: Vec<u32>,
    /// Summed clock cost of all residue operations.
    pub cycles: u64,
}

impl Render {
    pub fn gray(&self) -> Vec<u8> {
        self.counts.iter().map(|&c| crate::io::gray(c, self.max_iter)).collect()
    }

    pub fn pgm(&self) -> Vec<u8> {
        crate::io::encode_pgm(self.width, self.height, &self.gray())
    }
}

fn q(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Rejects sets too narrow for the orbit arithmetic.
///
/// While iterating, `|x|, |y| <= 2` and the three product terms must fit.
/// The escape test squares the step that may leave the disk, where each
/// coordinate is bounded by `4 + |c|`.
pub fn check_capacity(set: &ModuliSet, viewport: &Viewport) -> Result<()> {
    mac_capacity_check(set, 3, &q(2), &q(2)).map_err(rnstpu_core::RnsError::from)?;
    let escape = q(4) + viewport.max_modulus();
    mac_capacity_check(set, 2, &escape, &escape).map_err(rnstpu_core::RnsError::from)?;
    Ok(())
}

/// Escape count for `c = (cx, cy)`, tallying residue clock cost in `meter`.
pub fn escape_count(
    cx: &RnsFixed,
    cy: &RnsFixed,
    four: &RawProduct,
    max_iter: u32,
    meter: &mut CycleMeter,
) -> Result<u32> {
    let set = cx.set();
    let mut x = RnsFixed::zero(set);
    let mut y = RnsFixed::zero(set);
    for n in 1..=max_iter {
        let xx = meter.multiply_raw(&x, &x)?;
        let yy = meter.multiply_raw(&y, &y)?;
        let xy = meter.multiply_raw(&x, &y)?;
        let re = meter.deduct(&xx, &yy)?;
        let im = meter.accumulate(&xy, &xy)?;
        let re = meter.normalize(&re)?;
        let im = meter.normalize(&im)?;
        x = meter.add(&re, cx)?;
        y = meter.add(&im, cy)?;
        let xx = meter.multiply_raw(&x, &x)?;
        let yy = meter.multiply_raw(&y, &y)?;
        let r2 = meter.accumulate(&xx, &yy)?;
        if meter.compare_raw(&r2, four)? == Ordering::Greater {
            return Ok(n);
        }
    }
    Ok(max_iter)
}

/// Renders the viewport. Pixels are spread over the rayon pool; the result
/// does not depend on the pool size.
pub fn render(set: &ModuliSet, width: u32, height: u32, viewport: &Viewport, max_iter: u32) -> Result<Render> {
    if width == 0 || height == 0 {
        return Err(Error::Invalid("image dimensions must be positive".into()));
    }
    if max_iter == 0 {
        return Err(Error::Invalid("max-iter must be at least 1".into()));
    }
    check_capacity(set, viewport)?;
    let four = RawProduct::from_value(&q(4), set)?;
    let pixels: Vec<(u32, u64)> = (0..width * height)
        .into_par_iter()
        .map(|i| {
            let (px, py) = (i % width, i / width);
            let (x, y) = viewport.point(px, py, width, height);
            let cx = RnsFixed::encode(&x, set)?;
            let cy = RnsFixed::encode(&y, set)?;
            let mut meter = CycleMeter::new(set);
            let n = escape_count(&cx, &cy, &four, max_iter, &mut meter)?;
            Ok((n, meter.cycles()))
        })
        .collect::<Result<_>>()?;
    Ok(Render {
        width,
        height,
        max_iter,
        counts: pixels.iter().map(|p| p.0).collect(),
        cycles: pixels.iter().map(|p| p.1).sum(),
    })
}

/// Pixels whose counts differ from the exact integer reference, as
/// `(x, y, rns, oracle)`.
pub fn oracle_diff(set: &ModuliSet, viewport: &Viewport, r: &Render) -> Vec<(u32, u32, u32, u32)> {
    let vp = rnstpu_oracle::Viewport {
        x_min: viewport.x_min.clone(),
        x_max: viewport.x_max.clone(),
        y_min: viewport.y_min.clone(),
        y_max: viewport.y_max.clone(),
    };
    let scale = set.frac_range();
    (0..r.width * r.height)
        .into_par_iter()
        .filter_map(|i| {
            let (px, py) = (i % r.width, i / r.width);
            let want = rnstpu_oracle::oracle_pixel(px, py, r.width, r.height, &vp, r.max_iter, scale);
            let got = r.counts[i as usize];
            (want != got).then_some((px, py, got, want))
        })
        .collect()
}

/// Escape count for a single point, for spot checks.
pub fn point_count(set: &ModuliSet, cx: &BigRational, cy: &BigRational, max_iter: u32) -> Result<u32> {
    let four = RawProduct::from_value(&q(4), set)?;
    let mut meter = CycleMeter::new(set);
    escape_count(&RnsFixed::encode(cx, set)?, &RnsFixed::encode(cy, set)?, &four, max_iter, &mut meter)
}
