//! Digit-slice systolic array model.
//!
//! Every modulus gets its own weight-stationary `N x N` multiply-accumulate
//! array. The arrays never exchange data: each one reduces its products and
//! sums modulo its own modulus. Only after the last accumulation do the
//! digits of each output meet again in the normalization and activation
//! unit, which is a `D`-stage pipeline producing one result per clock.
//!
//! Timing for an `N x N` array streaming `K` activation columns:
//!
//! ```text
//! compute       = K + 2N - 2     skewed feed in, drain out
//! normalization = D              pipeline latency after the last sum
//! activation    = 1 with ReLU, else 0
//! total         = compute + normalization + activation
//! ```
//!
//! Only the normalization latency depends on the word width `D`.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Result, RnsError};
use crate::fixed::{mac_capacity_check, FixedValue, RawProduct, RnsFixed, Signum};
use crate::moduli::{digit_add, digit_mul, ModuliSet};
use crate::rns::RnsInt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Activation {
    #[default]
    None,
    Relu,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystolicConfig {
    array_size: usize,
    set: ModuliSet,
    activation: Activation,
    model_conversion: bool,
}

impl SystolicConfig {
    pub fn new(array_size: usize, set: &ModuliSet, activation: Activation) -> Result<Self> {
        if array_size == 0 {
            return Err(RnsError::EmptyArray);
        }
        Ok(SystolicConfig { array_size, set: set.clone(), activation, model_conversion: false })
    }

    pub fn with_conversion(mut self, model_conversion: bool) -> Self {
        self.model_conversion = model_conversion;
        self
    }

    pub fn array_size(&self) -> usize {
        self.array_size
    }

    pub fn set(&self) -> &ModuliSet {
        &self.set
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn models_conversion(&self) -> bool {
        self.model_conversion
    }

    pub fn digit_slices(&self) -> usize {
        self.set.len()
    }

    pub fn norm_pipeline_depth(&self) -> usize {
        self.set.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CycleReport {
    /// Skew fill and drain, `2N - 2`. Included in `compute_cycles`.
    pub fill_cycles: u64,
    pub compute_cycles: u64,
    pub normalization_cycles: u64,
    pub activation_cycles: u64,
    pub total_cycles: u64,
    pub per_slice_cycles: Vec<u64>,
}

impl CycleReport {
    /// The timing contract for an `n x n` array, `k` columns, `d` digits.
    pub fn expected(n: usize, k: usize, d: usize, activation: Activation) -> Self {
        let (n, k, d) = (n as u64, k as u64, d as u64);
        let compute = k + 2 * n - 2;
        let act = matches!(activation, Activation::Relu) as u64;
        CycleReport {
            fill_cycles: 2 * n - 2,
            compute_cycles: compute,
            normalization_cycles: d,
            activation_cycles: act,
            total_cycles: compute + d + act,
            per_slice_cycles: vec![compute; d as usize],
        }
    }
}

/// Multiplier counts; the total is used as an area proxy.
///
/// Each digit MAC is counted as one 8x8-class multiplier whether the modular
/// reduction sits inside the multiplier or after the accumulator.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResourceReport {
    pub array_size: u64,
    pub digit_slices: u64,
    pub multipliers_per_slice: u64,
    pub total_slice_multipliers: u64,
    pub forward_conversion_multipliers: u64,
    pub reverse_conversion_multipliers: u64,
    pub normalization_unit_stages: u64,
    pub total_multipliers: u64,
}

impl ResourceReport {
    pub fn for_dims(n: usize, d: usize) -> Self {
        let (n, d) = (n as u64, d as u64);
        let per_slice = n * n;
        let conv = conversion_multipliers(d);
        ResourceReport {
            array_size: n,
            digit_slices: d,
            multipliers_per_slice: per_slice,
            total_slice_multipliers: d * per_slice,
            forward_conversion_multipliers: conv,
            reverse_conversion_multipliers: conv,
            normalization_unit_stages: d,
            total_multipliers: d * per_slice + 2 * conv,
        }
    }
}

pub fn resource_report(cfg: &SystolicConfig) -> ResourceReport {
    ResourceReport::for_dims(cfg.array_size, cfg.digit_slices())
}

/// `ceil(d^2 / 2)`: a triangular array of digit multipliers.
pub fn conversion_multipliers(digits: u64) -> u64 {
    (digits * digits).div_ceil(2)
}

/// A fully pipelined binary/residue converter.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConversionPipeline {
    pub latency_stages: u64,
    pub results_per_cycle: u64,
    pub multipliers: u64,
}

impl ConversionPipeline {
    fn for_digits(d: usize) -> Self {
        ConversionPipeline {
            latency_stages: d as u64,
            results_per_cycle: 1,
            multipliers: conversion_multipliers(d as u64),
        }
    }

    /// Clocks to push `count` values through.
    pub fn cycles_for(&self, count: usize) -> u64 {
        if count == 0 {
            0
        } else {
            self.latency_stages + count as u64 - 1
        }
    }
}

/// Forward (binary to residue) and reverse pipelines for `cfg`.
pub fn model_conversion_pipelines(cfg: &SystolicConfig) -> (ConversionPipeline, ConversionPipeline) {
    let d = cfg.digit_slices();
    (ConversionPipeline::for_digits(d), ConversionPipeline::for_digits(d))
}

/// Converts binary fractions into residue form through the forward pipeline.
pub fn convert_forward(values: &[BigRational], set: &ModuliSet) -> Result<(Vec<RnsFixed>, u64)> {
    let pipe = ConversionPipeline::for_digits(set.len());
    let out = values.iter().map(|v| RnsFixed::encode(v, set)).collect::<Result<Vec<_>>>()?;
    Ok((out, pipe.cycles_for(values.len())))
}

/// Converts residue fractions back to exact binary values.
pub fn convert_reverse(values: &[RnsFixed]) -> (Vec<FixedValue>, u64) {
    let d = values.first().map_or(1, |v| v.set().len());
    let pipe = ConversionPipeline::for_digits(d);
    (values.iter().map(RnsFixed::decode).collect(), pipe.cycles_for(values.len()))
}

/// Clamps negative values to zero.
pub fn relu_activate(v: &RnsFixed) -> RnsFixed {
    match v.sign() {
        Signum::Negative => RnsFixed::zero(v.set()),
        _ => v.clone(),
    }
}

/// One modulus worth of the array: a weight plane held stationary in the
/// processing elements.
#[derive(Debug, Clone)]
pub struct DigitSlice {
    modulus: u32,
    n: usize,
    // weights[r * n + j] multiplies input row j into output row r
    weights: Vec<u32>,
}

/// What a digit slice produced for one job.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceTrace {
    pub modulus: u32,
    /// Row-major `N x K` accumulator residues.
    pub sums: Vec<u32>,
    pub cycles: u64,
    pub macs: u64,
}

impl DigitSlice {
    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    /// Clocks the array until every output has drained.
    ///
    /// The element at (row `j`, column `r`) holds `W[r][j]`. Input row `j`
    /// enters at the left edge `j` clocks late and moves one column per
    /// clock; partial sums move down one row per clock. Output `(r, c)`
    /// leaves the bottom row at clock `c + (N - 1) + r`.
    pub fn run(&self, inputs: &[u32], k: usize) -> SliceTrace {
        let n = self.n;
        let m = self.modulus;
        debug_assert_eq!(inputs.len(), n * k);
        let mut act: Vec<Option<(u32, usize)>> = vec![None; n * n];
        let mut psum = vec![0u32; n * n];
        let mut sums = vec![0u32; n * k];
        let mut remaining = n * k;
        let mut macs = 0u64;
        let mut t = 0usize;
        while remaining > 0 {
            for j in 0..n {
                let row = &mut act[j * n..(j + 1) * n];
                row.copy_within(0..n - 1, 1);
                row[0] = t.checked_sub(j).filter(|&c| c < k).map(|c| (inputs[j * k + c], c));
            }
            // bottom-up so each element still sees last clock's sum above it
            for j in (0..n).rev() {
                for r in 0..n {
                    if let Some((a, c)) = act[j * n + r] {
                        let above = if j == 0 { 0 } else { psum[(j - 1) * n + r] };
                        let s = digit_add(above, digit_mul(self.weights[r * n + j], a, m), m);
                        psum[j * n + r] = s;
                        macs += 1;
                        if j == n - 1 {
                            sums[r * k + c] = s;
                            remaining -= 1;
                        }
                    }
                }
            }
            t += 1;
        }
        SliceTrace { modulus: m, sums, cycles: t as u64, macs }
    }
}

/// A validated activation matrix split into digit planes.
#[derive(Debug, Clone)]
pub struct MatMulJob {
    columns: usize,
    planes: Vec<Vec<u32>>,
}

impl MatMulJob {
    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn plane(&self, slice: usize) -> &[u32] {
        &self.planes[slice]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatMulOutput {
    /// `N x K`, row-major by output row.
    pub outputs: Vec<Vec<RnsFixed>>,
    pub cycles: CycleReport,
}

#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: SystolicConfig,
    slices: Vec<DigitSlice>,
    weight_bound: Option<BigRational>,
}

fn magnitude_bound<'a>(values: impl Iterator<Item = &'a RnsFixed>, set: &ModuliSet) -> BigRational {
    let max = values.map(|v| v.scaled().abs()).max().unwrap_or_else(BigInt::zero);
    BigRational::new(max, BigInt::from_biguint(Sign::Plus, set.frac_range().clone()))
}

impl Simulator {
    pub fn new(cfg: SystolicConfig) -> Self {
        let n = cfg.array_size;
        let slices = cfg
            .set
            .moduli()
            .iter()
            .map(|&m| DigitSlice { modulus: m, n, weights: vec![0; n * n] })
            .collect();
        Simulator { cfg, slices, weight_bound: None }
    }

    pub fn config(&self) -> &SystolicConfig {
        &self.cfg
    }

    pub fn slices(&self) -> &[DigitSlice] {
        &self.slices
    }

    pub fn resources(&self) -> ResourceReport {
        resource_report(&self.cfg)
    }

    /// Distributes digit plane `i` of `w` to slice `i`. Replaces any
    /// previously loaded weights.
    pub fn load_weights(&mut self, w: &[Vec<RnsFixed>]) -> Result<()> {
        let n = self.cfg.array_size;
        check_rows(w, n, n)?;
        for v in w.iter().flatten() {
            self.cfg.set.check_same(v.set())?;
        }
        for (i, slice) in self.slices.iter_mut().enumerate() {
            for (r, row) in w.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    slice.weights[r * n + j] = v.digits()[i];
                }
            }
        }
        self.weight_bound = Some(magnitude_bound(w.iter().flatten(), &self.cfg.set));
        Ok(())
    }

    /// Validates `x` (`N` rows of `K` columns) and splits it into digit
    /// planes. Rejects jobs whose product sums could leave the signed range.
    pub fn prepare(&self, x: &[Vec<RnsFixed>]) -> Result<MatMulJob> {
        let n = self.cfg.array_size;
        let weight_bound = self.weight_bound.as_ref().ok_or(RnsError::WeightsNotLoaded)?;
        let k = x.first().map_or(0, Vec::len);
        if k == 0 {
            return Err(RnsError::DimensionMismatch { expected: 1, found: 0 });
        }
        check_rows(x, n, k)?;
        for v in x.iter().flatten() {
            self.cfg.set.check_same(v.set())?;
        }
        let input_bound = magnitude_bound(x.iter().flatten(), &self.cfg.set);
        mac_capacity_check(&self.cfg.set, n as u64, weight_bound, &input_bound)
            .map_err(RnsError::from)?;
        let planes = (0..self.cfg.set.len())
            .map(|i| x.iter().flat_map(|row| row.iter().map(move |v| v.digits()[i])).collect())
            .collect();
        Ok(MatMulJob { columns: k, planes })
    }

    /// Runs one digit slice. Reads only that slice's weight and input planes.
    pub fn run_slice(&self, slice: usize, job: &MatMulJob) -> SliceTrace {
        self.slices[slice].run(job.plane(slice), job.columns)
    }

    /// Normalization and activation unit: joins the slice sums of each
    /// output, rescales them, and applies the activation using the sign
    /// found during normalization.
    pub fn finish(&self, job: &MatMulJob, traces: &[SliceTrace]) -> Result<MatMulOutput> {
        let set = &self.cfg.set;
        let n = self.cfg.array_size;
        let k = job.columns;
        if traces.len() != set.len() {
            return Err(RnsError::DimensionMismatch { expected: set.len(), found: traces.len() });
        }
        let mut outputs = Vec::with_capacity(n);
        for r in 0..n {
            let mut row = Vec::with_capacity(k);
            for c in 0..k {
                let digits = traces.iter().map(|t| t.sums[r * k + c]).collect();
                let sum = RawProduct::new(RnsInt::from_digits(set, digits)?, 2)?;
                let (value, sign) = sum.normalize_with_sign()?;
                row.push(match (self.cfg.activation, sign) {
                    (Activation::Relu, Signum::Negative) => RnsFixed::zero(set),
                    _ => value,
                });
            }
            outputs.push(row);
        }
        let compute = traces[0].cycles;
        debug_assert!(traces.iter().all(|t| t.cycles == compute));
        let d = set.len() as u64;
        let act = matches!(self.cfg.activation, Activation::Relu) as u64;
        let cycles = CycleReport {
            fill_cycles: 2 * n as u64 - 2,
            compute_cycles: compute,
            normalization_cycles: d,
            activation_cycles: act,
            total_cycles: compute + d + act,
            per_slice_cycles: traces.iter().map(|t| t.cycles).collect(),
        };
        Ok(MatMulOutput { outputs, cycles })
    }

    /// `activation(W x)` with the slices evaluated one after another.
    pub fn run_matmul(&self, x: &[Vec<RnsFixed>]) -> Result<MatMulOutput> {
        let job = self.prepare(x)?;
        let traces: Vec<_> = (0..self.slices.len()).map(|i| self.run_slice(i, &job)).collect();
        self.finish(&job, &traces)
    }
}

fn check_rows(m: &[Vec<RnsFixed>], rows: usize, cols: usize) -> Result<()> {
    if m.len() != rows {
        return Err(RnsError::DimensionMismatch { expected: rows, found: m.len() });
    }
    if let Some(row) = m.iter().find(|r| r.len() != cols) {
        return Err(RnsError::DimensionMismatch { expected: cols, found: row.len() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn set_a() -> ModuliSet {
        ModuliSet::with_fractional(&[2, 3, 5, 7, 11, 13], &[5, 7], 8).unwrap()
    }

    fn fx(k: i64, set: &ModuliSet) -> RnsFixed {
        RnsFixed::from_scaled(&BigInt::from(k), set).unwrap()
    }

    fn sim(n: usize, set: &ModuliSet, act: Activation) -> Simulator {
        Simulator::new(SystolicConfig::new(n, set, act).unwrap())
    }

    #[test]
    fn resource_examples() {
        let r = ResourceReport::for_dims(256, 18);
        assert_eq!(r.multipliers_per_slice, 65536);
        assert_eq!(r.total_slice_multipliers, 1_179_648);
        assert_eq!(r.forward_conversion_multipliers, 162);
        assert_eq!(ResourceReport::for_dims(256, 36).total_slice_multipliers, 2 * 1_179_648);
        assert_eq!(ResourceReport::for_dims(8, 10).total_slice_multipliers, 640);
        assert_eq!(conversion_multipliers(1), 1);
        assert_eq!(conversion_multipliers(10), 50);
        assert_eq!(
            SystolicConfig::new(0, &set_a(), Activation::None).unwrap_err(),
            RnsError::EmptyArray
        );
    }

    #[test]
    fn conversion_pipeline_model() {
        let cfg = SystolicConfig::new(4, &set_a(), Activation::None).unwrap().with_conversion(true);
        let (fwd, rev) = model_conversion_pipelines(&cfg);
        assert_eq!(fwd, rev);
        assert_eq!(fwd.latency_stages, 6);
        assert_eq!(fwd.multipliers, 18);
        assert_eq!(fwd.cycles_for(10), 15);
        assert_eq!(fwd.cycles_for(0), 0);

        let s = set_a();
        let vals = [BigRational::new(1.into(), 2.into()), BigRational::new((-1).into(), 2.into())];
        let (enc, cycles) = convert_forward(&vals, &s).unwrap();
        assert_eq!(cycles, 7);
        assert_eq!(enc[0].digits(), &[0, 0, 3, 4, 7, 5]);
        let (dec, _) = convert_reverse(&enc);
        assert_eq!(dec[1].numerator, BigInt::from(-18));
    }

    #[test]
    fn relu_examples() {
        let s = set_a();
        assert_eq!(relu_activate(&fx(18, &s)), fx(18, &s));
        assert_eq!(relu_activate(&fx(-18, &s)), RnsFixed::zero(&s));
        assert_eq!(relu_activate(&RnsFixed::zero(&s)), RnsFixed::zero(&s));
    }

    #[test]
    fn load_weight_planes() {
        let s = set_a();
        let mut sm = sim(2, &s, Activation::Relu);
        let w = vec![vec![fx(18, &s), fx(9, &s)], vec![fx(-18, &s), fx(35, &s)]];
        sm.load_weights(&w).unwrap();
        // plane 2 is mod 5
        assert_eq!(sm.slices()[2].weights(), &[3, 4, 2, 0]);

        let one = RnsFixed::one(&s);
        let id = vec![vec![one.clone(), RnsFixed::zero(&s)], vec![RnsFixed::zero(&s), one.clone()]];
        sm.load_weights(&id).unwrap();
        for (i, slice) in sm.slices().iter().enumerate() {
            assert_eq!(slice.weights()[0], one.digits()[i]);
            assert_eq!(slice.weights()[3], one.digits()[i]);
        }
        let zero = vec![vec![RnsFixed::zero(&s); 2]; 2];
        sm.load_weights(&zero).unwrap();
        assert!(sm.slices().iter().all(|sl| sl.weights().iter().all(|&d| d == 0)));

        assert!(matches!(
            sm.load_weights(&zero[..1]),
            Err(RnsError::DimensionMismatch { expected: 2, found: 1 })
        ));
        let other = ModuliSet::new(&[3, 5, 7], 1, 8).unwrap();
        let foreign = vec![vec![RnsFixed::zero(&other); 2]; 2];
        assert_eq!(sm.load_weights(&foreign), Err(RnsError::SetMismatch));
    }

    #[test]
    fn two_by_two_job() {
        let s = set_a();
        let mut sm = sim(2, &s, Activation::Relu);
        let w = vec![vec![fx(18, &s), fx(9, &s)], vec![fx(-18, &s), fx(35, &s)]];
        sm.load_weights(&w).unwrap();
        let x = vec![vec![fx(35, &s)], vec![fx(70, &s)]];
        let out = sm.run_matmul(&x).unwrap();
        assert_eq!(out.outputs[0][0].scaled(), BigInt::from(36));
        assert_eq!(out.outputs[1][0].scaled(), BigInt::from(52));
        assert_eq!(out.cycles.compute_cycles, 3);
        assert_eq!(out.cycles.total_cycles, 10);
        assert_eq!(out.cycles, CycleReport::expected(2, 1, 6, Activation::Relu));
    }

    #[test]
    fn relu_clamps_negative_sums() {
        let s = set_a();
        let mut sm = sim(2, &s, Activation::Relu);
        sm.load_weights(&vec![vec![fx(-18, &s); 2]; 2]).unwrap();
        let out = sm.run_matmul(&vec![vec![fx(35, &s)]; 2]).unwrap();
        assert!(out.outputs.iter().flatten().all(|v| v.raw().is_zero()));

        let mut sm = sim(2, &s, Activation::None);
        sm.load_weights(&vec![vec![fx(-18, &s); 2]; 2]).unwrap();
        let out = sm.run_matmul(&vec![vec![fx(35, &s)]; 2]).unwrap();
        assert_eq!(out.outputs[0][0].scaled(), BigInt::from(-36));
        assert_eq!(out.cycles.activation_cycles, 0);
    }

    #[test]
    fn timing_is_data_independent() {
        let s = set_a();
        let mut sm = sim(4, &s, Activation::Relu);
        sm.load_weights(&vec![vec![fx(7, &s); 4]; 4]).unwrap();
        let zero = sm.run_matmul(&vec![vec![RnsFixed::zero(&s); 4]; 4]).unwrap();
        assert!(zero.outputs.iter().flatten().all(|v| v.raw().is_zero()));
        let busy = sm.run_matmul(&vec![vec![fx(-20, &s); 4]; 4]).unwrap();
        assert_eq!(zero.cycles, busy.cycles);
        assert_eq!(zero.cycles.total_cycles, 17);
    }

    #[test]
    fn job_errors() {
        let s = set_a();
        let mut sm = sim(2, &s, Activation::None);
        let x = vec![vec![fx(1, &s)]; 2];
        assert_eq!(sm.run_matmul(&x).unwrap_err(), RnsError::WeightsNotLoaded);
        sm.load_weights(&vec![vec![fx(35, &s); 2]; 2]).unwrap();
        assert!(matches!(
            sm.run_matmul(&vec![vec![fx(1, &s)]; 3]),
            Err(RnsError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            sm.run_matmul(&[vec![fx(1, &s)], vec![fx(1, &s), fx(1, &s)]]),
            Err(RnsError::DimensionMismatch { .. })
        ));
        // 2 * 36 * 2001 > 15014.5
        assert!(matches!(
            sm.run_matmul(&vec![vec![fx(2000, &s)]; 2]),
            Err(RnsError::CapacityViolation(_))
        ));
    }

    #[test]
    fn minimal_array() {
        let s = ModuliSet::new(&[2, 3], 1, 8).unwrap();
        let mut sm = sim(1, &s, Activation::None);
        sm.load_weights(&[vec![fx(1, &s)]]).unwrap();
        let out = sm.run_matmul(&[vec![RnsFixed::zero(&s)]]).unwrap();
        assert!(out.outputs[0][0].raw().is_zero());
        assert_eq!(out.cycles.compute_cycles, 1);
        assert_eq!(out.cycles.total_cycles, 3);
    }
}
