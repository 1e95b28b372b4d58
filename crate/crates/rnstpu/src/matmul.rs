//! Matrix multiply jobs: encoding, threaded slice execution, reports and
//! oracle comparison.

use num_bigint::BigInt;
use rayon::prelude::*;
use rnstpu_core::{
    Activation, BigRational, CycleReport, MatMulOutput, ModuliSet, ResourceReport, RnsFixed,
    Simulator, SystolicConfig,
};
use rnstpu_oracle::{oracle_encode, oracle_matmul, oracle_matmul_relu};
use serde::Serialize;

use crate::error::Result;

pub fn encode_matrix(m: &[Vec<BigRational>], set: &ModuliSet) -> Result<Vec<Vec<RnsFixed>>> {
    Ok(m.iter()
        .map(|row| row.iter().map(|v| RnsFixed::encode(v, set)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?)
}

/// Same as [`Simulator::run_matmul`] with the digit slices spread over the
/// rayon pool.
pub fn run_parallel(sim: &Simulator, x: &[Vec<RnsFixed>]) -> Result<MatMulOutput> {
    let job = sim.prepare(x)?;
    let traces: Vec<_> = (0..sim.slices().len()).into_par_iter().map(|i| sim.run_slice(i, &job)).collect();
    Ok(sim.finish(&job, &traces)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatMulReport {
    pub moduli: Vec<u32>,
    pub fractional_moduli: Vec<u32>,
    pub array_size: usize,
    pub columns: usize,
    pub activation: Activation,
    pub cycles: CycleReport,
    pub resources: ResourceReport,
}

impl MatMulReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone)]
pub struct MatMulRun {
    pub output: MatMulOutput,
    pub report: MatMulReport,
}

/// Runs `activation(W X)` for decimal matrices `w` (`N x N`) and `x`
/// (`N x K`).
pub fn run_job(
    set: &ModuliSet,
    w: &[Vec<BigRational>],
    x: &[Vec<BigRational>],
    activation: Activation,
    parallel: bool,
) -> Result<MatMulRun> {
    let cfg = SystolicConfig::new(w.len(), set, activation)?;
    let mut sim = Simulator::new(cfg);
    sim.load_weights(&encode_matrix(w, set)?)?;
    let xs = encode_matrix(x, set)?;
    let output = if parallel { run_parallel(&sim, &xs)? } else { sim.run_matmul(&xs)? };
    let report = MatMulReport {
        moduli: set.moduli().to_vec(),
        fractional_moduli: set.fractional_moduli().to_vec(),
        array_size: w.len(),
        columns: xs[0].len(),
        activation,
        cycles: output.cycles.clone(),
        resources: sim.resources(),
    };
    Ok(MatMulRun { output, report })
}

/// Decimal rendering of an `N x K` result.
pub fn result_rows(outputs: &[Vec<RnsFixed>], places: usize) -> Vec<Vec<String>> {
    outputs.iter().map(|row| row.iter().map(|v| v.decode().to_decimal(places)).collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub row: usize,
    pub column: usize,
    pub simulated: Vec<u32>,
    pub expected: Vec<u32>,
}

fn residues(x: &BigInt, set: &ModuliSet) -> Vec<u32> {
    set.moduli()
        .iter()
        .map(|&m| {
            let m = BigInt::from(m);
            let r = ((x % &m) + &m) % &m;
            r.iter_u32_digits().next().unwrap_or(0)
        })
        .collect()
}

/// Recomputes the job with exact integers, starting again from the decimal
/// inputs, and lists every output whose digits differ.
pub fn oracle_diff(
    set: &ModuliSet,
    w: &[Vec<BigRational>],
    x: &[Vec<BigRational>],
    activation: Activation,
    outputs: &[Vec<RnsFixed>],
) -> Result<Vec<Mismatch>> {
    let scale = set.frac_range();
    let enc = |m: &[Vec<BigRational>]| -> Vec<Vec<BigInt>> {
        m.iter().map(|r| r.iter().map(|v| oracle_encode(v, scale)).collect()).collect()
    };
    let wi = enc(w);
    let xi = enc(x);
    let k = xi.first().map_or(0, Vec::len);
    let mut out = Vec::new();
    for c in 0..k {
        let col: Vec<BigInt> = xi.iter().map(|r| r[c].clone()).collect();
        let expect = match activation {
            Activation::Relu => oracle_matmul_relu(&wi, &col, scale),
            Activation::None => oracle_matmul(&wi, &col, scale),
        }
        .map_err(|e| crate::Error::Invalid(e.to_string()))?;
        for (r, e) in expect.iter().enumerate() {
            let expected = residues(e, set);
            let simulated = outputs[r][c].digits().to_vec();
            if expected != simulated {
                out.push(Mismatch { row: r, column: c, simulated, expected });
            }
        }
    }
    Ok(out)
}

pub fn render_diff(mismatches: &[Mismatch]) -> String {
    let mut s = format!("{} mismatches\n", mismatches.len());
    for m in mismatches {
        s.push_str(&format!(
            "row {} column {}: simulated {:?} expected {:?}\n",
            m.row, m.column, m.simulated, m.expected
        ));
    }
    s
}
