//! Subcommand definitions and their implementations.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use rnstpu_core::{
    mac_capacity_check, parse_rational, Activation, BigRational, FixedValue, ModuliSet,
    ResourceReport, RnsFixed, RnsInt,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::{io, mandelbrot, matmul};

#[derive(Debug, Parser)]
#[command(name = "rnstpu", version, about = "Residue number system TPU model")]
pub struct Cli {
    #[command(flatten)]
    pub moduli: ModuliArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModuliArgs {
    /// Comma separated, pairwise coprime moduli
    #[arg(long, global = true, value_delimiter = ',')]
    pub moduli: Option<Vec<u32>>,
    /// Number of leading moduli that form the fraction
    #[arg(long, global = true)]
    pub frac_count: Option<usize>,
    /// Moduli that form the fraction, in place of --frac-count
    #[arg(long, global = true, value_delimiter = ',', conflicts_with = "frac_count")]
    pub frac_moduli: Option<Vec<u32>>,
    /// Digit width in bits [default: narrowest that holds every modulus]
    #[arg(long, global = true)]
    pub digit_width: Option<u32>,
}

impl ModuliArgs {
    fn as_config(&self) -> RunConfig {
        RunConfig {
            moduli: self.moduli.clone(),
            frac_count: self.frac_count,
            frac_moduli: self.frac_moduli.clone(),
            digit_width: self.digit_width,
        }
    }

    /// Flags, then the `RNSTPU_CONFIG` file, then the built-in set.
    pub fn resolve(&self) -> Result<ModuliSet> {
        self.as_config().over(&RunConfig::from_env()?)?.resolve()
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print ranges, precision, capacity and resource figures for a moduli set
    Info {
        /// Systolic array size for the resource figures
        #[arg(long, default_value_t = 256)]
        array_size: usize,
        #[arg(long)]
        json: bool,
    },
    /// Convert a decimal to residue digits, or digits back to a fraction
    Convert {
        #[arg(long, allow_hyphen_values = true, required_unless_present = "to_binary")]
        value: Option<String>,
        #[arg(long, requires = "digits", conflicts_with = "value")]
        to_binary: bool,
        #[arg(long, value_delimiter = ',')]
        digits: Option<Vec<u32>>,
        /// Decimal places for --to-binary
        #[arg(long, default_value_t = 10)]
        places: usize,
        #[arg(long)]
        json: bool,
    },
    /// Multiply an N x N weight matrix by an N x K activation matrix
    Matmul {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        activations: PathBuf,
        #[arg(long, value_enum, default_value_t = ActivationArg::None)]
        activation: ActivationArg,
        #[arg(long)]
        compare_oracle: bool,
        /// Output prefix for <prefix>_result.csv, <prefix>_report.json and
        /// <prefix>_oracle_diff.txt
        #[arg(long, default_value = "matmul")]
        out: String,
        /// Decimal places in the result CSV
        #[arg(long, default_value_t = 10)]
        precision: usize,
        /// Evaluate digit slices on one thread
        #[arg(long)]
        sequential: bool,
    },
    /// Render the Mandelbrot set with residue arithmetic to a binary PGM
    Mandelbrot {
        #[arg(long, default_value_t = 128)]
        width: u32,
        #[arg(long, default_value_t = 128)]
        height: u32,
        /// xmin,xmax,ymin,ymax
        #[arg(long, allow_hyphen_values = true, default_value = "-2,1,-1.25,1.25")]
        viewport: String,
        #[arg(long, default_value_t = 64)]
        max_iter: u32,
        #[arg(long, default_value = "mandelbrot.pgm")]
        out: PathBuf,
        #[arg(long)]
        compare_oracle: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ActivationArg {
    None,
    Relu,
}

impl From<ActivationArg> for Activation {
    fn from(a: ActivationArg) -> Self {
        match a {
            ActivationArg::None => Activation::None,
            ActivationArg::Relu => Activation::Relu,
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let set = cli.moduli.resolve()?;
    match &cli.command {
        Command::Info { array_size, json } => info(&set, *array_size, *json, out),
        Command::Convert { value, to_binary, digits, places, json } => {
            if *to_binary {
                to_binary_cmd(&set, digits.as_deref().unwrap_or_default(), *places, *json, out)
            } else {
                to_rns_cmd(&set, value.as_deref().unwrap_or_default(), *json, out)
            }
        }
        Command::Matmul { weights, activations, activation, compare_oracle, out: prefix, precision, sequential } => {
            let job = MatmulArgs {
                weights,
                activations,
                activation: (*activation).into(),
                compare_oracle: *compare_oracle,
                prefix,
                precision: *precision,
                parallel: !*sequential,
            };
            matmul_cmd(&set, &job, out)
        }
        Command::Mandelbrot { width, height, viewport, max_iter, out: path, compare_oracle } => {
            let vp = mandelbrot::Viewport::parse(viewport)?;
            mandelbrot_cmd(&set, *width, *height, &vp, *max_iter, path, *compare_oracle, out)
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

const CAPACITY_BOUNDS: [(i64, i64); 4] = [(1, 2), (1, 1), (2, 1), (4, 1)];
const CAPACITY_TERMS: [u64; 4] = [1, 8, 64, 256];

#[derive(Debug, Serialize)]
pub struct CapacityRow {
    /// Operand magnitude bound.
    pub bound: String,
    /// Largest dot-product length that passes the capacity check.
    pub max_terms: String,
    /// `(terms, passes)` for sample lengths.
    pub samples: Vec<(u64, bool)>,
}

#[derive(Debug, Serialize)]
pub struct InfoReport {
    pub moduli: Vec<u32>,
    pub fractional_moduli: Vec<u32>,
    pub digit_width_bits: u32,
    pub range: String,
    pub frac_range: String,
    pub whole_range: String,
    pub fractional_bits: u64,
    pub range_bits: u64,
    /// `M_W / 2`, the bound on representable magnitudes.
    pub signed_bound: String,
    pub capacity: Vec<CapacityRow>,
    pub resources: ResourceReport,
}

/// Half of an integer, exactly, in decimal.
fn half(v: &BigInt) -> String {
    let q: BigInt = v / 2;
    if v % 2u32 == BigInt::from(0) {
        q.to_string()
    } else {
        format!("{q}.5")
    }
}

pub fn info_report(set: &ModuliSet, array_size: usize) -> Result<InfoReport> {
    if array_size == 0 {
        return Err(rnstpu_core::RnsError::EmptyArray.into());
    }
    let mf = BigInt::from(set.frac_range().clone());
    let avail = BigRational::new(BigInt::from(set.range().clone()) - 1, 2.into());
    let capacity = CAPACITY_BOUNDS
        .iter()
        .map(|&(n, d)| {
            let b = BigRational::new(n.into(), d.into());
            let per_term = (&b * &mf + BigInt::from(1)).pow(2);
            let max_terms = (&avail / per_term).floor().to_integer();
            let samples = CAPACITY_TERMS
                .iter()
                .map(|&k| (k, mac_capacity_check(set, k, &b, &b).is_ok()))
                .collect();
            CapacityRow { bound: FixedValue { numerator: n.into(), denominator: (d as u32).into() }.to_decimal(1), max_terms: max_terms.to_string(), samples }
        })
        .collect();
    Ok(InfoReport {
        moduli: set.moduli().to_vec(),
        fractional_moduli: set.fractional_moduli().to_vec(),
        digit_width_bits: set.digit_width_bits(),
        range: set.range().to_string(),
        frac_range: set.frac_range().to_string(),
        whole_range: set.whole_range().to_string(),
        fractional_bits: set.fractional_bits(),
        range_bits: set.range_bits(),
        signed_bound: half(&BigInt::from(set.whole_range().clone())),
        capacity,
        resources: ResourceReport::for_dims(array_size, set.len()),
    })
}

fn info(set: &ModuliSet, array_size: usize, json: bool, out: &mut dyn Write) -> Result<()> {
    let r = info_report(set, array_size)?;
    if json {
        return emit(out, &(serde_json::to_string_pretty(&r).expect("serializes") + "\n"));
    }
    let mut s = String::new();
    let mut line = |k: &str, v: String| s.push_str(&format!("{k:<22}{v}\n"));
    line("moduli", join(&r.moduli));
    line("fractional moduli", join(&r.fractional_moduli));
    line("digits", format!("{} ({} fractional)", r.moduli.len(), r.fractional_moduli.len()));
    line("digit width", format!("{} bits", r.digit_width_bits));
    line("M", r.range.clone());
    line("M_F", r.frac_range.clone());
    line("M_W", r.whole_range.clone());
    line("fractional bits", r.fractional_bits.to_string());
    line("range bits", r.range_bits.to_string());
    line("signed bound M_W/2", r.signed_bound.clone());
    s.push_str("capacity (K products of operands with |x|, |y| <= bound):\n");
    s.push_str(&format!("  {:>6}", "bound"));
    for k in CAPACITY_TERMS {
        s.push_str(&format!(" {:>6}", format!("K={k}")));
    }
    s.push_str("  max K\n");
    for row in &r.capacity {
        s.push_str(&format!("  {:>6}", row.bound));
        for (_, ok) in &row.samples {
            s.push_str(&format!(" {:>6}", if *ok { "ok" } else { "over" }));
        }
        s.push_str(&format!("  {}\n", row.max_terms));
    }
    let res = &r.resources;
    s.push_str(&format!("resources (N={}, D={}):\n", res.array_size, res.digit_slices));
    let mut line = |k: &str, v: u64| s.push_str(&format!("  {k:<32}{v}\n"));
    line("multipliers per slice", res.multipliers_per_slice);
    line("total slice multipliers", res.total_slice_multipliers);
    line("forward conversion multipliers", res.forward_conversion_multipliers);
    line("reverse conversion multipliers", res.reverse_conversion_multipliers);
    line("normalization unit stages", res.normalization_unit_stages);
    line("total multipliers", res.total_multipliers);
    emit(out, &s)
}

#[derive(Debug, Serialize)]
struct Converted {
    value: String,
    raw: String,
    digits: Vec<u32>,
    numerator: String,
    denominator: String,
}

fn converted(v: &RnsFixed, places: usize) -> Converted {
    let d = v.decode();
    Converted {
        value: d.to_decimal(places),
        raw: v.raw().decode().to_string(),
        digits: v.digits().to_vec(),
        numerator: d.numerator.to_string(),
        denominator: d.denominator.to_string(),
    }
}

fn to_rns_cmd(set: &ModuliSet, value: &str, json: bool, out: &mut dyn Write) -> Result<()> {
    let q = parse_rational(value)?;
    let v = RnsFixed::encode(&q, set)?;
    let mut c = converted(&v, 10);
    c.value = value.trim().to_string();
    if json {
        return emit(out, &(serde_json::to_string_pretty(&c).expect("serializes") + "\n"));
    }
    emit(out, &format!("X = {}\ndigits = {}\nexact = {}/{}\n", c.raw, join(&c.digits), c.numerator, c.denominator))
}

fn to_binary_cmd(set: &ModuliSet, digits: &[u32], places: usize, json: bool, out: &mut dyn Write) -> Result<()> {
    let v = RnsFixed::from_raw(RnsInt::from_digits(set, digits.to_vec())?);
    let c = converted(&v, places);
    if json {
        return emit(out, &(serde_json::to_string_pretty(&c).expect("serializes") + "\n"));
    }
    emit(out, &format!("{}/{}\n{}\n", c.numerator, c.denominator, c.value))
}

pub struct MatmulArgs<'a> {
    pub weights: &'a Path,
    pub activations: &'a Path,
    pub activation: Activation,
    pub compare_oracle: bool,
    pub prefix: &'a str,
    pub precision: usize,
    pub parallel: bool,
}

fn with_suffix(prefix: &str, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}{suffix}"))
}

pub fn matmul_cmd(set: &ModuliSet, a: &MatmulArgs<'_>, out: &mut dyn Write) -> Result<()> {
    let w = io::read_matrix(a.weights)?;
    let x = io::read_matrix(a.activations)?;
    let run = matmul::run_job(set, &w, &x, a.activation, a.parallel)?;
    let result = with_suffix(a.prefix, "_result.csv");
    let report = with_suffix(a.prefix, "_report.json");
    io::write_matrix(&result, &matmul::result_rows(&run.output.outputs, a.precision))?;
    std::fs::write(&report, run.report.to_json()).map_err(|e| Error::io(&report, e))?;
    emit(
        out,
        &format!(
            "{} x {} result in {}\ncycles: total {} (compute {}, normalization {}, activation {})\nreport in {}\n",
            run.report.array_size,
            run.report.columns,
            result.display(),
            run.report.cycles.total_cycles,
            run.report.cycles.compute_cycles,
            run.report.cycles.normalization_cycles,
            run.report.cycles.activation_cycles,
            report.display()
        ),
    )?;
    if a.compare_oracle {
        let diff = matmul::oracle_diff(set, &w, &x, a.activation, &run.output.outputs)?;
        let path = with_suffix(a.prefix, "_oracle_diff.txt");
        std::fs::write(&path, matmul::render_diff(&diff)).map_err(|e| Error::io(&path, e))?;
        emit(out, &format!("oracle: {} mismatches, see {}\n", diff.len(), path.display()))?;
        if !diff.is_empty() {
            return Err(Error::OracleMismatch(diff.len()));
        }
    }
    Ok(())
}

/// `img.pgm` -> `img.oracle_diff.txt`
pub fn mandelbrot_diff_path(out: &Path) -> PathBuf {
    out.with_extension("oracle_diff.txt")
}

#[allow(clippy::too_many_arguments)]
pub fn mandelbrot_cmd(
    set: &ModuliSet,
    width: u32,
    height: u32,
    viewport: &mandelbrot::Viewport,
    max_iter: u32,
    path: &Path,
    compare_oracle: bool,
    out: &mut dyn Write,
) -> Result<()> {
    let r = mandelbrot::render(set, width, height, viewport, max_iter)?;
    std::fs::write(path, r.pgm()).map_err(|e| Error::io(path, e))?;
    emit(
        out,
        &format!(
            "{}x{} image, {} iterations max, in {}\nresidue clocks: {}\n",
            width,
            height,
            max_iter,
            path.display(),
            r.cycles
        ),
    )?;
    if compare_oracle {
        let diff = mandelbrot::oracle_diff(set, viewport, &r);
        let mut text = format!("{} mismatches\n", diff.len());
        for (x, y, got, want) in &diff {
            text.push_str(&format!("pixel {x},{y}: rns {got} oracle {want}\n"));
        }
        let dp = mandelbrot_diff_path(path);
        std::fs::write(&dp, text).map_err(|e| Error::io(&dp, e))?;
        emit(out, &format!("oracle: {} mismatches, see {}\n", diff.len(), dp.display()))?;
        if !diff.is_empty() {
            return Err(Error::OracleMismatch(diff.len()));
        }
    }
    Ok(())
}
