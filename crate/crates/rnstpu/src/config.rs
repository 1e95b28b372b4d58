//! Moduli configuration shared by every subcommand.
//!
//! Each field resolves independently: command line flag, then the TOML file
//! named by `RNSTPU_CONFIG`, then the built-in default set.

use std::path::Path;

use rnstpu_core::{ModuliSet, DEFAULT_FRAC_COUNT, DEFAULT_MODULI};
use serde::Deserialize;

use crate::error::{Error, Result};

pub const CONFIG_ENV: &str = "RNSTPU_CONFIG";

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    pub moduli: Option<Vec<u32>>,
    pub frac_count: Option<usize>,
    /// Explicit fractional moduli; takes the place of `frac_count`.
    pub frac_moduli: Option<Vec<u32>>,
    pub digit_width: Option<u32>,
}

enum Fractional {
    Count(usize),
    Moduli(Vec<u32>),
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    /// Reads the file named by `RNSTPU_CONFIG`, if set.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(CONFIG_ENV) {
            Some(p) if !p.is_empty() => Self::from_file(Path::new(&p)),
            _ => Ok(RunConfig::default()),
        }
    }

    fn fractional(&self) -> Result<Option<Fractional>> {
        match (&self.frac_count, &self.frac_moduli) {
            (Some(_), Some(_)) => Err(Error::Config(
                "frac-count and frac-moduli are mutually exclusive".into(),
            )),
            (Some(f), None) => Ok(Some(Fractional::Count(*f))),
            (None, Some(m)) => Ok(Some(Fractional::Moduli(m.clone()))),
            (None, None) => Ok(None),
        }
    }

    /// Fields set here win over fields set in `lower`.
    pub fn over(&self, lower: &RunConfig) -> Result<RunConfig> {
        let (frac_count, frac_moduli) = match (self.fractional()?, lower.fractional()?) {
            (Some(Fractional::Count(f)), _) | (None, Some(Fractional::Count(f))) => (Some(f), None),
            (Some(Fractional::Moduli(m)), _) | (None, Some(Fractional::Moduli(m))) => (None, Some(m)),
            (None, None) => (None, None),
        };
        Ok(RunConfig {
            moduli: self.moduli.clone().or_else(|| lower.moduli.clone()),
            frac_count,
            frac_moduli,
            digit_width: self.digit_width.or(lower.digit_width),
        })
    }

    /// Builds the moduli set. Without a fractional split, a user list puts
    /// its first half in the fraction; without a digit width, the narrowest
    /// width holding every modulus is used.
    pub fn resolve(&self) -> Result<ModuliSet> {
        let moduli = self.moduli.clone().unwrap_or_else(|| DEFAULT_MODULI.to_vec());
        let width = match self.digit_width {
            Some(w) => w,
            None => moduli.iter().map(|&m| min_width(m)).max().unwrap_or(1),
        };
        let set = match self.fractional()? {
            Some(Fractional::Moduli(f)) => ModuliSet::with_fractional(&moduli, &f, width)?,
            Some(Fractional::Count(f)) => ModuliSet::new(&moduli, f, width)?,
            None if self.moduli.is_none() => ModuliSet::new(&moduli, DEFAULT_FRAC_COUNT, width)?,
            None => ModuliSet::new(&moduli, (moduli.len() / 2).max(1), width)?,
        };
        Ok(set)
    }
}

/// Bits needed so that `m <= 2^bits`.
fn min_width(m: u32) -> u32 {
    (32 - m.saturating_sub(1).leading_zeros()).max(1)
}
