//! Pacing functions: how many of the easiest examples are exposed at a step.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Config keys: `pace.kind`, `pace.starting_fraction`, `pace.inc`,
/// `pace.step_length`, `pace.k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PaceSpec {
    Exponential {
        starting_fraction: f64,
        inc: f64,
        step_length: usize,
    },
    #[serde(rename = "constant")]
    ConstantFraction { k: f64 },
}

impl PaceSpec {
    /// Invariants that do not depend on `N` or the batch size.
    pub fn validate(&self) -> Result<()> {
        match *self {
            PaceSpec::Exponential {
                starting_fraction,
                inc,
                step_length,
            } => {
                if !(starting_fraction > 0.0 && starting_fraction <= 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "starting_fraction must be in (0, 1], got {starting_fraction}"
                    )));
                }
                if !(inc > 1.0 && inc.is_finite()) {
                    return Err(Error::InvalidArgument(format!("inc must be > 1, got {inc}")));
                }
                if step_length == 0 {
                    return Err(Error::InvalidArgument("step_length must be positive".into()));
                }
                Ok(())
            }
            PaceSpec::ConstantFraction { k } => {
                if !(k > 0.0 && k <= 1.0) {
                    return Err(Error::InvalidArgument(format!("k must be in (0, 1], got {k}")));
                }
                Ok(())
            }
        }
    }

    /// Exposed prefix length at step `i`.
    pub fn size(&self, i: usize, n: usize, batch: usize) -> Result<usize> {
        match *self {
            PaceSpec::Exponential { .. } => pace_exponential(i, self, n),
            PaceSpec::ConstantFraction { k } => pace_constant(i, k, n, batch),
        }
    }
}

/// `floor(min(1, starting_fraction * inc^floor(i / step_length)) * N)`.
pub fn pace_exponential(i: usize, spec: &PaceSpec, n: usize) -> Result<usize> {
    let PaceSpec::Exponential {
        starting_fraction,
        inc,
        step_length,
    } = *spec
    else {
        return Err(Error::InvalidArgument(
            "pace_exponential needs an exponential spec".into(),
        ));
    };
    spec.validate()?;
    let exponent = (i / step_length) as i32;
    let frac = (starting_fraction * inc.powi(exponent)).min(1.0);
    let size = (frac * n as f64).floor() as usize;
    if size < 1 {
        return Err(Error::EmptyExposure { step: i });
    }
    Ok(size)
}

/// `floor(k * N)` for every step; requires `b / N <= k <= 1`.
pub fn pace_constant(_t: usize, k: f64, n: usize, batch: usize) -> Result<usize> {
    if n == 0 || !(k <= 1.0 && k * n as f64 >= batch as f64) {
        return Err(Error::InvalidArgument(format!(
            "k = {k} outside [b/N, 1] for b = {batch}, N = {n}"
        )));
    }
    Ok((k * n as f64).floor() as usize)
}
