//! Dynamic curriculum learning.
//!
//! Every epoch, each training example is scored by
//! `rho_i = -(a · ∇f_i(w)) / ‖a‖` where `a = w - w̄` is the displacement of
//! the current weights from a reference optimum `w̄`. After one SGD step on
//! example `i`, `‖w' - w̄‖² = R² - 2 eta a·∇f_i + eta² ‖∇f_i‖²
//! = R² + 2 eta R rho_i + O(eta²)`, so small `rho` means the step moves the
//! weights toward `w̄`. The epoch's mini-batches
//! are the ascending-`rho` prefix of size `floor(kN)`, chunked in order
//! (`DCL+`) or with the batch list reversed (`DCL-`).

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curriculum::{build_batch_plan_vanilla, BatchPlan, MetricsLog, TrainConfig, Trainer};
use crate::data::NormalizedDataset;
use crate::linalg::{dot, norm2, sub};
use crate::nn::{grad_dot_unchecked, FcnArch, FcnModel, GradientVector};
use crate::pacing::pace_constant;
use crate::scoring::ascending_order;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DclVariant {
    Plus,
    Minus,
}

impl fmt::Display for DclVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DclVariant::Plus => "dcl+",
            DclVariant::Minus => "dcl-",
        })
    }
}

impl FromStr for DclVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" | "dcl+" => Ok(DclVariant::Plus),
            "minus" | "-" | "dcl-" => Ok(DclVariant::Minus),
            other => Err(Error::InvalidArgument(format!("unknown DCL variant '{other}'"))),
        }
    }
}

/// Geometry at the start of an epoch; `a_t = w_t - w̄`, `r_t = ‖a_t‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct DclState {
    pub w_bar: Vec<f64>,
    pub a_t: Vec<f64>,
    pub r_t: f64,
    pub rho: Vec<f64>,
    pub epoch: usize,
}

impl DclState {
    pub fn compute(model: &FcnModel, w_bar: &[f64], nds: &NormalizedDataset, epoch: usize) -> Result<Self> {
        let a_t = displacement(model, w_bar)?;
        let r_t = norm2(&a_t);
        let rho = rho_from_direction(model, &a_t, r_t, nds)?;
        Ok(Self {
            w_bar: w_bar.to_vec(),
            a_t,
            r_t,
            rho,
            epoch,
        })
    }
}

fn displacement(model: &FcnModel, w_bar: &[f64]) -> Result<Vec<f64>> {
    if w_bar.len() != model.num_params() {
        return Err(Error::ArchitectureMismatch(format!(
            "reference has {} parameters, model has {}",
            w_bar.len(),
            model.num_params()
        )));
    }
    Ok(sub(model.params(), w_bar))
}

fn rho_from_direction(model: &FcnModel, a: &[f64], r: f64, nds: &NormalizedDataset) -> Result<Vec<f64>> {
    if r == 0.0 {
        return Err(Error::AtOptimum);
    }
    if nds.dim() != model.arch().d_in {
        return Err(Error::ArchitectureMismatch(format!(
            "model expects {} inputs, data has {}",
            model.arch().d_in,
            nds.dim()
        )));
    }
    let rho: Vec<f64> = (0..nds.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; nds.dim()],
            |x, i| {
                nds.std_row_into(i, x);
                -grad_dot_unchecked(model, x, nds.labels()[i], a) / r
            },
        )
        .collect();
    Ok(rho)
}

/// `rho_i = -(w - w̄)·∇f_i(w) / ‖w - w̄‖` for every example of `nds`.
pub fn rho_scores(model: &FcnModel, w_bar: &[f64], nds: &NormalizedDataset) -> Result<Vec<f64>> {
    let a = displacement(model, w_bar)?;
    let r = norm2(&a);
    rho_from_direction(model, &a, r, nds)
}

/// One epoch of mini-batches: ascending `rho` (ties by index), first
/// `floor(pace_size / b) * b` examples, chunked in order. `Minus` reverses the
/// list of batches, leaving each batch untouched.
pub fn build_epoch_plan_dcl(rho: &[f64], pace_size: usize, b: usize, variant: DclVariant) -> Result<BatchPlan> {
    if b == 0 || pace_size < b {
        return Err(Error::PrefixTooSmall {
            step: 0,
            prefix: pace_size,
            batch: b,
        });
    }
    let order = ascending_order(rho);
    let take = (pace_size.min(rho.len()) / b) * b;
    let mut batches: Vec<Vec<usize>> = order.perm[..take].chunks(b).map(<[usize]>::to_vec).collect();
    if variant == DclVariant::Minus {
        batches.reverse();
    }
    BatchPlan::new(b, batches)
}

/// Vanilla SGD from `w0 = init(arch, w0_seed)`; returns the final model (the
/// reference optimum `w̄`) and its learning curve.
pub fn train_reference(
    train: &NormalizedDataset,
    test: &NormalizedDataset,
    arch: FcnArch,
    w0_seed: u64,
    config: &TrainConfig,
) -> Result<(FcnModel, MetricsLog)> {
    let plan = build_batch_plan_vanilla(train.len(), config.batch_size, config.total_steps, config.seed)?;
    crate::curriculum::train(FcnModel::init(arch, w0_seed), train, test, &plan, config)
}

#[derive(Debug, Clone)]
pub struct DclRun {
    pub model: FcnModel,
    pub log: MetricsLog,
    /// `rho_history[t]` holds the scores computed at the start of epoch `t`.
    pub rho_history: Vec<Vec<f64>>,
    /// `‖w̄ - w‖` at the start of each epoch.
    pub distance_history: Vec<f64>,
}

/// Epoch-by-epoch dynamic-curriculum training from the shared
/// initialization toward `w̄`, with constant pace `floor(k N)`.
pub struct DclTrainer<'a> {
    trainer: Trainer<'a>,
    train: &'a NormalizedDataset,
    w_bar: Vec<f64>,
    k: f64,
    variant: DclVariant,
    rho_history: Vec<Vec<f64>>,
    distance_history: Vec<f64>,
}

impl<'a> DclTrainer<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        train: &'a NormalizedDataset,
        test: &'a NormalizedDataset,
        arch: FcnArch,
        w0_seed: u64,
        w_bar: &[f64],
        k: f64,
        config: &TrainConfig,
        variant: DclVariant,
    ) -> Result<Self> {
        if w_bar.len() != arch.num_params() {
            return Err(Error::ArchitectureMismatch(format!(
                "reference has {} parameters, architecture needs {}",
                w_bar.len(),
                arch.num_params()
            )));
        }
        let pace = pace_constant(0, k, train.len(), config.batch_size)?;
        let mut config = config.clone();
        config.steps_per_epoch.get_or_insert(pace / config.batch_size);
        Ok(Self {
            trainer: Trainer::new(FcnModel::init(arch, w0_seed), train, test, config)?,
            train,
            w_bar: w_bar.to_vec(),
            k,
            variant,
            rho_history: Vec::new(),
            distance_history: Vec::new(),
        })
    }

    pub fn done(&self) -> bool {
        self.trainer.remaining() == 0
    }

    pub fn epoch(&self) -> usize {
        self.rho_history.len()
    }

    pub fn log(&self) -> &MetricsLog {
        self.trainer.log()
    }

    pub fn model(&self) -> &FcnModel {
        self.trainer.model()
    }

    /// Scores the training set, then runs the epoch's batches (truncated at
    /// the step budget). Returns the scores used.
    pub fn run_epoch(&mut self) -> Result<&[f64]> {
        let epoch = self.epoch();
        let state = DclState::compute(self.trainer.model(), &self.w_bar, self.train, epoch)?;
        let b = self.trainer.config().batch_size;
        let size = pace_constant(epoch, self.k, self.train.len(), b)?;
        let plan = build_epoch_plan_dcl(&state.rho, size, b, self.variant)?;
        self.rho_history.push(state.rho);
        self.distance_history.push(state.r_t);
        self.trainer.run(&plan)?;
        Ok(self.rho_history.last().unwrap())
    }

    pub fn finish(self) -> DclRun {
        let (model, log) = self.trainer.finish();
        DclRun {
            model,
            log,
            rho_history: self.rho_history,
            distance_history: self.distance_history,
        }
    }
}

/// Runs a [`DclTrainer`] to the end of its step budget.
#[allow(clippy::too_many_arguments)]
pub fn dcl_train(
    train: &NormalizedDataset,
    test: &NormalizedDataset,
    arch: FcnArch,
    w0_seed: u64,
    w_bar: &[f64],
    k: f64,
    config: &TrainConfig,
    variant: DclVariant,
) -> Result<DclRun> {
    let mut t = DclTrainer::new(train, test, arch, w0_seed, w_bar, k, config, variant)?;
    while !t.done() {
        t.run_epoch()?;
    }
    Ok(t.finish())
}

/// Squared distances to `w̄` around a single SGD step `w' = w - eta * grad`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceDecomposition {
    pub r_sq: f64,
    /// `R² - 2 eta a·grad + eta² ‖grad‖²` with `a = w - w̄`
    pub predicted_next_sq: f64,
    /// `‖w̄ - (w - eta grad)‖²`
    pub actual_next_sq: f64,
}

pub fn distance_decomposition(
    w_t: &[f64],
    w_bar: &[f64],
    grad: &GradientVector,
    eta: f64,
) -> Result<DistanceDecomposition> {
    if eta.is_nan() || eta <= 0.0 {
        return Err(Error::InvalidArgument(format!("eta must be positive, got {eta}")));
    }
    if w_t.len() != w_bar.len() || grad.len() != w_t.len() {
        return Err(Error::DimensionMismatch {
            what: "parameter vector length",
            expected: w_t.len(),
            got: if w_bar.len() != w_t.len() {
                w_bar.len()
            } else {
                grad.len()
            },
        });
    }
    let a = sub(w_t, w_bar);
    let g = grad.as_slice();
    let r_sq = dot(&a, &a);
    let predicted_next_sq = r_sq - 2.0 * eta * dot(&a, g) + eta * eta * dot(g, g);
    let actual_next_sq = w_bar
        .iter()
        .zip(w_t)
        .zip(g)
        .map(|((wb, w), gi)| (wb - (w - eta * gi)).powi(2))
        .sum();
    Ok(DistanceDecomposition {
        r_sq,
        predicted_next_sq,
        actual_next_sq,
    })
}

/// Rows `epoch,index,rho,rank,stddev`; `rank` is the position in ascending
/// `rho` order.
pub fn write_rho_csv<W: Write>(
    mut w: W,
    epoch: usize,
    rho: &[f64],
    stddev: &[f64],
    header: bool,
) -> std::io::Result<()> {
    if header {
        writeln!(w, "epoch,index,rho,rank,stddev")?;
    }
    let ranks = ascending_order(rho).ranks();
    for (i, (&r, &s)) in rho.iter().zip(stddev).enumerate() {
        writeln!(w, "{epoch},{i},{r},{},{s}", ranks[i])?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoRecord {
    pub epoch: usize,
    pub index: usize,
    pub rho: f64,
    pub rank: usize,
    pub stddev: f64,
}

pub fn read_rho_csv<R: BufRead>(r: R) -> Result<Vec<RhoRecord>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::Csv(e.to_string()))?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if line == "epoch,index,rho,rank,stddev" {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(Error::Csv(format!("line {}: expected 5 fields", i + 1)));
        }
        let bad = |e: String| Error::Csv(format!("line {}: {e}", i + 1));
        out.push(RhoRecord {
            epoch: f[0].parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            index: f[1].parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            rho: f[2]
                .parse()
                .map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            rank: f[3].parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            stddev: f[4]
                .parse()
                .map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_simulated_epoch_plans() {
        let rho = [0.3, 0.1, 0.4, 0.2];
        let plus = build_epoch_plan_dcl(&rho, 4, 2, DclVariant::Plus).unwrap();
        assert_eq!(plus.batches, vec![vec![1, 3], vec![0, 2]]);
        let minus = build_epoch_plan_dcl(&rho, 4, 2, DclVariant::Minus).unwrap();
        assert_eq!(minus.batches, vec![vec![0, 2], vec![1, 3]]);
    }

    #[test]
    fn partial_batch_dropped_and_small_pace_rejected() {
        let rho = [0.5, 0.4, 0.3, 0.2, 0.1];
        let plan = build_epoch_plan_dcl(&rho, 5, 2, DclVariant::Plus).unwrap();
        assert_eq!(plan.batches, vec![vec![4, 3], vec![2, 1]]);
        assert!(build_epoch_plan_dcl(&rho, 1, 2, DclVariant::Plus).is_err());
    }

    #[test]
    fn ties_break_by_index() {
        let plan = build_epoch_plan_dcl(&[0.0; 6], 6, 3, DclVariant::Plus).unwrap();
        assert_eq!(plan.batches, vec![vec![0, 1, 2], vec![3, 4, 5]]);
    }

    #[test]
    fn decomposition_edge_cases() {
        let w = [1.0, -2.0, 0.5];
        let wb = [0.0, 1.0, 2.0];
        let zero = distance_decomposition(&w, &wb, &GradientVector(vec![0.0; 3]), 0.1).unwrap();
        assert_eq!(zero.predicted_next_sq, zero.r_sq);
        assert_eq!(zero.actual_next_sq, zero.r_sq);

        // grad = a / eta lands exactly on w̄
        let eta = 0.5;
        let g: Vec<f64> = w.iter().zip(&wb).map(|(a, b)| (a - b) / eta).collect();
        let d = distance_decomposition(&w, &wb, &GradientVector(g), eta).unwrap();
        assert!(d.actual_next_sq.abs() < 1e-24);
        assert!(d.predicted_next_sq.abs() < 1e-12);
        assert!(distance_decomposition(&w, &wb, &GradientVector(vec![0.0; 3]), 0.0).is_err());
    }

    #[test]
    fn rho_csv_round_trip() {
        let mut buf = Vec::new();
        write_rho_csv(&mut buf, 1, &[0.5, -0.25], &[0.1, 0.2], true).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "epoch,index,rho,rank,stddev\n1,0,0.5,1,0.1\n1,1,-0.25,0,0.2\n");
        let recs = read_rho_csv(&buf[..]).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].rank, 0);
        assert_eq!(recs[1].rho, -0.25);
    }
}
