use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::BatchPlan;
use crate::data::NormalizedDataset;
use crate::nn::{batch_loss_grad, evaluate, FcnModel, LrSchedule};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub total_steps: usize,
    pub seed: u64,
    pub lr: LrSchedule,
    /// Steps between test-set evaluations; 0 evaluates only at the end.
    #[serde(default)]
    pub eval_every: usize,
    #[serde(default)]
    pub track_per_example: bool,
    /// Epoch length in steps; defaults to `ceil(N / b)`.
    #[serde(default)]
    pub steps_per_epoch: Option<usize>,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
        }
        if self.total_steps == 0 {
            return Err(Error::InvalidArgument("total_steps must be >= 1".into()));
        }
        if self.steps_per_epoch == Some(0) {
            return Err(Error::InvalidArgument("steps_per_epoch must be positive".into()));
        }
        self.lr.validate()
    }

    pub fn epoch_len(&self, n: usize) -> usize {
        self.steps_per_epoch
            .unwrap_or_else(|| n.div_ceil(self.batch_size))
            .max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub step: usize,
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_loss: f64,
    pub test_acc: f64,
}

/// Learning-curve rows plus, optionally, per-epoch train correctness.
///
/// `step` counts completed SGD updates (row 0 is the initial model).
/// `train_loss` / `train_acc` average the mini-batches seen since the
/// previous row and are NaN for the initial row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsLog {
    pub rows: Vec<MetricsRow>,
    pub per_epoch_correct: Vec<Vec<bool>>,
}

const METRICS_HEADER: &str = "step,epoch,lr,train_loss,train_acc,test_loss,test_acc";

impl MetricsLog {
    pub fn row_at(&self, step: usize) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.step == step)
    }

    pub fn last(&self) -> Option<&MetricsRow> {
        self.rows.last()
    }

    /// CSV with the columns of [`MetricsRow`]. `preamble` lines are written
    /// first, each prefixed with `# `.
    pub fn write_csv<W: Write>(&self, mut w: W, preamble: &[String]) -> std::io::Result<()> {
        for line in preamble {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "{METRICS_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.step, r.epoch, r.lr, r.train_loss, r.train_acc, r.test_loss, r.test_acc
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Vec<MetricsRow>> {
        let mut rows = Vec::new();
        let mut header_seen = false;
        for line in r.lines() {
            let line = line.map_err(|e| Error::Csv(e.to_string()))?;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            if !header_seen {
                if line != METRICS_HEADER {
                    return Err(Error::Csv(format!("unexpected metrics header '{line}'")));
                }
                header_seen = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(Error::Csv(format!("expected 7 fields, got {}", f.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Csv(e.to_string()));
            let int = |s: &str| s.parse::<usize>().map_err(|e| Error::Csv(e.to_string()));
            rows.push(MetricsRow {
                step: int(f[0])?,
                epoch: int(f[1])?,
                lr: num(f[2])?,
                train_loss: num(f[3])?,
                train_acc: num(f[4])?,
                test_loss: num(f[5])?,
                test_acc: num(f[6])?,
            });
        }
        Ok(rows)
    }

    /// One line per epoch: `epoch,bits` with `1` for a correctly classified
    /// train example.
    pub fn write_correctness<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "epoch,correct")?;
        for (e, row) in self.per_epoch_correct.iter().enumerate() {
            let bits: String = row.iter().map(|&c| if c { '1' } else { '0' }).collect();
            writeln!(w, "{e},{bits}")?;
        }
        Ok(())
    }

    pub fn read_correctness<R: BufRead>(r: R) -> Result<Vec<Vec<bool>>> {
        let mut out = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::Csv(e.to_string()))?;
            if i == 0 {
                if line != "epoch,correct" {
                    return Err(Error::Csv(format!("unexpected correctness header '{line}'")));
                }
                continue;
            }
            let (_, bits) = line
                .split_once(',')
                .ok_or_else(|| Error::Csv(format!("malformed correctness line {i}")))?;
            out.push(
                bits.chars()
                    .map(|c| match c {
                        '1' => Ok(true),
                        '0' => Ok(false),
                        other => Err(Error::Csv(format!("bad correctness bit '{other}'"))),
                    })
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        Ok(out)
    }
}

/// Step-by-step SGD driver. The global step counter drives the learning-rate
/// schedule and the evaluation cadence, so several plans can be fed in
/// sequence (as dynamic curricula do, one epoch at a time).
pub struct Trainer<'a> {
    model: FcnModel,
    train: &'a NormalizedDataset,
    test: &'a NormalizedDataset,
    config: TrainConfig,
    epoch_len: usize,
    step: usize,
    log: MetricsLog,
    run_loss: f64,
    run_correct: usize,
    run_seen: usize,
}

impl<'a> Trainer<'a> {
    /// Creates the trainer and records the step-0 evaluation row.
    pub fn new(
        model: FcnModel,
        train: &'a NormalizedDataset,
        test: &'a NormalizedDataset,
        config: TrainConfig,
    ) -> Result<Self> {
        config.validate()?;
        if train.dim() != model.arch().d_in || test.dim() != model.arch().d_in {
            return Err(Error::ArchitectureMismatch(format!(
                "model expects {} inputs, data has {} (train) / {} (test)",
                model.arch().d_in,
                train.dim(),
                test.dim()
            )));
        }
        let epoch_len = config.epoch_len(train.len());
        let mut t = Self {
            model,
            train,
            test,
            config,
            epoch_len,
            step: 0,
            log: MetricsLog::default(),
            run_loss: 0.0,
            run_correct: 0,
            run_seen: 0,
        };
        t.record()?;
        Ok(t)
    }

    pub fn model(&self) -> &FcnModel {
        &self.model
    }

    pub fn steps_done(&self) -> usize {
        self.step
    }

    pub fn remaining(&self) -> usize {
        self.config.total_steps.saturating_sub(self.step)
    }

    pub fn log(&self) -> &MetricsLog {
        &self.log
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    fn record(&mut self) -> Result<()> {
        let eval = evaluate(&self.model, self.test)?;
        let (train_loss, train_acc) = if self.run_seen == 0 {
            (f64::NAN, f64::NAN)
        } else {
            (
                self.run_loss / self.run_seen as f64,
                self.run_correct as f64 / self.run_seen as f64,
            )
        };
        self.log.rows.push(MetricsRow {
            step: self.step,
            epoch: self.step / self.epoch_len,
            lr: self.config.lr.lr_at(self.step),
            train_loss,
            train_acc,
            test_loss: eval.mean_loss,
            test_acc: eval.accuracy,
        });
        self.run_loss = 0.0;
        self.run_correct = 0;
        self.run_seen = 0;
        Ok(())
    }

    /// One SGD update on the given example indices.
    pub fn step(&mut self, batch: &[usize]) -> Result<()> {
        if self.remaining() == 0 {
            return Err(Error::InvalidArgument("step budget exhausted".into()));
        }
        if let Some(&bad) = batch.iter().find(|&&i| i >= self.train.len()) {
            return Err(Error::InvalidArgument(format!("batch index {bad} out of range")));
        }
        let x = self.train.std_rows(batch);
        let labels: Vec<usize> = batch.iter().map(|&i| self.train.labels()[i]).collect();
        let (loss, grad, correct) = batch_loss_grad(&self.model, &x, &labels)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { step: self.step, loss });
        }
        let lr = self.config.lr.lr_at(self.step);
        self.model.apply_sgd(&grad, lr)?;
        if self.model.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged {
                step: self.step,
                loss: f64::NAN,
            });
        }
        self.step += 1;
        self.run_loss += loss * batch.len() as f64;
        self.run_correct += correct;
        self.run_seen += batch.len();

        if self.config.track_per_example && self.step.is_multiple_of(self.epoch_len) {
            let eval = evaluate(&self.model, self.train)?;
            self.log.per_epoch_correct.push(eval.correct);
        }
        let at_eval = self.config.eval_every > 0 && self.step.is_multiple_of(self.config.eval_every);
        if at_eval || self.step == self.config.total_steps {
            self.record()?;
        }
        Ok(())
    }

    /// Run batches from `plan` until the plan or the step budget runs out.
    pub fn run(&mut self, plan: &BatchPlan) -> Result<usize> {
        let n = plan.len().min(self.remaining());
        for batch in &plan.batches[..n] {
            self.step(batch)?;
        }
        Ok(n)
    }

    pub fn finish(self) -> (FcnModel, MetricsLog) {
        (self.model, self.log)
    }
}

/// Train `model` on the first `config.total_steps` batches of `plan`.
pub fn train(
    model: FcnModel,
    train: &NormalizedDataset,
    test: &NormalizedDataset,
    plan: &BatchPlan,
    config: &TrainConfig,
) -> Result<(FcnModel, MetricsLog)> {
    if plan.len() < config.total_steps {
        return Err(Error::InvalidArgument(format!(
            "plan has {} batches, {} steps requested",
            plan.len(),
            config.total_steps
        )));
    }
    let mut trainer = Trainer::new(model, train, test, config.clone())?;
    trainer.run(plan)?;
    Ok(trainer.finish())
}
