use std::io::Write;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::pacing::PaceSpec;
use crate::scoring::CurriculumOrder;
use crate::{Error, Result};

/// Ordered sequence of equally sized mini-batches of example indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchPlan {
    pub batch_size: usize,
    pub batches: Vec<Vec<usize>>,
}

impl BatchPlan {
    pub fn new(batch_size: usize, batches: Vec<Vec<usize>>) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        if let Some(b) = batches.iter().find(|b| b.len() != batch_size) {
            return Err(Error::DimensionMismatch {
                what: "mini-batch size",
                expected: batch_size,
                got: b.len(),
            });
        }
        Ok(Self { batch_size, batches })
    }

    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.batches.iter().flatten().copied().max()
    }

    /// CSV `step,slot,index`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,slot,index")?;
        for (step, batch) in self.batches.iter().enumerate() {
            for (slot, idx) in batch.iter().enumerate() {
                writeln!(w, "{step},{slot},{idx}")?;
            }
        }
        Ok(())
    }
}

fn check_order(order: &CurriculumOrder, n: usize) -> Result<()> {
    if order.len() != n {
        return Err(Error::DimensionMismatch {
            what: "curriculum order length",
            expected: n,
            got: order.len(),
        });
    }
    Ok(())
}

/// Fixed-curriculum plan: at step `i` the first `pace(i)` entries of the
/// order are eligible and `b` distinct ones are drawn uniformly. Batches are
/// independent of each other, so examples repeat across batches.
pub fn build_batch_plan_curriculum(
    order: &CurriculumOrder,
    pace: &PaceSpec,
    n: usize,
    b: usize,
    steps: usize,
    seed: u64,
) -> Result<BatchPlan> {
    check_order(order, n)?;
    pace.validate()?;
    if b == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut batches = Vec::with_capacity(steps);
    for i in 0..steps {
        let prefix = pace.size(i, n, b)?.min(n);
        if prefix < b {
            return Err(Error::PrefixTooSmall {
                step: i,
                prefix,
                batch: b,
            });
        }
        let batch = index::sample(&mut rng, prefix, b)
            .into_iter()
            .map(|pos| order.perm[pos])
            .collect();
        batches.push(batch);
    }
    BatchPlan::new(b, batches)
}

/// Uniform sampling from the whole dataset.
pub fn build_batch_plan_vanilla(n: usize, b: usize, steps: usize, seed: u64) -> Result<BatchPlan> {
    build_batch_plan_curriculum(
        &CurriculumOrder::identity(n),
        &PaceSpec::ConstantFraction { k: 1.0 },
        n,
        b,
        steps,
        seed,
    )
}

/// Like [`build_batch_plan_curriculum`], but each batch draws (nearly) equal
/// counts from every class present in the exposed prefix.
pub fn build_batch_plan_balanced(
    order: &CurriculumOrder,
    pace: &PaceSpec,
    labels: &[usize],
    b: usize,
    steps: usize,
    seed: u64,
) -> Result<BatchPlan> {
    let n = labels.len();
    check_order(order, n)?;
    pace.validate()?;
    if b == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut batches = Vec::with_capacity(steps);
    // prefix members grouped by class; extended incrementally as pace grows
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut grouped = 0;
    for i in 0..steps {
        let prefix = pace.size(i, n, b)?.min(n);
        if prefix < b {
            return Err(Error::PrefixTooSmall {
                step: i,
                prefix,
                batch: b,
            });
        }
        if prefix > grouped {
            for &idx in &order.perm[grouped..prefix] {
                groups[labels[idx]].push(idx);
            }
            grouped = prefix;
        }
        let eligible: Vec<usize> = (0..k).filter(|&c| !groups[c].is_empty()).collect();
        let quotas = balanced_quotas(&eligible, &groups, b, &mut rng);
        let mut batch = Vec::with_capacity(b);
        for (&c, &q) in eligible.iter().zip(&quotas) {
            batch.extend(
                index::sample(&mut rng, groups[c].len(), q)
                    .into_iter()
                    .map(|p| groups[c][p]),
            );
        }
        batches.push(batch);
    }
    BatchPlan::new(b, batches)
}

/// Split `b` slots over classes as evenly as their sizes allow.
fn balanced_quotas(eligible: &[usize], groups: &[Vec<usize>], b: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let c = eligible.len();
    let mut quotas = vec![b / c; c];
    for extra in index::sample(rng, c, b % c).into_iter() {
        quotas[extra] += 1;
    }
    // move overflow from small classes to classes with spare capacity
    let mut overflow = 0;
    for (q, &cls) in quotas.iter_mut().zip(eligible) {
        let cap = groups[cls].len();
        if *q > cap {
            overflow += *q - cap;
            *q = cap;
        }
    }
    while overflow > 0 {
        for (q, &cls) in quotas.iter_mut().zip(eligible) {
            if overflow > 0 && *q < groups[cls].len() {
                *q += 1;
                overflow -= 1;
            }
        }
    }
    quotas
}
