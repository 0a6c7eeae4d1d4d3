use std::io::Write;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelChange {
    pub index: usize,
    pub old_label: usize,
    pub new_label: usize,
}

/// Corrupt exactly `floor(fraction * N)` labels.
///
/// Indices are drawn uniformly without replacement; each chosen label is
/// replaced by a uniform draw over the `K - 1` other classes.
pub fn inject_label_noise(ds: &Dataset, fraction: f64, seed: u64) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!(
            "noise fraction {fraction} outside [0, 1]"
        )));
    }
    let k = ds.num_classes();
    if k < 2 {
        return Err(Error::InvalidArgument("label noise needs at least two classes".into()));
    }
    let n = ds.len();
    let count = (fraction * n as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = ds.labels().to_vec();
    for i in index::sample(&mut rng, n, count).into_iter() {
        let old = labels[i];
        let r = rng.gen_range(0..k - 1);
        labels[i] = if r >= old { r + 1 } else { r };
    }
    ds.with_labels(labels)
}

/// Label differences between a dataset and its corrupted copy.
pub fn label_noise_manifest(original: &Dataset, noisy: &Dataset) -> Result<Vec<LabelChange>> {
    if original.len() != noisy.len() {
        return Err(Error::CountMismatch {
            images: original.len(),
            labels: noisy.len(),
        });
    }
    Ok(original
        .labels()
        .iter()
        .zip(noisy.labels())
        .enumerate()
        .filter(|(_, (a, b))| a != b)
        .map(|(index, (&old_label, &new_label))| LabelChange {
            index,
            old_label,
            new_label,
        })
        .collect())
}

/// CSV `index,old_label,new_label`.
pub fn write_noise_manifest<W: Write>(mut w: W, changes: &[LabelChange]) -> std::io::Result<()> {
    writeln!(w, "index,old_label,new_label")?;
    for c in changes {
        writeln!(w, "{},{},{}", c.index, c.old_label, c.new_label)?;
    }
    Ok(())
}
