use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::{Error, Result};

/// How the training view is standardized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Standardization {
    /// One scalar mean and std over every pixel of the train split.
    #[default]
    Global,
    /// Mean and std per pixel position. Positions that are constant across
    /// the train split are centered but not rescaled.
    PerPixel,
}

/// A dataset together with its two numeric views.
///
/// * `unit` view: `p / 127.5 - 1`, in `[-1, 1]`; used for scoring.
/// * `std` view: standardized with statistics of the *train* split; used for
///   training and evaluation.
///
/// Views are computed on demand from the raw bytes, so no `N × d` float
/// buffer is ever held.
#[derive(Debug, Clone)]
pub struct NormalizedDataset {
    base: Arc<Dataset>,
    mode: Standardization,
    mean: Vec<f64>,
    std: Vec<f64>,
    unit_lut: [f64; 256],
    std_lut: Option<[f64; 256]>,
}

pub fn unit_value(p: u8) -> f64 {
    p as f64 / 127.5 - 1.0
}

fn global_stats(ds: &Dataset) -> (f64, f64) {
    let mut counts = [0u64; 256];
    for &p in ds.images() {
        counts[p as usize] += 1;
    }
    let n = ds.images().len() as f64;
    let sum: u128 = counts.iter().enumerate().map(|(v, &c)| v as u128 * c as u128).sum();
    let mean = sum as f64 / n;
    let var = counts
        .iter()
        .enumerate()
        .map(|(v, &c)| c as f64 * (v as f64 - mean).powi(2))
        .sum::<f64>()
        / n;
    (mean, var.sqrt())
}

fn per_pixel_stats(ds: &Dataset) -> (Vec<f64>, Vec<f64>) {
    let d = ds.dim();
    let n = ds.len() as f64;
    let mut sum = vec![0u64; d];
    for i in 0..ds.len() {
        for (s, &p) in sum.iter_mut().zip(ds.image(i)) {
            *s += p as u64;
        }
    }
    let mean: Vec<f64> = sum.iter().map(|&s| s as f64 / n).collect();
    let mut sq = vec![0.0f64; d];
    for i in 0..ds.len() {
        for ((acc, &p), m) in sq.iter_mut().zip(ds.image(i)).zip(&mean) {
            *acc += (p as f64 - m).powi(2);
        }
    }
    let std = sq
        .into_iter()
        .map(|s| {
            let sd = (s / n).sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    (mean, std)
}

impl NormalizedDataset {
    fn build(base: Arc<Dataset>, mode: Standardization, mean: Vec<f64>, std: Vec<f64>) -> Self {
        let mut unit_lut = [0.0; 256];
        for (p, v) in unit_lut.iter_mut().enumerate() {
            *v = unit_value(p as u8);
        }
        let std_lut = match mode {
            Standardization::Global => {
                let mut lut = [0.0; 256];
                for (p, v) in lut.iter_mut().enumerate() {
                    *v = (p as f64 - mean[0]) / std[0];
                }
                Some(lut)
            }
            Standardization::PerPixel => None,
        };
        Self {
            base,
            mode,
            mean,
            std,
            unit_lut,
            std_lut,
        }
    }

    pub fn base(&self) -> &Dataset {
        &self.base
    }

    pub fn base_arc(&self) -> &Arc<Dataset> {
        &self.base
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn labels(&self) -> &[usize] {
        self.base.labels()
    }

    pub fn num_classes(&self) -> usize {
        self.base.num_classes()
    }

    pub fn standardization(&self) -> Standardization {
        self.mode
    }

    /// Train-split mean(s) used for the std view (length 1 for global mode).
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Train-split std(s) used for the std view (length 1 for global mode).
    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn unit_row_into(&self, i: usize, out: &mut [f64]) {
        for (o, &p) in out.iter_mut().zip(self.base.image(i)) {
            *o = self.unit_lut[p as usize];
        }
    }

    pub fn unit_row(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.unit_row_into(i, &mut out);
        out
    }

    pub fn std_row_into(&self, i: usize, out: &mut [f64]) {
        let img = self.base.image(i);
        match &self.std_lut {
            Some(lut) => {
                for (o, &p) in out.iter_mut().zip(img) {
                    *o = lut[p as usize];
                }
            }
            None => {
                for (j, (o, &p)) in out.iter_mut().zip(img).enumerate() {
                    *o = (p as f64 - self.mean[j]) / self.std[j];
                }
            }
        }
    }

    pub fn std_row(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.std_row_into(i, &mut out);
        out
    }

    /// Row-major `indices.len() × d` block of the std view.
    pub fn std_rows(&self, indices: &[usize]) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; indices.len() * d];
        for (row, &i) in out.chunks_exact_mut(d).zip(indices) {
            self.std_row_into(i, row);
        }
        out
    }
}

/// Standardize with the global scalar train statistics.
pub fn normalize(train: Dataset, test: Dataset) -> Result<(NormalizedDataset, NormalizedDataset)> {
    normalize_with(train, test, Standardization::Global)
}

pub fn normalize_with(
    train: Dataset,
    test: Dataset,
    mode: Standardization,
) -> Result<(NormalizedDataset, NormalizedDataset)> {
    if train.dim() != test.dim() {
        return Err(Error::DimensionMismatch {
            what: "test image dimension",
            expected: train.dim(),
            got: test.dim(),
        });
    }
    let (gmean, gstd) = global_stats(&train);
    if gstd == 0.0 {
        return Err(Error::DegenerateData(format!(
            "train split '{}' has zero pixel variance",
            train.name()
        )));
    }
    let (mean, std) = match mode {
        Standardization::Global => (vec![gmean], vec![gstd]),
        Standardization::PerPixel => per_pixel_stats(&train),
    };
    let train = NormalizedDataset::build(Arc::new(train), mode, mean.clone(), std.clone());
    let test = NormalizedDataset::build(Arc::new(test), mode, mean, std);
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Shape, Split};

    fn ds(images: Vec<u8>, d: usize) -> Dataset {
        let n = images.len() / d;
        Dataset::new("t", Split::Train, Shape::new(1, d, 1), 2, images, vec![0; n]).unwrap()
    }

    #[test]
    fn constant_train_set_is_degenerate() {
        let err = normalize(ds(vec![0; 8], 4), ds(vec![1; 4], 4)).unwrap_err();
        assert!(matches!(err, Error::DegenerateData(_)));
    }

    #[test]
    fn two_extreme_pixels_standardize_to_plus_minus_one() {
        let (tr, _) = normalize(ds(vec![0, 255], 1), ds(vec![0], 1)).unwrap();
        assert_eq!(tr.std_row(0), vec![-1.0]);
        assert_eq!(tr.std_row(1), vec![1.0]);
    }

    #[test]
    fn unit_view_hits_the_interval_ends() {
        let (tr, _) = normalize(ds(vec![0, 255, 128, 127], 2), ds(vec![0, 0], 2)).unwrap();
        assert_eq!(tr.unit_row(0), vec![-1.0, 1.0]);
        let r = tr.unit_row(1);
        assert!(r.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn test_split_uses_train_statistics() {
        let (tr, te) = normalize(ds(vec![0, 10, 20, 30], 2), ds(vec![15, 15], 2)).unwrap();
        assert_eq!(tr.mean(), te.mean());
        assert_eq!(te.std_row(0), vec![0.0, 0.0]);
    }

    #[test]
    fn train_std_view_is_standardized() {
        let images: Vec<u8> = (0..997u32).map(|i| (i * i % 251) as u8).collect();
        let (tr, _) = normalize(ds(images.clone(), 1), ds(vec![3], 1)).unwrap();
        let vals: Vec<f64> = (0..tr.len()).flat_map(|i| tr.std_row(i)).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 1e-6);
        assert!((sd - 1.0).abs() < 1e-6);
    }

    #[test]
    fn per_pixel_mode_standardizes_each_position() {
        let images = vec![0, 7, 10, 7, 20, 7, 30, 7];
        let (tr, _) = normalize_with(ds(images, 2), ds(vec![0, 0], 2), Standardization::PerPixel).unwrap();
        let col0: Vec<f64> = (0..4).map(|i| tr.std_row(i)[0]).collect();
        let m = col0.iter().sum::<f64>() / 4.0;
        let v = col0.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 4.0;
        assert!(m.abs() < 1e-12 && (v - 1.0).abs() < 1e-12);
        // constant column: centered, not scaled
        assert!((0..4).all(|i| tr.std_row(i)[1] == 0.0));
    }
}
