//! Labeled image datasets in their native binary formats.
//!
//! A [`Dataset`] keeps raw pixel bytes; numeric views used for scoring and
//! training are produced on demand by [`NormalizedDataset`].

mod cifar;
mod idx;
mod noise;
mod normalize;
mod registry;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use cifar::{load_cifar, write_cifar, CifarVariant, SMALL_MAMMALS_COARSE, SMALL_MAMMALS_FINE};
pub use idx::{load_mnist_idx, write_mnist_idx};
pub use noise::{inject_label_noise, label_noise_manifest, write_noise_manifest, LabelChange};
pub use normalize::{normalize, normalize_with, unit_value, NormalizedDataset, Standardization};
pub use registry::{data_root, load_named, DatasetName, DATA_DIR_ENV};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Split::Train => f.write_str("train"),
            Split::Test => f.write_str("test"),
        }
    }
}

/// Image shape as height, width, channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl Shape {
    pub const fn new(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
        }
    }

    pub const fn dim(&self) -> usize {
        self.height * self.width * self.channels
    }
}

/// Immutable labeled image set. Pixels are stored as `N × d` row-major bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    split: Split,
    shape: Shape,
    num_classes: usize,
    images: Vec<u8>,
    labels: Vec<usize>,
    coarse_labels: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        split: Split,
        shape: Shape,
        num_classes: usize,
        images: Vec<u8>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        let d = shape.dim();
        if d == 0 {
            return Err(Error::InvalidArgument("image dimension must be positive".into()));
        }
        if labels.is_empty() {
            return Err(Error::InvalidArgument(
                "dataset must contain at least one example".into(),
            ));
        }
        if num_classes == 0 {
            return Err(Error::InvalidArgument("class count must be positive".into()));
        }
        if images.len() != labels.len() * d {
            return Err(Error::DimensionMismatch {
                what: "image buffer length",
                expected: labels.len() * d,
                got: images.len(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::LabelOutOfRange {
                label,
                classes: num_classes,
            });
        }
        Ok(Self {
            name: name.into(),
            split,
            shape,
            num_classes,
            images,
            labels,
            coarse_labels: None,
        })
    }

    /// Attach CIFAR-100 style coarse labels (one per example).
    pub fn with_coarse_labels(mut self, coarse: Vec<usize>) -> Result<Self> {
        if coarse.len() != self.labels.len() {
            return Err(Error::CountMismatch {
                images: self.labels.len(),
                labels: coarse.len(),
            });
        }
        self.coarse_labels = Some(coarse);
        Ok(self)
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// Always false; datasets hold at least one example.
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn images(&self) -> &[u8] {
        &self.images
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let d = self.dim();
        &self.images[i * d..(i + 1) * d]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn coarse_labels(&self) -> Option<&[usize]> {
        self.coarse_labels.as_deref()
    }

    /// Same images with a replacement label vector.
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self> {
        let mut out = Dataset::new(
            self.name.clone(),
            self.split,
            self.shape,
            self.num_classes,
            self.images.clone(),
            labels,
        )?;
        out.coarse_labels = self.coarse_labels.clone();
        Ok(out)
    }

    /// Per-class example counts.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

/// Keep the examples whose label is in `keep_labels`, preserving order.
///
/// With `relabel`, kept labels are mapped to `0..keep_labels.len()` in
/// ascending order of the original label.
pub fn select_subset(ds: &Dataset, keep_labels: &[usize], relabel: bool) -> Result<Dataset> {
    let keep: BTreeSet<usize> = keep_labels.iter().copied().collect();
    if keep.is_empty() {
        return Err(Error::InvalidArgument("keep_labels must not be empty".into()));
    }
    if let Some(&bad) = keep.iter().find(|&&l| l >= ds.num_classes) {
        return Err(Error::LabelOutOfRange {
            label: bad,
            classes: ds.num_classes,
        });
    }
    let mut remap = vec![usize::MAX; ds.num_classes];
    for (new, &old) in keep.iter().enumerate() {
        remap[old] = if relabel { new } else { old };
    }

    let d = ds.dim();
    let mut images = Vec::new();
    let mut labels = Vec::new();
    let mut coarse = ds.coarse_labels.as_ref().map(|_| Vec::new());
    for (i, &l) in ds.labels.iter().enumerate() {
        if remap[l] == usize::MAX {
            continue;
        }
        images.extend_from_slice(&ds.images[i * d..(i + 1) * d]);
        labels.push(remap[l]);
        if let (Some(out), Some(src)) = (coarse.as_mut(), ds.coarse_labels.as_ref()) {
            out.push(src[i]);
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptySubset);
    }
    let num_classes = if relabel { keep.len() } else { ds.num_classes };
    let mut out = Dataset::new(ds.name.clone(), ds.split, ds.shape, num_classes, images, labels)?;
    out.coarse_labels = coarse;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn toy(labels: Vec<usize>, k: usize) -> Dataset {
        let n = labels.len();
        let images = (0..n * 2).map(|i| (i * 37 % 256) as u8).collect();
        Dataset::new("toy", Split::Train, Shape::new(1, 2, 1), k, images, labels).unwrap()
    }

    #[test]
    fn rejects_bad_buffers_and_labels() {
        let shape = Shape::new(1, 2, 1);
        assert!(matches!(
            Dataset::new("x", Split::Train, shape, 2, vec![0; 3], vec![0, 1]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            Dataset::new("x", Split::Train, shape, 2, vec![0; 4], vec![0, 2]),
            Err(Error::LabelOutOfRange { label: 2, .. })
        ));
        assert!(Dataset::new("x", Split::Train, shape, 2, vec![], vec![]).is_err());
    }

    #[test]
    fn subset_keeps_order_and_relabels_ascending() {
        let ds = toy(vec![3, 1, 0, 3, 2, 1], 4);
        let sub = select_subset(&ds, &[3, 1], true).unwrap();
        assert_eq!(sub.labels(), &[1, 0, 1, 0]);
        assert_eq!(sub.num_classes(), 2);
        assert_eq!(sub.image(0), ds.image(0));
        assert_eq!(sub.image(1), ds.image(1));
        assert_eq!(sub.image(2), ds.image(3));
        assert_eq!(sub.image(3), ds.image(5));

        let raw = select_subset(&ds, &[3, 1], false).unwrap();
        assert_eq!(raw.labels(), &[3, 1, 3, 1]);
        assert_eq!(raw.num_classes(), 4);
    }

    #[test]
    fn subset_with_all_labels_is_identity() {
        let ds = toy(vec![2, 0, 1, 1], 3);
        assert_eq!(select_subset(&ds, &[0, 1, 2], true).unwrap(), ds);
    }

    #[test]
    fn empty_subset_is_an_error() {
        let ds = toy(vec![0, 0, 1], 3);
        assert!(matches!(select_subset(&ds, &[2], true), Err(Error::EmptySubset)));
        assert!(select_subset(&ds, &[], true).is_err());
    }

    #[test]
    fn nested_subsets_equal_intersection() {
        let ds = toy(vec![0, 1, 2, 3, 4, 2, 1, 0, 4], 5);
        let outer = select_subset(&ds, &[0, 1, 2, 4], false).unwrap();
        let nested = select_subset(&outer, &[1, 2, 3], false).unwrap();
        let direct = select_subset(&ds, &[1, 2], false).unwrap();
        assert_eq!(nested, direct);
    }
}
