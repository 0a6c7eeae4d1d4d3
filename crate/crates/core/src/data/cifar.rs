//! CIFAR-10 / CIFAR-100 binary batch reader/writer.
//!
//! CIFAR-10 records are `label, 3072 pixels`; CIFAR-100 records are
//! `coarse, fine, 3072 pixels`. Pixels are stored channel-planar (R, G, B).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, Shape, Split};
use crate::{Error, Result};

const PIXELS: usize = 32 * 32 * 3;

/// CIFAR-100 fine labels of the "small mammals" super-class:
/// hamster, mouse, rabbit, shrew, squirrel.
pub const SMALL_MAMMALS_FINE: [usize; 5] = [36, 50, 65, 74, 80];
/// CIFAR-100 coarse label index of "small mammals".
pub const SMALL_MAMMALS_COARSE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CifarVariant {
    Cifar10,
    Cifar100,
}

impl CifarVariant {
    fn label_bytes(self) -> usize {
        match self {
            CifarVariant::Cifar10 => 1,
            CifarVariant::Cifar100 => 2,
        }
    }

    fn record_size(self) -> usize {
        self.label_bytes() + PIXELS
    }

    fn classes(self) -> usize {
        match self {
            CifarVariant::Cifar10 => 10,
            CifarVariant::Cifar100 => 100,
        }
    }

    fn name(self) -> &'static str {
        match self {
            CifarVariant::Cifar10 => "cifar10",
            CifarVariant::Cifar100 => "cifar100",
        }
    }
}

/// Concatenate one or more batch files into a dataset (train split by default).
pub fn load_cifar<P: AsRef<Path>>(paths: &[P], variant: CifarVariant) -> Result<Dataset> {
    if paths.is_empty() {
        return Err(Error::InvalidArgument("no CIFAR batch files given".into()));
    }
    let record = variant.record_size();
    let mut images = Vec::new();
    let mut labels = Vec::new();
    let mut coarse = Vec::new();
    for path in paths {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() % record != 0 || bytes.is_empty() {
            return Err(Error::MalformedRecord {
                path: path.to_path_buf(),
                len: bytes.len() as u64,
                record,
            });
        }
        images.reserve(bytes.len() / record * PIXELS);
        for rec in bytes.chunks_exact(record) {
            match variant {
                CifarVariant::Cifar10 => labels.push(rec[0] as usize),
                CifarVariant::Cifar100 => {
                    if rec[0] as usize >= 20 {
                        return Err(Error::LabelOutOfRange {
                            label: rec[0] as usize,
                            classes: 20,
                        });
                    }
                    coarse.push(rec[0] as usize);
                    labels.push(rec[1] as usize);
                }
            }
            images.extend_from_slice(&rec[variant.label_bytes()..]);
        }
    }
    let ds = Dataset::new(
        variant.name(),
        Split::Train,
        Shape::new(32, 32, 3),
        variant.classes(),
        images,
        labels,
    )?;
    match variant {
        CifarVariant::Cifar10 => Ok(ds),
        CifarVariant::Cifar100 => ds.with_coarse_labels(coarse),
    }
}

/// Write a dataset as a single CIFAR batch file.
pub fn write_cifar(ds: &Dataset, path: impl AsRef<Path>, variant: CifarVariant) -> Result<()> {
    let path = path.as_ref();
    if ds.dim() != PIXELS {
        return Err(Error::DimensionMismatch {
            what: "CIFAR image size",
            expected: PIXELS,
            got: ds.dim(),
        });
    }
    let coarse = match variant {
        CifarVariant::Cifar10 => None,
        CifarVariant::Cifar100 => Some(
            ds.coarse_labels()
                .ok_or_else(|| Error::InvalidArgument("CIFAR-100 output requires coarse labels".into()))?,
        ),
    };
    let mut out = Vec::with_capacity(ds.len() * variant.record_size());
    for i in 0..ds.len() {
        if let Some(c) = coarse {
            out.push(c[i] as u8);
        }
        out.push(ds.labels()[i] as u8);
        out.extend_from_slice(ds.image(i));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
