//! Named datasets resolved under a data root.
//!
//! Layout (the upstream archive names, unpacked):
//!
//! ```text
//! <root>/mnist/{train,t10k}-{images-idx3,labels-idx1}-ubyte[.gz]
//! <root>/fashion-mnist/  (same names)
//! <root>/cifar-10-batches-bin/{data_batch_1..5,test_batch}.bin
//! <root>/cifar-100-binary/{train,test}.bin
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{load_cifar, load_mnist_idx, select_subset, CifarVariant, Dataset, Split, SMALL_MAMMALS_FINE};
use crate::{Error, Result};

/// Environment variable naming the default data root.
pub const DATA_DIR_ENV: &str = "CURRICULUM_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetName {
    Mnist,
    FashionMnist,
    Cifar10,
    Cifar100,
    /// MNIST digits 0 and 1.
    #[serde(rename = "mnist-01")]
    Mnist01,
    /// CIFAR-100 small-mammals superclass, relabeled 0..5.
    SmallMammals,
}

impl DatasetName {
    pub const ALL: [DatasetName; 6] = [
        DatasetName::Mnist,
        DatasetName::FashionMnist,
        DatasetName::Cifar10,
        DatasetName::Cifar100,
        DatasetName::Mnist01,
        DatasetName::SmallMammals,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetName::Mnist => "mnist",
            DatasetName::FashionMnist => "fashion-mnist",
            DatasetName::Cifar10 => "cifar10",
            DatasetName::Cifar100 => "cifar100",
            DatasetName::Mnist01 => "mnist-01",
            DatasetName::SmallMammals => "small-mammals",
        }
    }
}

impl fmt::Display for DatasetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown dataset '{s}'")))
    }
}

/// The data root: `explicit` if given, otherwise `$CURRICULUM_DATA_DIR`.
pub fn data_root(explicit: Option<&Path>) -> Result<PathBuf> {
    if let Some(p) = explicit {
        return Ok(p.to_path_buf());
    }
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .ok_or_else(|| Error::MissingInput(format!("no data root given and {DATA_DIR_ENV} is not set")))
}

/// First existing candidate among `name` and `name.gz`.
fn idx_file(dir: &Path, name: &str) -> Result<PathBuf> {
    let raw = dir.join(name);
    let gz = dir.join(format!("{name}.gz"));
    if raw.is_file() {
        Ok(raw)
    } else if gz.is_file() {
        Ok(gz)
    } else {
        Err(Error::io(
            raw,
            std::io::Error::new(std::io::ErrorKind::NotFound, "neither raw nor .gz file found"),
        ))
    }
}

fn load_idx_pair(dir: &Path, name: &str) -> Result<(Dataset, Dataset)> {
    let load = |prefix: &str, split: Split| -> Result<Dataset> {
        Ok(load_mnist_idx(
            idx_file(dir, &format!("{prefix}-images-idx3-ubyte"))?,
            idx_file(dir, &format!("{prefix}-labels-idx1-ubyte"))?,
        )?
        .with_split(split)
        .with_name(name))
    };
    Ok((load("train", Split::Train)?, load("t10k", Split::Test)?))
}

fn load_cifar_dir(root: &Path, variant: CifarVariant) -> Result<(Dataset, Dataset)> {
    let (dir, train_files, test_file, name) = match variant {
        CifarVariant::Cifar10 => (
            root.join("cifar-10-batches-bin"),
            (1..=5).map(|i| format!("data_batch_{i}.bin")).collect::<Vec<_>>(),
            "test_batch.bin",
            "cifar10",
        ),
        CifarVariant::Cifar100 => (
            root.join("cifar-100-binary"),
            vec!["train.bin".to_string()],
            "test.bin",
            "cifar100",
        ),
    };
    let train_paths: Vec<PathBuf> = train_files.iter().map(|f| dir.join(f)).collect();
    let train = load_cifar(&train_paths, variant)?
        .with_split(Split::Train)
        .with_name(name);
    let test = load_cifar(&[dir.join(test_file)], variant)?
        .with_split(Split::Test)
        .with_name(name);
    Ok((train, test))
}

/// Load the train and test splits of a named dataset.
pub fn load_named(name: DatasetName, root: &Path) -> Result<(Dataset, Dataset)> {
    match name {
        DatasetName::Mnist => load_idx_pair(&root.join("mnist"), "mnist"),
        DatasetName::FashionMnist => load_idx_pair(&root.join("fashion-mnist"), "fashion-mnist"),
        DatasetName::Cifar10 => load_cifar_dir(root, CifarVariant::Cifar10),
        DatasetName::Cifar100 => load_cifar_dir(root, CifarVariant::Cifar100),
        DatasetName::Mnist01 => {
            let (tr, te) = load_idx_pair(&root.join("mnist"), "mnist")?;
            Ok((
                select_subset(&tr, &[0, 1], true)?.with_name("mnist-01"),
                select_subset(&te, &[0, 1], true)?.with_name("mnist-01"),
            ))
        }
        DatasetName::SmallMammals => {
            let (tr, te) = load_cifar_dir(root, CifarVariant::Cifar100)?;
            Ok((
                select_subset(&tr, &SMALL_MAMMALS_FINE, true)?.with_name("small-mammals"),
                select_subset(&te, &SMALL_MAMMALS_FINE, true)?.with_name("small-mammals"),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{write_mnist_idx, Shape};

    #[test]
    fn names_round_trip() {
        for n in DatasetName::ALL {
            assert_eq!(n.as_str().parse::<DatasetName>().unwrap(), n);
        }
        assert!("imagenet".parse::<DatasetName>().is_err());
    }

    #[test]
    fn resolves_gz_and_raw_idx_files() {
        let dir = tempfile::tempdir().unwrap();
        let mnist = dir.path().join("mnist");
        std::fs::create_dir(&mnist).unwrap();
        let ds = Dataset::new(
            "x",
            Split::Train,
            Shape::new(28, 28, 1),
            10,
            vec![3; 784 * 4],
            vec![0, 1, 2, 1],
        )
        .unwrap();
        write_mnist_idx(
            &ds,
            mnist.join("train-images-idx3-ubyte.gz"),
            mnist.join("train-labels-idx1-ubyte"),
        )
        .unwrap();
        write_mnist_idx(
            &ds,
            mnist.join("t10k-images-idx3-ubyte"),
            mnist.join("t10k-labels-idx1-ubyte.gz"),
        )
        .unwrap();
        let (tr, te) = load_named(DatasetName::Mnist01, dir.path()).unwrap();
        assert_eq!(tr.len(), 3);
        assert_eq!(tr.num_classes(), 2);
        assert_eq!(te.split(), Split::Test);
        assert_eq!(tr.name(), "mnist-01");
        assert!(matches!(
            load_named(DatasetName::Cifar10, dir.path()),
            Err(Error::Io { .. })
        ));
    }
}
