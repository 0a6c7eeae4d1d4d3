//! Experiment configuration files (TOML).
//!
//! ```toml
//! output_dir = "runs"
//!
//! [dataset]
//! name = "mnist-01"            # mnist | fashion-mnist | cifar10 | cifar100 | mnist-01 | small-mammals
//! root = "/data"               # optional, defaults to $CURRICULUM_DATA_DIR
//! subset = [0, 1]              # optional; kept labels are relabeled 0..
//! noise_fraction = 0.0
//! noise_seed = 0
//! standardization = "global"   # or "per-pixel"
//!
//! [model]
//! hidden = 10
//! use_bias = true
//! init_seed = 0
//!
//! [curriculum]
//! kind = "dcl"                 # vanilla | fixed | dcl
//! k = 0.9
//! variants = ["plus", "minus"]
//!
//! [train]
//! batch_size = 50
//! total_steps = 1000
//! seed = 0
//! eval_every = 10
//! lr = { lr0 = 0.1, decay_factor = 1.0, decay_step = 1000 }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::curriculum::TrainConfig;
use crate::data::{
    data_root, inject_label_noise, load_named, normalize_with, select_subset, DatasetName, NormalizedDataset,
    Standardization,
};
use crate::dcl::DclVariant;
use crate::nn::FcnArch;
use crate::pacing::PaceSpec;
use crate::scoring::{Direction, Scorer};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: DatasetName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<Vec<usize>>,
    #[serde(default)]
    pub noise_fraction: f64,
    #[serde(default)]
    pub noise_seed: u64,
    #[serde(default)]
    pub standardization: Standardization,
}

impl DatasetSpec {
    pub fn new(name: DatasetName) -> Self {
        Self {
            name,
            root: None,
            subset: None,
            noise_fraction: 0.0,
            noise_seed: 0,
            standardization: Standardization::Global,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.noise_fraction) {
            return Err(Error::Config(format!(
                "dataset.noise_fraction must be in [0, 1], got {}",
                self.noise_fraction
            )));
        }
        if self.subset.as_ref().is_some_and(Vec::is_empty) {
            return Err(Error::Config("dataset.subset must not be empty".into()));
        }
        Ok(())
    }

    /// Load, subset, corrupt (train split only) and normalize.
    pub fn load(&self) -> Result<(NormalizedDataset, NormalizedDataset)> {
        let root = data_root(self.root.as_deref())?;
        let (mut train, mut test) = load_named(self.name, &root)?;
        if let Some(keep) = &self.subset {
            train = select_subset(&train, keep, true)?;
            test = select_subset(&test, keep, true)?;
        }
        if self.noise_fraction > 0.0 {
            train = inject_label_noise(&train, self.noise_fraction, self.noise_seed)?;
        }
        normalize_with(train, test, self.standardization)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub hidden: usize,
    #[serde(default = "yes")]
    pub use_bias: bool,
    /// Seed of the shared initialization `w0`.
    #[serde(default)]
    pub init_seed: u64,
}

fn yes() -> bool {
    true
}

fn both_variants() -> Vec<DclVariant> {
    vec![DclVariant::Plus, DclVariant::Minus]
}

impl ModelSpec {
    pub fn arch(&self, d_in: usize, classes: usize) -> Result<FcnArch> {
        FcnArch::new(d_in, self.hidden, classes, self.use_bias)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurriculumSpec {
    Vanilla,
    Fixed {
        scorer: Scorer,
        direction: Direction,
        pace: PaceSpec,
        #[serde(default = "yes")]
        class_balanced: bool,
        #[serde(default)]
        balance_batches: bool,
    },
    Dcl {
        k: f64,
        #[serde(default = "both_variants")]
        variants: Vec<DclVariant>,
        /// Checkpoint of the reference optimum.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reference: Option<PathBuf>,
    },
}

impl CurriculumSpec {
    fn validate(&self) -> Result<()> {
        match self {
            CurriculumSpec::Vanilla => Ok(()),
            CurriculumSpec::Fixed { pace, .. } => pace.validate(),
            CurriculumSpec::Dcl { k, variants, .. } => {
                if !(*k > 0.0 && *k <= 1.0) {
                    return Err(Error::Config(format!("curriculum.k must be in (0, 1], got {k}")));
                }
                if variants.is_empty() {
                    return Err(Error::Config("curriculum.variants must not be empty".into()));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub dataset: DatasetSpec,
    pub model: ModelSpec,
    pub curriculum: CurriculumSpec,
    pub train: TrainConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        if self.model.hidden == 0 {
            return Err(Error::Config("model.hidden must be >= 1".into()));
        }
        self.curriculum.validate()?;
        self.train.validate().map_err(|e| Error::Config(e.to_string()))
    }

    /// Canonical TOML of the effective configuration.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// The effective configuration as `# `-prefixable header lines.
    pub fn header_lines(&self) -> Vec<String> {
        self.to_toml_string().lines().map(str::to_string).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
[dataset]
name = "mnist-01"

[model]
hidden = 10

[curriculum]
kind = "fixed"
scorer = "stddev"
direction = "minus"
pace = { kind = "exponential", starting_fraction = 0.1, inc = 1.9, step_length = 100 }

[train]
batch_size = 50
total_steps = 1000
seed = 3
lr = { lr0 = 0.1, decay_factor = 1.5, decay_step = 200 }
"#;

    #[test]
    fn parses_with_defaults_and_round_trips() {
        let cfg = ExperimentConfig::from_toml_str(EXAMPLE).unwrap();
        assert!(cfg.model.use_bias);
        assert_eq!(cfg.dataset.standardization, Standardization::Global);
        assert!(matches!(
            cfg.curriculum,
            CurriculumSpec::Fixed {
                class_balanced: true,
                balance_batches: false,
                direction: Direction::Minus,
                ..
            }
        ));
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = EXAMPLE.replace("hidden = 10", "hidden = 10\nwidth = 3");
        assert!(matches!(ExperimentConfig::from_toml_str(&bad), Err(Error::Config(_))));
        let bad = EXAMPLE.replace("scorer = \"stddev\"", "scorer = \"stddev\"\ncolour = 1");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
        let bad = EXAMPLE.replace("step_length = 100", "step_length = 100, speed = 2");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn validation_runs_before_use() {
        let bad = EXAMPLE.replace("batch_size = 50", "batch_size = 0");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
        let bad = EXAMPLE
            .replace("[model]", "[model]\ninit_seed = 1\n")
            .replace("hidden = 10", "hidden = 0");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
        let bad = EXAMPLE.replace("scorer = \"stddev\"", "scorer = \"brightness\"");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn dcl_defaults_to_both_variants() {
        let text = EXAMPLE.replace(
            "kind = \"fixed\"\nscorer = \"stddev\"\ndirection = \"minus\"\npace = { kind = \"exponential\", starting_fraction = 0.1, inc = 1.9, step_length = 100 }",
            "kind = \"dcl\"\nk = 0.9",
        );
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(
            cfg.curriculum,
            CurriculumSpec::Dcl {
                k: 0.9,
                variants: both_variants(),
                reference: None
            }
        );
    }
}
