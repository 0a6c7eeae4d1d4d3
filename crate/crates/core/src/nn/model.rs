use std::fs;
use std::path::Path;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// ELU slope for negative inputs.
pub const ELU_ALPHA: f64 = 1.0;

/// Shape of a two-layer fully connected classifier (`FCN-m`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FcnArch {
    pub d_in: usize,
    pub hidden: usize,
    pub classes: usize,
    pub use_bias: bool,
}

impl FcnArch {
    pub fn new(d_in: usize, hidden: usize, classes: usize, use_bias: bool) -> Result<Self> {
        if d_in == 0 || hidden == 0 || classes == 0 {
            return Err(Error::InvalidArgument(format!(
                "network dimensions must be positive (d_in={d_in}, hidden={hidden}, classes={classes})"
            )));
        }
        Ok(Self {
            d_in,
            hidden,
            classes,
            use_bias,
        })
    }

    pub fn num_params(&self) -> usize {
        let w = self.hidden * self.d_in + self.classes * self.hidden;
        if self.use_bias {
            w + self.hidden + self.classes
        } else {
            w
        }
    }

    pub(crate) fn offsets(&self) -> Offsets {
        let w1 = 0;
        let b1 = w1 + self.hidden * self.d_in;
        let w2 = b1 + if self.use_bias { self.hidden } else { 0 };
        let b2 = w2 + self.classes * self.hidden;
        Offsets { b1, w2, b2 }
    }
}

/// Start offsets of each block in the flat layout `[W1, b1?, W2, b2?]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Offsets {
    pub b1: usize,
    pub w2: usize,
    pub b2: usize,
}

/// Flat gradient with the same layout as [`FcnModel::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector(pub Vec<f64>);

impl GradientVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::norm2(&self.0)
    }
}

/// Two-layer ELU network `x -> W2 elu(W1 x + b1) + b2` with a flat parameter
/// vector laid out as `[W1 (m×d), b1 (m)?, W2 (K×m), b2 (K)?]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FcnModel {
    arch: FcnArch,
    params: Vec<f64>,
}

impl FcnModel {
    /// Glorot-uniform weights, zero biases.
    pub fn init(arch: FcnArch, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; arch.num_params()];
        let off = arch.offsets();

        let lim1 = (6.0 / (arch.d_in + arch.hidden) as f64).sqrt();
        let u1 = Uniform::new_inclusive(-lim1, lim1);
        for w in &mut params[..arch.hidden * arch.d_in] {
            *w = u1.sample(&mut rng);
        }
        let lim2 = (6.0 / (arch.hidden + arch.classes) as f64).sqrt();
        let u2 = Uniform::new_inclusive(-lim2, lim2);
        for w in &mut params[off.w2..off.w2 + arch.classes * arch.hidden] {
            *w = u2.sample(&mut rng);
        }
        Self { arch, params }
    }

    pub fn zeros(arch: FcnArch) -> Self {
        Self {
            arch,
            params: vec![0.0; arch.num_params()],
        }
    }

    /// Rebuild a model from its flat parameter vector.
    pub fn from_flat(arch: FcnArch, params: Vec<f64>) -> Result<Self> {
        if params.len() != arch.num_params() {
            return Err(Error::DimensionMismatch {
                what: "flat parameter vector",
                expected: arch.num_params(),
                got: params.len(),
            });
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { arch, params })
    }

    pub fn arch(&self) -> FcnArch {
        self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn into_params(self) -> Vec<f64> {
        self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn w1(&self) -> &[f64] {
        &self.params[..self.arch.hidden * self.arch.d_in]
    }

    pub fn b1(&self) -> Option<&[f64]> {
        let off = self.arch.offsets();
        self.arch.use_bias.then(|| &self.params[off.b1..off.w2])
    }

    pub fn w2(&self) -> &[f64] {
        let off = self.arch.offsets();
        &self.params[off.w2..off.w2 + self.arch.classes * self.arch.hidden]
    }

    pub fn b2(&self) -> Option<&[f64]> {
        let off = self.arch.offsets();
        self.arch.use_bias.then(|| &self.params[off.b2..])
    }

    /// In-place `w <- w - lr * grad`.
    pub fn apply_sgd(&mut self, grad: &GradientVector, lr: f64) -> Result<()> {
        if grad.len() != self.params.len() {
            return Err(Error::DimensionMismatch {
                what: "gradient length",
                expected: self.params.len(),
                got: grad.len(),
            });
        }
        crate::linalg::axpy(-lr, &grad.0, &mut self.params);
        Ok(())
    }

    pub fn to_checkpoint_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&CheckpointHeader {
            d_in: self.arch.d_in,
            hidden: self.arch.hidden,
            classes: self.arch.classes,
            use_bias: self.arch.use_bias,
            n_params: self.params.len(),
        })
        .expect("header serializes");
        let mut out = Vec::with_capacity(16 + header.len() + 8 * self.params.len());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::Checkpoint(msg.to_string());
        if bytes.len() < 16 || &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(bad("missing checkpoint magic"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let hlen = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let header: CheckpointHeader = bytes
            .get(16..16 + hlen)
            .ok_or_else(|| bad("truncated header"))
            .and_then(|h| serde_json::from_slice(h).map_err(|e| Error::Checkpoint(e.to_string())))?;
        let arch = FcnArch::new(header.d_in, header.hidden, header.classes, header.use_bias)?;
        if header.n_params != arch.num_params() {
            return Err(bad("parameter count disagrees with architecture"));
        }
        let body = &bytes[16 + hlen..];
        if body.len() != 8 * header.n_params {
            return Err(bad("parameter payload has the wrong length"));
        }
        let params = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_flat(arch, params)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_checkpoint_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_checkpoint_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"FCNCKPT\0";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointHeader {
    d_in: usize,
    hidden: usize,
    classes: usize,
    use_bias: bool,
    n_params: usize,
}

/// Fresh model; same seed gives identical parameters.
pub fn init_model(d_in: usize, hidden: usize, classes: usize, use_bias: bool, seed: u64) -> Result<FcnModel> {
    Ok(FcnModel::init(FcnArch::new(d_in, hidden, classes, use_bias)?, seed))
}

/// Functional SGD update.
pub fn sgd_step(model: &FcnModel, grad: &GradientVector, lr: f64) -> Result<FcnModel> {
    if lr.is_nan() || lr <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "learning rate must be positive, got {lr}"
        )));
    }
    let mut out = model.clone();
    out.apply_sgd(grad, lr)?;
    Ok(out)
}
