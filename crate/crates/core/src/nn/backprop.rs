use super::model::{FcnModel, GradientVector, ELU_ALPHA};
use crate::linalg::{axpy, dot};
use crate::{Error, Result};

#[inline]
pub fn elu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        ELU_ALPHA * z.exp_m1()
    }
}

#[inline]
fn elu_grad(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        ELU_ALPHA * z.exp()
    }
}

/// Hidden pre-activations and activations for the last forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub rows: usize,
    pub z1: Vec<f64>,
    pub h1: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Forward {
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    pub cache: ForwardCache,
}

fn check_batch(model: &FcnModel, batch: &[f64]) -> Result<usize> {
    let d = model.arch().d_in;
    if !batch.len().is_multiple_of(d) {
        return Err(Error::DimensionMismatch {
            what: "batch width",
            expected: d,
            got: batch.len() % d,
        });
    }
    if batch.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(batch.len() / d)
}

fn hidden_row(model: &FcnModel, x: &[f64], z1: &mut [f64], h1: &mut [f64]) {
    let a = model.arch();
    let w1 = model.w1();
    let b1 = model.b1();
    for j in 0..a.hidden {
        let mut z = dot(&w1[j * a.d_in..(j + 1) * a.d_in], x);
        if let Some(b) = b1 {
            z += b[j];
        }
        z1[j] = z;
        h1[j] = elu(z);
    }
}

fn logits_row(model: &FcnModel, h1: &[f64], out: &mut [f64]) {
    let a = model.arch();
    let w2 = model.w2();
    let b2 = model.b2();
    for k in 0..a.classes {
        let mut z = dot(&w2[k * a.hidden..(k + 1) * a.hidden], h1);
        if let Some(b) = b2 {
            z += b[k];
        }
        out[k] = z;
    }
}

/// Row softmax with max subtraction; returns `ln(sum exp(z - max)) + max`.
fn softmax_row(logits: &[f64], probs: &mut [f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (p, &z) in probs.iter_mut().zip(logits) {
        *p = (z - max).exp();
        sum += *p;
    }
    for p in probs.iter_mut() {
        *p /= sum;
    }
    sum.ln() + max
}

/// Forward pass over a row-major `B × d` batch.
pub fn forward(model: &FcnModel, batch: &[f64]) -> Result<Forward> {
    let rows = check_batch(model, batch)?;
    let a = model.arch();
    let mut z1 = vec![0.0; rows * a.hidden];
    let mut h1 = vec![0.0; rows * a.hidden];
    let mut logits = vec![0.0; rows * a.classes];
    let mut probs = vec![0.0; rows * a.classes];
    for r in 0..rows {
        let hs = r * a.hidden..(r + 1) * a.hidden;
        let ks = r * a.classes..(r + 1) * a.classes;
        hidden_row(
            model,
            &batch[r * a.d_in..(r + 1) * a.d_in],
            &mut z1[hs.clone()],
            &mut h1[hs.clone()],
        );
        logits_row(model, &h1[hs], &mut logits[ks.clone()]);
        softmax_row(&logits[ks.clone()], &mut probs[ks]);
    }
    Ok(Forward {
        logits,
        probs,
        cache: ForwardCache { rows, z1, h1 },
    })
}

/// Cross-entropy of one row, plus the row's probabilities and hidden cache.
pub(crate) struct RowPass {
    pub loss: f64,
    pub z1: Vec<f64>,
    pub h1: Vec<f64>,
    pub probs: Vec<f64>,
}

pub(crate) fn row_pass(model: &FcnModel, x: &[f64], label: usize) -> RowPass {
    let a = model.arch();
    let mut z1 = vec![0.0; a.hidden];
    let mut h1 = vec![0.0; a.hidden];
    let mut logits = vec![0.0; a.classes];
    let mut probs = vec![0.0; a.classes];
    hidden_row(model, x, &mut z1, &mut h1);
    logits_row(model, &h1, &mut logits);
    let lse = softmax_row(&logits, &mut probs);
    RowPass {
        loss: lse - logits[label],
        z1,
        h1,
        probs,
    }
}

fn check_labels(model: &FcnModel, labels: &[usize], rows: usize) -> Result<()> {
    if labels.len() != rows {
        return Err(Error::DimensionMismatch {
            what: "label count",
            expected: rows,
            got: labels.len(),
        });
    }
    let k = model.arch().classes;
    if let Some(&label) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::LabelOutOfRange { label, classes: k });
    }
    Ok(())
}

/// Mean softmax cross-entropy over the batch and its analytic gradient.
pub fn loss_and_grad(model: &FcnModel, batch: &[f64], labels: &[usize]) -> Result<(f64, GradientVector)> {
    batch_loss_grad(model, batch, labels).map(|(loss, grad, _)| (loss, grad))
}

/// [`loss_and_grad`] plus the number of argmax-correct rows.
pub(crate) fn batch_loss_grad(
    model: &FcnModel,
    batch: &[f64],
    labels: &[usize],
) -> Result<(f64, GradientVector, usize)> {
    let rows = check_batch(model, batch)?;
    check_labels(model, labels, rows)?;
    if rows == 0 {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let a = model.arch();
    let off = a.offsets();
    let scale = 1.0 / rows as f64;
    let w2 = model.w2();
    let mut grad = vec![0.0; model.num_params()];
    let mut loss = 0.0;
    let mut correct = 0;
    let mut delta1 = vec![0.0; a.hidden];
    let mut delta2 = vec![0.0; a.classes];

    for (r, &y) in labels.iter().enumerate() {
        let x = &batch[r * a.d_in..(r + 1) * a.d_in];
        let pass = row_pass(model, x, y);
        loss += pass.loss;
        if super::eval::argmax(&pass.probs) == y {
            correct += 1;
        }

        for (k, (d, &p)) in delta2.iter_mut().zip(&pass.probs).enumerate() {
            *d = (p - if k == y { 1.0 } else { 0.0 }) * scale;
        }
        delta1.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..a.classes {
            let row = &w2[k * a.hidden..(k + 1) * a.hidden];
            axpy(delta2[k], row, &mut delta1);
        }
        for (d, &z) in delta1.iter_mut().zip(&pass.z1) {
            *d *= elu_grad(z);
        }

        for k in 0..a.classes {
            let g = &mut grad[off.w2 + k * a.hidden..off.w2 + (k + 1) * a.hidden];
            axpy(delta2[k], &pass.h1, g);
        }
        for j in 0..a.hidden {
            axpy(delta1[j], x, &mut grad[j * a.d_in..(j + 1) * a.d_in]);
        }
        if a.use_bias {
            for j in 0..a.hidden {
                grad[off.b1 + j] += delta1[j];
            }
            for k in 0..a.classes {
                grad[off.b2 + k] += delta2[k];
            }
        }
    }
    Ok((loss * scale, GradientVector(grad), correct))
}

/// Gradient of the cross-entropy of a single example.
pub fn per_example_grad(model: &FcnModel, example: &[f64], label: usize) -> Result<GradientVector> {
    loss_and_grad(model, example, &[label]).map(|(_, g)| g)
}

/// `direction · ∇f(x, y)` without materializing the per-example gradient.
///
/// `direction` uses the flat parameter layout.
pub fn grad_dot(model: &FcnModel, x: &[f64], label: usize, direction: &[f64]) -> Result<f64> {
    let a = model.arch();
    if x.len() != a.d_in {
        return Err(Error::DimensionMismatch {
            what: "example width",
            expected: a.d_in,
            got: x.len(),
        });
    }
    if direction.len() != model.num_params() {
        return Err(Error::DimensionMismatch {
            what: "direction length",
            expected: model.num_params(),
            got: direction.len(),
        });
    }
    check_labels(model, &[label], 1)?;
    Ok(grad_dot_unchecked(model, x, label, direction))
}

pub(crate) fn grad_dot_unchecked(model: &FcnModel, x: &[f64], label: usize, direction: &[f64]) -> f64 {
    let a = model.arch();
    let off = a.offsets();
    let w2 = model.w2();
    let pass = row_pass(model, x, label);

    let mut total = 0.0;
    let mut delta1 = vec![0.0; a.hidden];
    for k in 0..a.classes {
        let d2 = pass.probs[k] - if k == label { 1.0 } else { 0.0 };
        axpy(d2, &w2[k * a.hidden..(k + 1) * a.hidden], &mut delta1);
        let dir_row = &direction[off.w2 + k * a.hidden..off.w2 + (k + 1) * a.hidden];
        let mut t = dot(dir_row, &pass.h1);
        if a.use_bias {
            t += direction[off.b2 + k];
        }
        total += d2 * t;
    }
    for j in 0..a.hidden {
        let d1 = delta1[j] * elu_grad(pass.z1[j]);
        let mut t = dot(&direction[j * a.d_in..(j + 1) * a.d_in], x);
        if a.use_bias {
            t += direction[off.b1 + j];
        }
        total += d1 * t;
    }
    total
}
