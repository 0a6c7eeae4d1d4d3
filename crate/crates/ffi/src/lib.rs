//! C ABI for `curriculum-core`.
//!
//! Conventions:
//!
//! * every fallible function returns a [`CurStatus`]; results go through out
//!   pointers, and on failure [`cur_last_error`] describes the problem;
//! * datasets and models are opaque handles created by `*_new` / `*_load`
//!   functions and released with the matching `*_free`;
//! * caller-owned output buffers come with their length, which must match
//!   exactly;
//! * labels cross the boundary as `uint32_t`.
//!
//! The generated header lives in `include/curriculum.h`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::OnceLock;

use curriculum_core::analysis::{median_pixel_distance, pearson, PixelScale};
use curriculum_core::data::{
    inject_label_noise, load_cifar, load_mnist_idx, normalize, select_subset, CifarVariant, Dataset, NormalizedDataset,
    Shape, Split,
};
use curriculum_core::dcl::{distance_decomposition, rho_scores};
use curriculum_core::nn::{evaluate, loss_and_grad, FcnArch, FcnModel, GradientVector, LrSchedule};
use curriculum_core::pacing::{pace_constant, pace_exponential, PaceSpec};
use curriculum_core::scoring::{ascending_order, class_balanced_order, score_dataset, Direction, ScoreVector, Scorer};
use curriculum_core::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    DegenerateData = 5,
    Diverged = 6,
    ArchitectureMismatch = 7,
    BufferSize = 8,
    AtOptimum = 9,
    Panic = 10,
}

pub const CUR_SCORER_STDDEV: u32 = 0;
pub const CUR_SCORER_ENTROPY: u32 = 1;
pub const CUR_SCORER_NORM: u32 = 2;
pub const CUR_SCORER_CLASS_NORM: u32 = 3;

pub const CUR_DIRECTION_PLUS: u32 = 0;
pub const CUR_DIRECTION_MINUS: u32 = 1;

pub const CUR_CIFAR10: u32 = 10;
pub const CUR_CIFAR100: u32 = 100;

pub const CUR_SCALE_ZERO_ONE: u32 = 0;
pub const CUR_SCALE_UNIT: u32 = 1;

/// Labeled images; normalized views are built on first use from the
/// dataset's own statistics.
pub struct CurDataset {
    data: Dataset,
    normalized: OnceLock<NormalizedDataset>,
}

/// Two-layer ELU classifier.
pub struct CurModel {
    model: FcnModel,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> CurStatus {
    match e {
        Error::Io { .. } | Error::MissingInput(_) => CurStatus::Io,
        Error::BadMagic { .. }
        | Error::Truncated { .. }
        | Error::CountMismatch { .. }
        | Error::MalformedRecord { .. }
        | Error::TrailingBytes { .. }
        | Error::Checkpoint(_)
        | Error::Csv(_) => CurStatus::Format,
        Error::DegenerateData(_) | Error::ZeroVariance | Error::EmptySubset => CurStatus::DegenerateData,
        Error::Diverged { .. } | Error::NonFinite => CurStatus::Diverged,
        Error::ArchitectureMismatch(_) => CurStatus::ArchitectureMismatch,
        Error::DimensionMismatch { .. } => CurStatus::BufferSize,
        Error::AtOptimum => CurStatus::AtOptimum,
        _ => CurStatus::InvalidArgument,
    }
}

struct Fail(CurStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(CurStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CurStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CurStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CurStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Fail(CurStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a, T>(ptr: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(Fail(CurStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn handle<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Fail> {
    ptr.as_ref()
        .ok_or_else(|| Fail(CurStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    ptr.as_mut()
        .ok_or_else(|| Fail(CurStatus::NullPointer, format!("{what} is null")))
}

unsafe fn path(ptr: *const c_char) -> Result<PathBuf, Fail> {
    if ptr.is_null() {
        return Err(Fail(CurStatus::NullPointer, "path is null".into()));
    }
    let s = CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| invalid("path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

fn check_len(got: usize, expected: usize, what: &str) -> Result<(), Fail> {
    if got != expected {
        return Err(Fail(
            CurStatus::BufferSize,
            format!("{what}: buffer holds {got} elements, {expected} required"),
        ));
    }
    Ok(())
}

fn scorer(code: u32) -> Result<Scorer, Fail> {
    match code {
        CUR_SCORER_STDDEV => Ok(Scorer::Stddev),
        CUR_SCORER_ENTROPY => Ok(Scorer::Entropy),
        CUR_SCORER_NORM => Ok(Scorer::Norm),
        CUR_SCORER_CLASS_NORM => Ok(Scorer::ClassNorm),
        other => Err(invalid(format!("unknown scorer code {other}"))),
    }
}

fn direction(code: u32) -> Result<Direction, Fail> {
    match code {
        CUR_DIRECTION_PLUS => Ok(Direction::Plus),
        CUR_DIRECTION_MINUS => Ok(Direction::Minus),
        other => Err(invalid(format!("unknown direction code {other}"))),
    }
}

fn boxed_dataset(data: Dataset) -> *mut CurDataset {
    Box::into_raw(Box::new(CurDataset {
        data,
        normalized: OnceLock::new(),
    }))
}

impl CurDataset {
    fn normalized(&self) -> Result<&NormalizedDataset, Fail> {
        if let Some(n) = self.normalized.get() {
            return Ok(n);
        }
        let train = self.data.clone().with_split(Split::Train);
        let (n, _) = normalize(train.clone(), train)?;
        Ok(self.normalized.get_or_init(|| n))
    }
}

/// Message for the last failed call on this thread ("" after a success).
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn cur_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cur_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a dataset from `n` row-major images of `height * width * channels`
/// bytes and `n` labels below `classes`.
#[no_mangle]
pub unsafe extern "C" fn cur_dataset_new(
    images: *const u8,
    labels: *const u32,
    n: usize,
    height: usize,
    width: usize,
    channels: usize,
    classes: usize,
    out_dataset: *mut *mut CurDataset,
) -> CurStatus {
    guard(|| {
        let dst = out(out_dataset, "out_dataset")?;
        let shape = Shape::new(height, width, channels);
        let images = slice(images, n * shape.dim(), "images")?.to_vec();
        let labels = slice(labels, n, "labels")?.iter().map(|&l| l as usize).collect();
        let ds = Dataset::new("ffi", Split::Train, shape, classes, images, labels)?;
        *dst = boxed_dataset(ds);
        Ok(())
    })
}

/// Loads an IDX image/label file pair (raw or gzip).
#[no_mangle]
pub unsafe extern "C" fn cur_dataset_load_mnist(
    image_path: *const c_char,
    label_path: *const c_char,
    out_dataset: *mut *mut CurDataset,
) -> CurStatus {
    guard(|| {
        let dst = out(out_dataset, "out_dataset")?;
        let ds = load_mnist_idx(path(image_path)?, path(label_path)?)?;
        *dst = boxed_dataset(ds);
        Ok(())
    })
}

/// Loads and concatenates CIFAR binary batch files; `variant` is
/// `CUR_CIFAR10` or `CUR_CIFAR100`.
#[no_mangle]
pub unsafe extern "C" fn cur_dataset_load_cifar(
    paths: *const *const c_char,
    n_paths: usize,
    variant: u32,
    out_dataset: *mut *mut CurDataset,
) -> CurStatus {
    guard(|| {
        let dst = out(out_dataset, "out_dataset")?;
        let variant = match variant {
            CUR_CIFAR10 => CifarVariant::Cifar10,
            CUR_CIFAR100 => CifarVariant::Cifar100,
            other => return Err(invalid(format!("unknown CIFAR variant {other}"))),
        };
        let files = slice(paths, n_paths, "paths")?
            .iter()
            .map(|&p| path(p))
            .collect::<Result<Vec<_>, _>>()?;
        *dst = boxed_dataset(load_cifar(&files, variant)?);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cur_dataset_free(dataset: *mut CurDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Number of examples (0 for a null handle).
#[no_mangle]
pub unsafe extern "C" fn cur_dataset_len(dataset: *const CurDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.data.len())
}

/// Pixels per example (0 for a null handle).
#[no_mangle]
pub unsafe extern "C" fn cur_dataset_dim(dataset: *const CurDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.data.dim())
}

#[no_mangle]
pub unsafe extern "C" fn cur_dataset_num_classes(dataset: *const CurDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.data.num_classes())
}

#[no_mangle]
pub unsafe extern "C" fn cur_dataset_labels(dataset: *const CurDataset, out_labels: *mut u32, len: usize) -> CurStatus {
    guard(|| {
        let ds = handle(dataset, "dataset")?;
        check_len(len, ds.data.len(), "out_labels")?;
        let dst = slice_mut(out_labels, len, "out_labels")?;
        for (d, &l) in dst.iter_mut().zip(ds.data.labels()) {
            *d = l as u32;
        }
        Ok(())
    })
}

/// Keeps examples whose label is in `keep`; with `relabel` the kept labels
/// become `0..n_keep` in ascending order.
#[no_mangle]
pub unsafe extern "C" fn cur_dataset_select_subset(
    dataset: *const CurDataset,
    keep: *const u32,
    n_keep: usize,
    relabel: bool,
    out_dataset: *mut *mut CurDataset,
) -> CurStatus {
    guard(|| {
        let ds = handle(dataset, "dataset")?;
        let dst = out(out_dataset, "out_dataset")?;
        let keep: Vec<usize> = slice(keep, n_keep, "keep")?.iter().map(|&k| k as usize).collect();
        *dst = boxed_dataset(select_subset(&ds.data, &keep, relabel)?);
        Ok(())
    })
}

/// Copy of `dataset` with exactly `floor(fraction * N)` labels changed.
#[no_mangle]
pub unsafe extern "C" fn cur_dataset_inject_label_noise(
    dataset: *const CurDataset,
    fraction: f64,
    seed: u64,
    out_dataset: *mut *mut CurDataset,
) -> CurStatus {
    guard(|| {
        let ds = handle(dataset, "dataset")?;
        let dst = out(out_dataset, "out_dataset")?;
        *dst = boxed_dataset(inject_label_noise(&ds.data, fraction, seed)?);
        Ok(())
    })
}

/// Per-example difficulty scores (sign applied for `CUR_DIRECTION_MINUS`).
#[no_mangle]
pub unsafe extern "C" fn cur_score(
    dataset: *const CurDataset,
    scorer_code: u32,
    direction_code: u32,
    out_scores: *mut f64,
    len: usize,
) -> CurStatus {
    guard(|| {
        let ds = handle(dataset, "dataset")?;
        let (s, d) = (scorer(scorer_code)?, direction(direction_code)?);
        check_len(len, ds.data.len(), "out_scores")?;
        let dst = slice_mut(out_scores, len, "out_scores")?;
        let scores = score_dataset(ds.normalized()?, s, d)?;
        dst.copy_from_slice(&scores.values);
        Ok(())
    })
}

/// Ascending order of `values` (ties by index) written to `out_perm`.
#[no_mangle]
pub unsafe extern "C" fn cur_order_ascending(values: *const f64, n: usize, out_perm: *mut usize) -> CurStatus {
    guard(|| {
        let v = slice(values, n, "values")?;
        let dst = slice_mut(out_perm, n, "out_perm")?;
        dst.copy_from_slice(&ascending_order(v).perm);
        Ok(())
    })
}

/// Class-balanced round-robin order of `values`.
#[no_mangle]
pub unsafe extern "C" fn cur_order_class_balanced(
    values: *const f64,
    labels: *const u32,
    n: usize,
    out_perm: *mut usize,
) -> CurStatus {
    guard(|| {
        let scores = ScoreVector {
            scorer: Scorer::Stddev,
            direction: Direction::Plus,
            values: slice(values, n, "values")?.to_vec(),
        };
        let labels: Vec<usize> = slice(labels, n, "labels")?.iter().map(|&l| l as usize).collect();
        let dst = slice_mut(out_perm, n, "out_perm")?;
        dst.copy_from_slice(&class_balanced_order(&scores, &labels)?.perm);
        Ok(())
    })
}

/// `floor(min(1, starting_fraction * inc^floor(step / step_length)) * n)`.
#[no_mangle]
pub unsafe extern "C" fn cur_pace_exponential(
    step: usize,
    starting_fraction: f64,
    inc: f64,
    step_length: usize,
    n: usize,
    out_size: *mut usize,
) -> CurStatus {
    guard(|| {
        let dst = out(out_size, "out_size")?;
        let spec = PaceSpec::Exponential {
            starting_fraction,
            inc,
            step_length,
        };
        *dst = pace_exponential(step, &spec, n)?;
        Ok(())
    })
}

/// `floor(k * n)`, requiring `b / n <= k <= 1`.
#[no_mangle]
pub unsafe extern "C" fn cur_pace_constant(k: f64, n: usize, batch: usize, out_size: *mut usize) -> CurStatus {
    guard(|| {
        let dst = out(out_size, "out_size")?;
        *dst = pace_constant(0, k, n, batch)?;
        Ok(())
    })
}

/// Step-decay learning rate `lr0 / decay_factor^floor(t / decay_step)`.
#[no_mangle]
pub unsafe extern "C" fn cur_lr_at(
    lr0: f64,
    decay_factor: f64,
    decay_step: usize,
    t: usize,
    out_lr: *mut f64,
) -> CurStatus {
    guard(|| {
        let dst = out(out_lr, "out_lr")?;
        *dst = LrSchedule::new(lr0, decay_factor, decay_step)?.lr_at(t);
        Ok(())
    })
}

/// Glorot-initialized model, deterministic in `seed`.
#[no_mangle]
pub unsafe extern "C" fn cur_model_new(
    d_in: usize,
    hidden: usize,
    classes: usize,
    use_bias: bool,
    seed: u64,
    out_model: *mut *mut CurModel,
) -> CurStatus {
    guard(|| {
        let dst = out(out_model, "out_model")?;
        let arch = FcnArch::new(d_in, hidden, classes, use_bias)?;
        *dst = Box::into_raw(Box::new(CurModel {
            model: FcnModel::init(arch, seed),
        }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cur_model_free(model: *mut CurModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Length of the flat parameter vector `[W1, b1, W2, b2]` (0 for null).
#[no_mangle]
pub unsafe extern "C" fn cur_model_num_params(model: *const CurModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.num_params())
}

#[no_mangle]
pub unsafe extern "C" fn cur_model_get_params(model: *const CurModel, out_params: *mut f64, len: usize) -> CurStatus {
    guard(|| {
        let m = handle(model, "model")?;
        check_len(len, m.model.num_params(), "out_params")?;
        slice_mut(out_params, len, "out_params")?.copy_from_slice(m.model.params());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cur_model_set_params(model: *mut CurModel, params: *const f64, len: usize) -> CurStatus {
    guard(|| {
        let m = model
            .as_mut()
            .ok_or_else(|| Fail(CurStatus::NullPointer, "model is null".into()))?;
        check_len(len, m.model.num_params(), "params")?;
        let p = slice(params, len, "params")?.to_vec();
        m.model = FcnModel::from_flat(m.model.arch(), p)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cur_model_save(model: *const CurModel, file: *const c_char) -> CurStatus {
    guard(|| {
        let m = handle(model, "model")?;
        m.model.save(path(file)?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cur_model_load(file: *const c_char, out_model: *mut *mut CurModel) -> CurStatus {
    guard(|| {
        let dst = out(out_model, "out_model")?;
        let model = FcnModel::load(path(file)?)?;
        *dst = Box::into_raw(Box::new(CurModel { model }));
        Ok(())
    })
}

/// Mean cross-entropy and its gradient over a row-major `batch × d_in` block.
#[no_mangle]
pub unsafe extern "C" fn cur_loss_and_grad(
    model: *const CurModel,
    x: *const f64,
    labels: *const u32,
    batch: usize,
    out_loss: *mut f64,
    out_grad: *mut f64,
    grad_len: usize,
) -> CurStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let d = m.model.arch().d_in;
        let x = slice(x, batch * d, "x")?;
        let labels: Vec<usize> = slice(labels, batch, "labels")?.iter().map(|&l| l as usize).collect();
        check_len(grad_len, m.model.num_params(), "out_grad")?;
        let loss_dst = out(out_loss, "out_loss")?;
        let grad_dst = slice_mut(out_grad, grad_len, "out_grad")?;
        let (loss, grad) = loss_and_grad(&m.model, x, &labels)?;
        *loss_dst = loss;
        grad_dst.copy_from_slice(grad.as_slice());
        Ok(())
    })
}

/// In-place `w <- w - lr * grad`.
#[no_mangle]
pub unsafe extern "C" fn cur_sgd_step(model: *mut CurModel, grad: *const f64, len: usize, lr: f64) -> CurStatus {
    guard(|| {
        let m = model
            .as_mut()
            .ok_or_else(|| Fail(CurStatus::NullPointer, "model is null".into()))?;
        check_len(len, m.model.num_params(), "grad")?;
        let g = GradientVector(slice(grad, len, "grad")?.to_vec());
        m.model.apply_sgd(&g, lr)?;
        Ok(())
    })
}

/// Mean loss and accuracy on the dataset's standardized view.
#[no_mangle]
pub unsafe extern "C" fn cur_evaluate(
    model: *const CurModel,
    dataset: *const CurDataset,
    out_loss: *mut f64,
    out_accuracy: *mut f64,
) -> CurStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let ds = handle(dataset, "dataset")?;
        let (l, a) = (out(out_loss, "out_loss")?, out(out_accuracy, "out_accuracy")?);
        let r = evaluate(&m.model, ds.normalized()?)?;
        *l = r.mean_loss;
        *a = r.accuracy;
        Ok(())
    })
}

/// Dynamic-curriculum scores of every example of `dataset` for the current
/// model and reference parameters `w_bar`.
#[no_mangle]
pub unsafe extern "C" fn cur_rho_scores(
    model: *const CurModel,
    w_bar: *const f64,
    w_len: usize,
    dataset: *const CurDataset,
    out_rho: *mut f64,
    len: usize,
) -> CurStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let ds = handle(dataset, "dataset")?;
        check_len(w_len, m.model.num_params(), "w_bar")?;
        check_len(len, ds.data.len(), "out_rho")?;
        let w_bar = slice(w_bar, w_len, "w_bar")?;
        let dst = slice_mut(out_rho, len, "out_rho")?;
        dst.copy_from_slice(&rho_scores(&m.model, w_bar, ds.normalized()?)?);
        Ok(())
    })
}

/// Writes `[R², predicted R'², actual R'²]` for one SGD step to `out3`.
#[no_mangle]
pub unsafe extern "C" fn cur_distance_decomposition(
    w: *const f64,
    w_bar: *const f64,
    grad: *const f64,
    len: usize,
    eta: f64,
    out3: *mut f64,
) -> CurStatus {
    guard(|| {
        let w = slice(w, len, "w")?;
        let wb = slice(w_bar, len, "w_bar")?;
        let g = GradientVector(slice(grad, len, "grad")?.to_vec());
        let dst = slice_mut(out3, 3, "out3")?;
        let d = distance_decomposition(w, wb, &g, eta)?;
        dst.copy_from_slice(&[d.r_sq, d.predicted_next_sq, d.actual_next_sq]);
        Ok(())
    })
}

/// Pearson correlation with its two-sided p-value.
#[no_mangle]
pub unsafe extern "C" fn cur_pearson(
    x: *const f64,
    y: *const f64,
    n: usize,
    out_r: *mut f64,
    out_p: *mut f64,
) -> CurStatus {
    guard(|| {
        let (x, y) = (slice(x, n, "x")?, slice(y, n, "y")?);
        let (r_dst, p_dst) = (out(out_r, "out_r")?, out(out_p, "out_p")?);
        let c = pearson(x, y)?;
        *r_dst = c.r;
        *p_dst = c.p;
        Ok(())
    })
}

/// Dataset median pixel value `M` and the distances `M+`, `M-` of the
/// first `b` images under ascending and descending stddev order.
#[no_mangle]
pub unsafe extern "C" fn cur_median_pixel_distance(
    dataset: *const CurDataset,
    b: usize,
    scale: u32,
    out_m: *mut f64,
    out_m_plus: *mut f64,
    out_m_minus: *mut f64,
) -> CurStatus {
    guard(|| {
        let ds = handle(dataset, "dataset")?;
        let scale = match scale {
            CUR_SCALE_ZERO_ONE => PixelScale::ZeroOne,
            CUR_SCALE_UNIT => PixelScale::Unit,
            other => return Err(invalid(format!("unknown pixel scale {other}"))),
        };
        let (m, mp, mm) = (
            out(out_m, "out_m")?,
            out(out_m_plus, "out_m_plus")?,
            out(out_m_minus, "out_m_minus")?,
        );
        let scores = score_dataset(ds.normalized()?, Scorer::Stddev, Direction::Plus)?;
        let d = median_pixel_distance(&ds.data, &ascending_order(&scores.values), b, scale)?;
        *m = d.m;
        *mp = d.m_plus;
        *mm = d.m_minus;
        Ok(())
    })
}
