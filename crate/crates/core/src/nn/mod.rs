//! Two-layer fully connected ELU classifier with softmax cross-entropy,
//! analytic gradients and step-decay SGD.

mod backprop;
mod eval;
mod model;
mod schedule;

pub(crate) use backprop::{batch_loss_grad, grad_dot_unchecked};
pub use backprop::{elu, forward, grad_dot, loss_and_grad, per_example_grad, Forward, ForwardCache};
pub use eval::{argmax, evaluate, EvalResult};
pub use model::{init_model, sgd_step, FcnArch, FcnModel, GradientVector, ELU_ALPHA};
pub use schedule::{lr_at, LrSchedule};
