//! Fixed-curriculum batch plans, the vanilla sampler, and the SGD loop that
//! consumes plans.

mod plan;
mod train;

pub use plan::{build_batch_plan_balanced, build_batch_plan_curriculum, build_batch_plan_vanilla, BatchPlan};
pub use train::{train, MetricsLog, MetricsRow, TrainConfig, Trainer};
