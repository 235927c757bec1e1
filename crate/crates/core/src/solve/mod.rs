//! Training and evaluation of Deep Ritz approximations.

mod cases;
mod galerkin;
mod ladder;
mod metrics;
mod optim;
mod train;

pub use cases::{find_case, manufactured_registry, ManufacturedCase, PWL_KNOTS};
pub use galerkin::{solve_output_layer, OutputSystem, RIDGE};
pub use ladder::{gamma_ladder, gamma_ladder_with, LadderConfig, LadderOutcome, Rung, RungReport};
pub use metrics::{boundary_mean_square, h1_seminorm_error, l2_error, quasi_min_gap};
pub use optim::{Optimizer, OptimizerConfig, OptimizerKind};
pub use train::{train, Sampling, StopReason, TracePoint, TrainOptions, TrainOutcome};
