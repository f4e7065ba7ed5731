//! Optimisation: Adam, the learning-rate schedule, the training loop and the
//! finite-difference gradient auditor.

pub mod adam;
pub mod gradcheck;
pub mod schedule;
pub mod train;

pub use adam::{adam_step, AdamState};
pub use gradcheck::{gradcheck, gradcheck_with_vjp, GradcheckReport, GradcheckSpec, GroupCheck};
pub use schedule::{lr_at, TaskPreset, TrainConfig};
pub use train::{evaluate_loss, train, EpochLog, TrainOutcome, TrainSets};
