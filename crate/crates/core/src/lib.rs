pub mod baselines;
pub mod datagen;
pub mod diagnostics;
pub mod error;
pub mod model;
pub mod penalty;
pub mod saga;
pub mod trace;

pub use error::{Error, Result};
pub use model::{Dataset, Groups, LossKind, LossModel};
pub use penalty::{Penalty, PenaltyKind};
pub use trace::{Algorithm, SolverTrace, TraceRecord, TraceStatus};
