//! Comparison solvers sharing the loss and penalty machinery with SAGA.

mod gd;
mod rda;
mod sag;
mod sgd;
mod svrg;

pub use gd::ProxGdState;
pub use rda::RdaState;
pub use sag::SagState;
pub use sgd::SgdState;
pub use svrg::SvrgState;

use ndarray::Array1;

use crate::error::{invalid, Result};
use crate::model::LossModel;
use crate::penalty::Penalty;
use crate::trace::{drive, Algorithm, DriveSpec, SolverTrace};

/// A baseline solver with exactly the hyperparameters it uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Baseline {
    /// Stops early once the fixed-point residual `‖θ⁺ - θ‖∞` reaches `tolerance`.
    ProxGd { step: f64, tolerance: Option<f64> },
    /// `inner_m` defaults to `2n`.
    ProxSvrg { step: f64, inner_m: Option<usize> },
    ProxSag { step: f64 },
    /// `η_k = η₀/√k`.
    ProxSgd { eta0: f64 },
    /// `β_k = β₀√k`.
    Rda { beta0: f64 },
}

impl Baseline {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            Baseline::ProxGd { .. } => Algorithm::ProxGd,
            Baseline::ProxSvrg { .. } => Algorithm::ProxSvrg,
            Baseline::ProxSag { .. } => Algorithm::ProxSag,
            Baseline::ProxSgd { .. } => Algorithm::ProxSgd,
            Baseline::Rda { .. } => Algorithm::Rda,
        }
    }

    /// Builds the baseline for `algorithm` from its single tuned value
    /// (a step size, `η₀` or `β₀`). Saga is not a baseline.
    pub fn from_tuned(algorithm: Algorithm, value: f64) -> Option<Baseline> {
        Some(match algorithm {
            Algorithm::Saga => return None,
            Algorithm::ProxGd => Baseline::ProxGd { step: value, tolerance: None },
            Algorithm::ProxSvrg => Baseline::ProxSvrg { step: value, inner_m: None },
            Algorithm::ProxSag => Baseline::ProxSag { step: value },
            Algorithm::ProxSgd => Baseline::ProxSgd { eta0: value },
            Algorithm::Rda => Baseline::Rda { beta0: value },
        })
    }

    fn hyperparameters(&self, n: usize) -> Vec<(String, f64)> {
        match *self {
            Baseline::ProxGd { step, .. } | Baseline::ProxSag { step } => vec![("step".into(), step)],
            Baseline::ProxSvrg { step, inner_m } => vec![
                ("step".into(), step),
                ("inner_m".into(), inner_m.unwrap_or(2 * n) as f64),
            ],
            Baseline::ProxSgd { eta0 } => vec![("eta0".into(), eta0)],
            Baseline::Rda { beta0 } => vec![("beta0".into(), beta0)],
        }
    }
}

#[derive(Debug, Clone)]
pub struct BaselineConfig {
    pub baseline: Baseline,
    /// Defaults to the origin.
    pub theta0: Option<Array1<f64>>,
    pub passes: usize,
    /// Only the stochastic solvers draw from it.
    pub seed: u64,
    /// Iterations between trace records; defaults to one pass
    /// (1 for Prox-GD, n for the stochastic solvers).
    pub trace_every: Option<usize>,
}

impl BaselineConfig {
    pub fn new(baseline: Baseline, passes: usize, seed: u64) -> Self {
        BaselineConfig { baseline, theta0: None, passes, seed, trace_every: None }
    }
}

pub fn run(model: &LossModel, pen: &Penalty, config: &BaselineConfig) -> Result<SolverTrace> {
    if config.passes == 0 {
        return Err(invalid("passes must be >= 1"));
    }
    let theta0 = config.theta0.clone().unwrap_or_else(|| Array1::zeros(model.p()));
    let n = model.n();
    let spec = |trace_default: usize| DriveSpec {
        algorithm: config.baseline.algorithm(),
        hyperparameters: config.baseline.hyperparameters(n),
        seed: config.seed,
        passes: config.passes,
        trace_every: config.trace_every.unwrap_or(trace_default),
    };
    let seed = config.seed;
    match config.baseline {
        Baseline::ProxGd { step, tolerance } => {
            let mut state = ProxGdState::init(model, pen, theta0, step)?;
            if let Some(tol) = tolerance {
                state = state.with_tolerance(tol);
            }
            drive(state, model, pen, spec(1))
        }
        Baseline::ProxSvrg { step, inner_m } => {
            let state = SvrgState::init(model, pen, theta0, step, inner_m.unwrap_or(2 * n), seed)?;
            drive(state, model, pen, spec(n))
        }
        Baseline::ProxSag { step } => {
            let state = SagState::init(model, pen, theta0, step, seed)?;
            drive(state, model, pen, spec(n))
        }
        Baseline::ProxSgd { eta0 } => {
            let state = SgdState::init(model, pen, theta0, eta0, seed)?;
            drive(state, model, pen, spec(n))
        }
        Baseline::Rda { beta0 } => {
            let state = RdaState::init(model, pen, theta0, beta0, seed)?;
            drive(state, model, pen, spec(n))
        }
    }
}

/// `∇F_j(θ)` with the same arithmetic as the gradient table.
pub(crate) fn sample_gradient(model: &LossModel, j: usize, theta: &Array1<f64>) -> Array1<f64> {
    let s = model.sample_derivative(j, model.margin(j, theta));
    model.sample_gradient_from_scalar(j, s, theta)
}

#[cfg(test)]
pub(crate) mod test_support {
    use std::sync::Arc;

    use ndarray::{Array1, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::model::{Dataset, LossModel};

    pub fn regression(seed: u64, n: usize, p: usize) -> LossModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, p), |_| rng.random_range(-1.0..1.0));
        let y = Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0));
        LossModel::squared(Arc::new(Dataset::new(x, y).unwrap()))
    }

    pub fn max_rel_diff(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
        let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
    }
}
