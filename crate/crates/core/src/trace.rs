//! Convergence traces and the shared iteration driver.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use ndarray::Array1;

use crate::error::{invalid, Error, Result};
use crate::model::LossModel;
use crate::penalty::Penalty;

/// Objective growth factor (relative to the starting objective) treated as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Saga,
    ProxGd,
    ProxSvrg,
    ProxSag,
    ProxSgd,
    Rda,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Saga,
        Algorithm::ProxSvrg,
        Algorithm::ProxSag,
        Algorithm::ProxGd,
        Algorithm::ProxSgd,
        Algorithm::Rda,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Saga => "saga",
            Algorithm::ProxGd => "prox-gd",
            Algorithm::ProxSvrg => "prox-svrg",
            Algorithm::ProxSag => "prox-sag",
            Algorithm::ProxSgd => "prox-sgd",
            Algorithm::Rda => "rda",
        }
    }

    /// Algorithms tuned over a constant step size grid.
    pub fn uses_constant_step(self) -> bool {
        matches!(self, Algorithm::Saga | Algorithm::ProxGd | Algorithm::ProxSvrg | Algorithm::ProxSag)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| invalid(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceStatus {
    Converged,
    Budget,
    Diverged,
}

impl TraceStatus {
    pub fn name(self) -> &'static str {
        match self {
            TraceStatus::Converged => "converged",
            TraceStatus::Budget => "budget",
            TraceStatus::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    /// Gradient evaluations divided by n.
    pub pass: f64,
    /// Solver wall time, excluding objective evaluation.
    pub seconds: f64,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct SolverTrace {
    pub algorithm: Algorithm,
    pub hyperparameters: Vec<(String, f64)>,
    pub seed: u64,
    pub records: Vec<TraceRecord>,
    pub status: TraceStatus,
    /// Last iterate.
    pub theta: Array1<f64>,
}

impl SolverTrace {
    pub fn final_objective(&self) -> Option<f64> {
        self.records.last().map(|r| r.objective)
    }

    pub fn initial_objective(&self) -> Option<f64> {
        self.records.first().map(|r| r.objective)
    }
}

/// One iteration at a time, as seen by [`drive`].
pub(crate) trait Iterate {
    fn advance(&mut self, model: &LossModel, pen: &Penalty) -> Result<()>;
    fn theta(&self) -> &Array1<f64>;
    fn effective_passes(&self) -> f64;
    /// Whether the pass budget has been spent.
    fn exhausted(&self, passes: usize) -> bool;
    fn converged(&self) -> bool {
        false
    }
}

pub(crate) struct DriveSpec {
    pub algorithm: Algorithm,
    pub hyperparameters: Vec<(String, f64)>,
    pub seed: u64,
    pub passes: usize,
    pub trace_every: usize,
}

/// `G(θ) = f(θ) + λψ(θ)` (or `f(θ) + g_{λ,μ}(θ)`), where `f` is the loss
/// without the penalty-borrowed shift.
pub(crate) fn objective_unchecked(model: &LossModel, pen: &Penalty, theta: &Array1<f64>) -> f64 {
    let mut f = model.value_unchecked(theta);
    let borrowed = model.penalty_shift();
    if borrowed != 0.0 {
        f += 0.5 * borrowed * theta.dot(theta);
    }
    f + pen.objective_term(theta)
}

pub(crate) fn divergence_threshold(g0: f64) -> f64 {
    if g0 != 0.0 {
        DIVERGENCE_FACTOR * g0.abs()
    } else {
        DIVERGENCE_FACTOR
    }
}

pub(crate) fn drive<S: Iterate>(
    mut solver: S,
    model: &LossModel,
    pen: &Penalty,
    spec: DriveSpec,
) -> Result<SolverTrace> {
    if spec.passes == 0 {
        return Err(invalid("passes must be >= 1"));
    }
    if spec.trace_every == 0 {
        return Err(invalid("trace_every must be >= 1"));
    }
    let mut elapsed = Duration::ZERO;
    let g0 = objective_unchecked(model, pen, solver.theta());
    let limit = divergence_threshold(g0);
    let mut records = vec![TraceRecord { pass: solver.effective_passes(), seconds: 0.0, objective: g0 }];
    let mut status = TraceStatus::Budget;
    let mut since_record = 0usize;

    while !solver.exhausted(spec.passes) {
        let start = Instant::now();
        match solver.advance(model, pen) {
            Ok(()) => {}
            // Overflowing iterates reach the prox as non-finite input.
            Err(Error::NonFinite(_)) => {
                status = TraceStatus::Diverged;
                break;
            }
            Err(e) => return Err(e),
        }
        elapsed += start.elapsed();
        since_record += 1;
        let converged = solver.converged();
        let done = converged || solver.exhausted(spec.passes);
        if since_record == spec.trace_every || done {
            since_record = 0;
            let objective = objective_unchecked(model, pen, solver.theta());
            records.push(TraceRecord {
                pass: solver.effective_passes(),
                seconds: elapsed.as_secs_f64(),
                objective,
            });
            if !objective.is_finite() || objective > limit {
                status = TraceStatus::Diverged;
                break;
            }
        } else if solver.theta().iter().any(|v| !v.is_finite()) {
            status = TraceStatus::Diverged;
            break;
        }
        if converged {
            status = TraceStatus::Converged;
            break;
        }
    }

    Ok(SolverTrace {
        algorithm: spec.algorithm,
        hyperparameters: spec.hyperparameters,
        seed: spec.seed,
        records,
        status,
        theta: solver.theta().clone(),
    })
}

/// `θ - γ·d`.
pub(crate) fn gradient_step(theta: &Array1<f64>, step: f64, direction: &Array1<f64>) -> Array1<f64> {
    let mut w = theta.clone();
    w.scaled_add(-step, direction);
    w
}

/// Checks the model/penalty pairing and the starting point shared by every solver.
pub(crate) fn validate_setup(model: &LossModel, pen: &Penalty, theta0: &Array1<f64>) -> Result<()> {
    if (model.penalty_shift() - pen.mu()).abs() > 1e-12 * pen.mu().max(1.0) {
        return Err(invalid(format!(
            "loss shift {} does not match penalty non-convexity {}",
            model.penalty_shift(),
            pen.mu()
        )));
    }
    if theta0.len() != model.p() {
        return Err(Error::DimensionMismatch { expected: model.p(), found: theta0.len() });
    }
    let value = pen.convex_value(theta0)?;
    if value > pen.rho() + 1e-8 {
        return Err(Error::Infeasible { value, rho: pen.rho() });
    }
    Ok(())
}

pub(crate) fn check_step(name: &str, step: f64) -> Result<()> {
    if step > 0.0 && step.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite and > 0, got {step}")))
    }
}
