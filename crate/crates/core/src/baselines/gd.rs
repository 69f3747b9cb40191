use ndarray::Array1;

use crate::error::Result;
use crate::model::LossModel;
use crate::penalty::Penalty;
use crate::trace::{check_step, gradient_step, validate_setup, Iterate};

/// Full-gradient proximal descent, `θ⁺ = prox(θ - γ∇F(θ), γλ)`.
#[derive(Debug, Clone)]
pub struct ProxGdState {
    theta: Array1<f64>,
    step: f64,
    iter: u64,
    residual: f64,
    tolerance: Option<f64>,
}

impl ProxGdState {
    pub fn init(model: &LossModel, pen: &Penalty, theta0: Array1<f64>, step: f64) -> Result<Self> {
        check_step("step", step)?;
        validate_setup(model, pen, &theta0)?;
        Ok(ProxGdState { theta: theta0, step, iter: 0, residual: f64::INFINITY, tolerance: None })
    }

    /// Report convergence once `‖θ⁺ - θ‖∞ ≤ tolerance`.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = Some(tolerance);
        self
    }

    pub fn theta(&self) -> &Array1<f64> {
        &self.theta
    }

    pub fn iter(&self) -> u64 {
        self.iter
    }

    /// `‖θ_k - θ_{k-1}‖∞` of the last step; infinite before the first.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn step(&mut self, model: &LossModel, pen: &Penalty) -> Result<()> {
        let grad = model.grad_full_unchecked(&self.theta);
        let w = gradient_step(&self.theta, self.step, &grad);
        let next = pen.prox(&w, self.step * pen.lambda())?;
        self.residual = next.iter().zip(&self.theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        self.theta = next;
        self.iter += 1;
        Ok(())
    }
}

impl Iterate for ProxGdState {
    fn advance(&mut self, model: &LossModel, pen: &Penalty) -> Result<()> {
        self.step(model, pen)
    }

    fn theta(&self) -> &Array1<f64> {
        &self.theta
    }

    fn effective_passes(&self) -> f64 {
        self.iter as f64
    }

    fn exhausted(&self, passes: usize) -> bool {
        self.iter >= passes as u64
    }

    fn converged(&self) -> bool {
        self.tolerance.is_some_and(|tol| self.residual <= tol)
    }
}
