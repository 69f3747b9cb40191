use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sample_gradient;
use crate::error::{Error, Result};
use crate::model::LossModel;
use crate::penalty::Penalty;
use crate::trace::{check_step, gradient_step, validate_setup, Iterate};

/// Proximal SGD with the decaying step `η_k = η₀/√k`, `k = 1, 2, …`.
#[derive(Debug, Clone)]
pub struct SgdState {
    theta: Array1<f64>,
    eta0: f64,
    iter: u64,
    n: usize,
    rng: ChaCha8Rng,
}

impl SgdState {
    pub fn init(model: &LossModel, pen: &Penalty, theta0: Array1<f64>, eta0: f64, seed: u64) -> Result<Self> {
        check_step("eta0", eta0)?;
        validate_setup(model, pen, &theta0)?;
        Ok(SgdState { theta: theta0, eta0, iter: 0, n: model.n(), rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn theta(&self) -> &Array1<f64> {
        &self.theta
    }

    /// Step size used by iteration `k ≥ 1`.
    pub fn step_size(&self, k: u64) -> f64 {
        self.eta0 / (k as f64).sqrt()
    }

    /// Plain sampled gradient `∇F_j(θ)`.
    pub fn direction(&self, model: &LossModel, j: usize) -> Result<Array1<f64>> {
        if j >= model.n() {
            return Err(Error::IndexOutOfRange { index: j, n: model.n() });
        }
        Ok(sample_gradient(model, j, &self.theta))
    }

    pub fn step(&mut self, model: &LossModel, pen: &Penalty) -> Result<()> {
        let j = self.rng.random_range(0..model.n());
        let eta = self.step_size(self.iter + 1);
        let g = sample_gradient(model, j, &self.theta);
        let w = gradient_step(&self.theta, eta, &g);
        self.theta = pen.prox(&w, eta * pen.lambda())?;
        self.iter += 1;
        Ok(())
    }
}

impl Iterate for SgdState {
    fn advance(&mut self, model: &LossModel, pen: &Penalty) -> Result<()> {
        self.step(model, pen)
    }

    fn theta(&self) -> &Array1<f64> {
        &self.theta
    }

    fn effective_passes(&self) -> f64 {
        self.iter as f64 / self.n as f64
    }

    fn exhausted(&self, passes: usize) -> bool {
        self.iter >= (passes * self.n) as u64
    }
}
