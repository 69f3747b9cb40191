use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sample_gradient;
use crate::error::Result;
use crate::model::LossModel;
use crate::penalty::Penalty;
use crate::trace::{check_step, validate_setup, Iterate};

/// Regularized dual averaging with prox-function `‖θ‖²/2` and `β_k = β₀√k`:
/// `θ^{k+1} = argmin ⟨ḡ_k, θ⟩ + λψ(θ) + (β_k/2k)‖θ‖²`, which is the penalty
/// prox of `-(k/β_k)ḡ_k` with threshold `(k/β_k)λ`.
#[derive(Debug, Clone)]
pub struct RdaState {
    theta: Array1<f64>,
    gradient_mean: Array1<f64>,
    beta0: f64,
    iter: u64,
    n: usize,
    rng: ChaCha8Rng,
}

impl RdaState {
    pub fn init(model: &LossModel, pen: &Penalty, theta0: Array1<f64>, beta0: f64, seed: u64) -> Result<Self> {
        check_step("beta0", beta0)?;
        validate_setup(model, pen, &theta0)?;
        Ok(RdaState {
            gradient_mean: Array1::zeros(model.p()),
            theta: theta0,
            beta0,
            iter: 0,
            n: model.n(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn theta(&self) -> &Array1<f64> {
        &self.theta
    }

    /// Running mean `ḡ_k` of the sampled gradients.
    pub fn gradient_mean(&self) -> &Array1<f64> {
        &self.gradient_mean
    }

    pub fn beta(&self, k: u64) -> f64 {
        self.beta0 * (k as f64).sqrt()
    }

    pub fn step(&mut self, model: &LossModel, pen: &Penalty) -> Result<()> {
        let j = self.rng.random_range(0..model.n());
        let g = sample_gradient(model, j, &self.theta);
        self.push_gradient(&g);
        self.theta = dual_average_point(pen, &self.gradient_mean, self.iter, self.beta(self.iter))?;
        Ok(())
    }

    fn push_gradient(&mut self, g: &Array1<f64>) {
        self.iter += 1;
        let k = self.iter as f64;
        self.gradient_mean.zip_mut_with(g, |m, &gl| *m += (gl - *m) / k);
    }
}

/// `argmin ⟨ḡ, θ⟩ + λψ(θ) + (β_k/2k)‖θ‖²` over the feasible set.
pub(crate) fn dual_average_point(pen: &Penalty, gradient_mean: &Array1<f64>, k: u64, beta_k: f64) -> Result<Array1<f64>> {
    let scale = k as f64 / beta_k;
    pen.prox(&gradient_mean.mapv(|v| -scale * v), scale * pen.lambda())
}

impl Iterate for RdaState {
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
