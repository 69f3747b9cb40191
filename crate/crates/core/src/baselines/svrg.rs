use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::model::LossModel;
use crate::penalty::Penalty;
use crate::trace::{check_step, gradient_step, validate_setup, Iterate};

/// Epoch-anchored variance reduction: every `inner_m` steps the anchor moves
/// to the current iterate and its full gradient is recomputed.
#[derive(Debug, Clone)]
pub struct SvrgState {
    theta: Array1<f64>,
    anchor: Array1<f64>,
    /// `h_i'(x_iᵀθ̃)`, so anchor sample gradients cost one scaled row.
    anchor_scalars: Array1<f64>,
    anchor_grad: Array1<f64>,
    step: f64,
    inner_m: usize,
    inner: usize,
    anchors: u64,
    steps: u64,
    rng: ChaCha8Rng,
}

impl SvrgState {
    pub fn init(
        model: &LossModel,
        pen: &Penalty,
        theta0: Array1<f64>,
        step: f64,
        inner_m: usize,
        seed: u64,
    ) -> Result<Self> {
        check_step("step", step)?;
        if inner_m == 0 {
            return Err(invalid("svrg inner loop length must be >= 1"));
        }
        validate_setup(model, pen, &theta0)?;
        let mut state = SvrgState {
            anchor: theta0.clone(),
            theta: theta0,
            anchor_scalars: Array1::zeros(model.n()),
            anchor_grad: Array1::zeros(model.p()),
            step,
            inner_m,
            inner: 0,
            anchors: 0,
            steps: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        state.refresh_anchor(model);
        Ok(state)
    }

    fn refresh_anchor(&mut self, model: &LossModel) {
        self.anchor.assign(&self.theta);
        self.anchor_scalars = model.scalars_at(&self.anchor);
        let mut g = model.mean_of_scaled_rows(&self.anchor_scalars);
        if model.mu_shift() != 0.0 {
            g.scaled_add(-model.mu_shift(), &self.anchor);
        }
        self.anchor_grad = g;
        self.anchors += 1;
        self.inner = 0;
    }

    pub fn theta(&self) -> &Array1<f64> {
        &self.theta
    }

    pub fn anchor(&self) -> &Array1<f64> {
        &self.anchor
    }

    /// `∇F_j(θ) - ∇F_j(θ̃) + ∇F(θ̃)`.
    pub fn direction(&self, model: &LossModel, j: usize) -> Result<Array1<f64>> {
        if j >= model.n() {
            return Err(Error::IndexOutOfRange { index: j, n: model.n() });
        }
        Ok(self.direction_unchecked(model, j))
    }

    fn direction_unchecked(&self, model: &LossModel, j: usize) -> Array1<f64> {
        let s = model.sample_derivative(j, model.margin(j, &self.theta));
        let mut d = self.anchor_grad.clone();
        d.scaled_add(s - self.anchor_scalars[j], &model.dataset().row(j));
        let mu = model.mu_shift();
        if mu != 0.0 {
            d.scaled_add(-mu, &self.theta);
            d.scaled_add(mu, &self.anchor);
        }
        d
    }

    pub fn step(&mut self, model: &LossModel, pen: &Penalty) -> Result<()> {
        if self.inner == self.inner_m {
            self.refresh_anchor(model);
        }
        let j = self.rng.random_range(0..model.n());
        let d = self.direction_unchecked(model, j);
        let w = gradient_step(&self.theta, self.step, &d);
        self.theta = pen.prox(&w, self.step * pen.lambda())?;
        self.inner += 1;
        self.steps += 1;
        Ok(())
    }

    fn passes_used(&self, n: usize) -> f64 {
        self.anchors as f64 + self.steps as f64 / n as f64
    }
}

impl Iterate for SvrgState {
    fn advance(&mut self, model: &LossModel, pen: &Penalty) -> Result<()> {
        self.step(model, pen)
    }

    fn theta(&self) -> &Array1<f64> {
        &self.theta
    }

    fn effective_passes(&self) -> f64 {
        self.passes_used(self.anchor_scalars.len())
    }

    /// Stops once the next step (plus the anchor refresh it may need) would
    /// overrun the budget.
    fn exhausted(&self, passes: usize) -> bool {
        let n = self.anchor_scalars.len() as f64;
        let refresh = if self.inner == self.inner_m { 1.0 } else { 0.0 };
        self.effective_passes() + refresh + 1.0 / n > passes as f64 + 1e-9
    }
}

#[cfg(test)]
mod tests {
    use super::super::test_support::{max_rel_diff, regression};
    use super::super::ProxGdState;
    use super::*;

    #[test]
    fn direction_is_unbiased() {
        let model = regression(6, 15, 4).with_penalty_shift(0.2).unwrap();
        let pen = Penalty::scad(0.05, 6.0).unwrap();
        let mut s = SvrgState::init(&model, &pen, Array1::zeros(4), 0.05, 7, 3).unwrap();
        for _ in 0..11 {
            s.step(&model, &pen).unwrap();
        }
        assert_ne!(s.theta(), s.anchor());
        let mut mean = Array1::zeros(4);
        for j in 0..15 {
            mean += &s.direction(&model, j).unwrap();
        }
        mean /= 15.0;
        assert!(max_rel_diff(&mean, &model.grad_full(s.theta()).unwrap()) <= 1e-12);
    }

    #[test]
    fn unit_inner_loop_tracks_gradient_descent() {
        let model = regression(7, 12, 5);
        let pen = Penalty::l1(0.03).unwrap();
        let step = 0.2;
        let mut svrg = SvrgState::init(&model, &pen, Array1::zeros(5), step, 1, 9).unwrap();
        let mut gd = ProxGdState::init(&model, &pen, Array1::zeros(5), step).unwrap();
        for _ in 0..300 {
            svrg.step(&model, &pen).unwrap();
            gd.step(&model, &pen).unwrap();
            let diff = svrg.theta().iter().zip(gd.theta()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(diff <= 1e-10);
        }
    }

    #[test]
    fn pass_accounting() {
        let model = regression(8, 10, 3);
        let pen = Penalty::l1(0.01).unwrap();
        let mut s = SvrgState::init(&model, &pen, Array1::zeros(3), 0.1, 20, 0).unwrap();
        assert_eq!(s.effective_passes(), 1.0);
        for _ in 0..20 {
            s.step(&model, &pen).unwrap();
        }
        assert_eq!(s.effective_passes(), 3.0);
        s.step(&model, &pen).unwrap();
        assert!((s.effective_passes() - 4.1).abs() < 1e-12);
        assert!(SvrgState::init(&model, &pen, Array1::zeros(3), 0.1, 0, 0).is_err());
    }
}
