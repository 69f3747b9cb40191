use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::LossModel;
use crate::penalty::Penalty;
use crate::saga::{resolve_mode, GradientTable};
use crate::trace::{check_step, gradient_step, validate_setup, Iterate};

/// Proximal SAG: the sampled slot is refreshed first and the step follows the
/// updated table average (a biased direction).
#[derive(Debug, Clone)]
pub struct SagState {
    theta: Array1<f64>,
    table: GradientTable,
    step: f64,
    iter: u64,
    rng: ChaCha8Rng,
}

impl SagState {
    pub fn init(model: &LossModel, pen: &Penalty, theta0: Array1<f64>, step: f64, seed: u64) -> Result<Self> {
        check_step("step", step)?;
        validate_setup(model, pen, &theta0)?;
        let table = GradientTable::build(model, &theta0, resolve_mode(model, None));
        Ok(SagState { theta: theta0, table, step, iter: 0, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn theta(&self) -> &Array1<f64> {
        &self.theta
    }

    pub fn table(&self) -> &GradientTable {
        &self.table
    }

    pub fn step(&mut self, model: &LossModel, pen: &Penalty) -> Result<()> {
        let j = self.rng.random_range(0..model.n());
        self.step_at(model, pen, j)
    }

    pub fn step_at(&mut self, model: &LossModel, pen: &Penalty, j: usize) -> Result<()> {
        if j >= model.n() {
            return Err(Error::IndexOutOfRange { index: j, n: model.n() });
        }
        let new = self.table.evaluate(model, j, &self.theta);
        self.table.replace(model, j, new);
        let w = gradient_step(&self.theta, self.step, self.table.average());
        self.theta = pen.prox(&w, self.step * pen.lambda())?;
        self.iter += 1;
        Ok(())
    }
}

impl Iterate for SagState {
    fn advance(&mut self, model: &LossModel, pen: &Penalty) -> Result<()> {
        self.step(model, pen)
    }

    fn theta(&self) -> &Array1<f64> {
        &self.theta
    }

    fn effective_passes(&self) -> f64 {
        1.0 + self.iter as f64 / self.table.len() as f64
    }

    fn exhausted(&self, passes: usize) -> bool {
        self.iter >= (passes * self.table.len()) as u64
    }
}
