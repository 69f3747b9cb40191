//! Proximal SAGA with a per-sample gradient table.
//!
//! Each step samples `j` uniformly, forms
//! `w = θ - γ(∇F_j(θ) - ∇F_j(φ_j) + (1/n)Σ_i ∇F_i(φ_i))` from the table
//! *before* it is touched, applies the constrained prox with threshold `γλ`,
//! then stores `∇F_j(θ)` in slot `j` and patches the running average.

use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::model::LossModel;
use crate::penalty::Penalty;
use crate::trace::{check_step, drive, gradient_step, validate_setup, Algorithm, DriveSpec, Iterate, SolverTrace};

/// The running average is rebuilt from the entries after this many passes'
/// worth of replacements.
const REFRESH_PASSES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableMode {
    /// `n × p` stored gradients.
    FullVectors,
    /// `n` stored derivatives `h_i'(x_iᵀφ_i)`; valid only without a quadratic shift.
    Scalars,
}

#[derive(Debug, Clone)]
enum Entries {
    Vectors(Array2<f64>),
    Scalars(Array1<f64>),
}

/// A freshly evaluated gradient about to enter the table.
#[derive(Debug, Clone)]
pub(crate) enum NewEntry {
    Vector(Array1<f64>),
    Scalar(f64),
}

#[derive(Debug, Clone)]
pub struct GradientTable {
    entries: Entries,
    average: Array1<f64>,
    replacements: usize,
}

impl GradientTable {
    /// Fills every slot with `∇F_i(θ)`. Falls back to full vectors when
    /// scalars are requested for a shifted loss.
    pub fn build(model: &LossModel, theta: &Array1<f64>, mode: TableMode) -> Self {
        let mode = resolve_mode(model, Some(mode));
        let scalars = model.scalars_at(theta);
        match mode {
            TableMode::Scalars => {
                let average = model.mean_of_scaled_rows(&scalars);
                GradientTable { entries: Entries::Scalars(scalars), average, replacements: 0 }
            }
            TableMode::FullVectors => {
                let (n, p) = (model.n(), model.p());
                let mut table = Array2::zeros((n, p));
                for (i, mut row) in table.rows_mut().into_iter().enumerate() {
                    row.assign(&model.sample_gradient_from_scalar(i, scalars[i], theta));
                }
                let average = mean_rows(&table);
                GradientTable { entries: Entries::Vectors(table), average, replacements: 0 }
            }
        }
    }

    pub fn mode(&self) -> TableMode {
        match self.entries {
            Entries::Vectors(_) => TableMode::FullVectors,
            Entries::Scalars(_) => TableMode::Scalars,
        }
    }

    pub fn len(&self) -> usize {
        match &self.entries {
            Entries::Vectors(t) => t.nrows(),
            Entries::Scalars(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Incrementally maintained mean of the represented gradients.
    pub fn average(&self) -> &Array1<f64> {
        &self.average
    }

    /// The gradient vector represented by slot `i`.
    pub fn represented(&self, model: &LossModel, i: usize) -> Array1<f64> {
        match &self.entries {
            Entries::Vectors(t) => t.row(i).to_owned(),
            Entries::Scalars(s) => model.dataset().row(i).mapv(|x| s[i] * x),
        }
    }

    /// Mean of the represented gradients, computed from scratch.
    pub fn recomputed_average(&self, model: &LossModel) -> Array1<f64> {
        match &self.entries {
            Entries::Vectors(t) => mean_rows(t),
            Entries::Scalars(s) => model.mean_of_scaled_rows(s),
        }
    }

    pub(crate) fn evaluate(&self, model: &LossModel, j: usize, theta: &Array1<f64>) -> NewEntry {
        let s = model.sample_derivative(j, model.margin(j, theta));
        match self.entries {
            Entries::Vectors(_) => NewEntry::Vector(model.sample_gradient_from_scalar(j, s, theta)),
            Entries::Scalars(_) => NewEntry::Scalar(s),
        }
    }

    /// `g_new + (average - g_old_j)`, read before any mutation.
    pub(crate) fn saga_direction(&self, model: &LossModel, j: usize, new: &NewEntry) -> Array1<f64> {
        match (&self.entries, new) {
            (Entries::Vectors(t), NewEntry::Vector(g)) => {
                let mut d = &self.average - &t.row(j);
                d += g;
                d
            }
            (Entries::Scalars(s), &NewEntry::Scalar(s_new)) => {
                let x = model.dataset().row(j);
                let s_old = s[j];
                let mut d = self.average.clone();
                d.zip_mut_with(&x, |dl, &xl| *dl = (*dl - s_old * xl) + s_new * xl);
                d
            }
            _ => unreachable!("table entry kind mismatch"),
        }
    }

    /// Stores `new` in slot `j` and updates the average by `(g_new - g_old)/n`.
    pub(crate) fn replace(&mut self, model: &LossModel, j: usize, new: NewEntry) {
        let n = self.len();
        let nf = n as f64;
        match (&mut self.entries, new) {
            (Entries::Vectors(t), NewEntry::Vector(g)) => {
                if n == 1 {
                    self.average.assign(&g);
                } else {
                    self.average
                        .iter_mut()
                        .zip(g.iter().zip(t.row(j)))
                        .for_each(|(a, (&gn, &go))| *a += (gn - go) / nf);
                }
                t.row_mut(j).assign(&g);
            }
            (Entries::Scalars(s), NewEntry::Scalar(s_new)) => {
                let x = model.dataset().row(j);
                if n == 1 {
                    self.average = x.mapv(|v| s_new * v);
                } else {
                    self.average.scaled_add((s_new - s[j]) / nf, &x);
                }
                s[j] = s_new;
            }
            _ => unreachable!("table entry kind mismatch"),
        }
        self.replacements += 1;
        if self.replacements % (REFRESH_PASSES * n) == 0 {
            self.average = self.recomputed_average(model);
        }
    }
}

fn mean_rows(t: &Array2<f64>) -> Array1<f64> {
    let mut acc = Array1::zeros(t.ncols());
    for row in t.rows() {
        acc += &row;
    }
    acc /= t.nrows() as f64;
    acc
}

/// Scalars are the default whenever the loss carries no quadratic shift.
pub(crate) fn resolve_mode(model: &LossModel, requested: Option<TableMode>) -> TableMode {
    match requested {
        Some(TableMode::FullVectors) => TableMode::FullVectors,
        _ if model.mu_shift() != 0.0 => {
            if requested == Some(TableMode::Scalars) {
                log::warn!("scalar gradient table needs an unshifted loss; using full vectors");
            }
            TableMode::FullVectors
        }
        _ => TableMode::Scalars,
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SagaOptions {
    /// `None` picks scalars when the loss allows it.
    pub mode: Option<TableMode>,
    /// Keep the table iterates `φ_i` so the Lyapunov function can be evaluated.
    pub retain_phi: bool,
}

/// Iterate, gradient table and sampler of one SAGA run.
#[derive(Debug, Clone)]
pub struct SolverState {
    theta: Array1<f64>,
    table: GradientTable,
    step: f64,
    seed: u64,
    rng: ChaCha8Rng,
    iter: u64,
    phi: Option<Array2<f64>>,
}

impl SolverState {
    /// One full gradient pass at `θ⁰` fills the table (`φ_i⁰ = θ⁰`).
    pub fn init(
        model: &LossModel,
        pen: &Penalty,
        theta0: Array1<f64>,
        step: f64,
        seed: u64,
        options: SagaOptions,
    ) -> Result<Self> {
        check_step("step", step)?;
        validate_setup(model, pen, &theta0)?;
        let mode = resolve_mode(model, options.mode);
        let table = GradientTable::build(model, &theta0, mode);
        let phi = options.retain_phi.then(|| {
            let mut phi = Array2::zeros((model.n(), model.p()));
            phi.rows_mut().into_iter().for_each(|mut r| r.assign(&theta0));
            phi
        });
        Ok(SolverState {
            theta: theta0,
            table,
            step,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            iter: 0,
            phi,
        })
    }

    pub fn theta(&self) -> &Array1<f64> {
        &self.theta
    }

    pub fn table(&self) -> &GradientTable {
        &self.table
    }

    pub fn step_size(&self) -> f64 {
        self.step
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn iter(&self) -> u64 {
        self.iter
    }

    /// Retained table iterates `φ_i`, one per row.
    pub fn phi(&self) -> Option<&Array2<f64>> {
        self.phi.as_ref()
    }

    pub fn phi_row(&self, i: usize) -> Option<ArrayView1<'_, f64>> {
        self.phi.as_ref().map(|p| p.row(i))
    }

    /// The variance-reduced direction the next step would use if it drew `j`.
    pub fn direction(&self, model: &LossModel, j: usize) -> Result<Array1<f64>> {
        if j >= model.n() {
            return Err(Error::IndexOutOfRange { index: j, n: model.n() });
        }
        let new = self.table.evaluate(model, j, &self.theta);
        Ok(self.table.saga_direction(model, j, &new))
    }

    /// Draws `j` uniformly and takes one step.
    pub fn step(&mut self, model: &LossModel, pen: &Penalty) -> Result<()> {
        let j = self.rng.random_range(0..model.n());
        self.step_at(model, pen, j)
    }

    /// One step with a caller-chosen sample index.
    pub fn step_at(&mut self, model: &LossModel, pen: &Penalty, j: usize) -> Result<()> {
        if j >= model.n() {
            return Err(Error::IndexOutOfRange { index: j, n: model.n() });
        }
        let new = self.table.evaluate(model, j, &self.theta);
        let direction = self.table.saga_direction(model, j, &new);
        let w = gradient_step(&self.theta, self.step, &direction);
        let next = pen.prox(&w, self.step * pen.lambda())?;
        self.table.replace(model, j, new);
        if let Some(phi) = self.phi.as_mut() {
            phi.row_mut(j).assign(&self.theta);
        }
        self.theta = next;
        self.iter += 1;
        Ok(())
    }
}

/// Theory default: `1/(9L)` for convex problems, `1/(24L)` when the loss is shifted.
pub fn default_step(model: &LossModel) -> f64 {
    let l = model.smoothness_bound();
    if model.mu_shift() > 0.0 {
        1.0 / (24.0 * l)
    } else {
        1.0 / (9.0 * l)
    }
}

#[derive(Debug, Clone)]
pub struct SagaConfig {
    /// Defaults to the origin.
    pub theta0: Option<Array1<f64>>,
    pub step: f64,
    pub passes: usize,
    pub seed: u64,
    /// Steps between trace records; defaults to n.
    pub trace_every: Option<usize>,
    pub mode: Option<TableMode>,
}

impl SagaConfig {
    pub fn new(step: f64, passes: usize, seed: u64) -> Self {
        SagaConfig { theta0: None, step, passes, seed, trace_every: None, mode: None }
    }
}

struct SagaIter {
    state: SolverState,
    n: usize,
}

impl Iterate for SagaIter {
    fn advance(&mut self, model: &LossModel, pen: &Penalty) -> Result<()> {
        self.state.step(model, pen)
    }

    fn theta(&self) -> &Array1<f64> {
        &self.state.theta
    }

    fn effective_passes(&self) -> f64 {
        1.0 + self.state.iter as f64 / self.n as f64
    }

    fn exhausted(&self, passes: usize) -> bool {
        self.state.iter >= (passes * self.n) as u64
    }
}

/// Runs `passes · n` SAGA steps, recording `G(θ)` every `trace_every` steps.
pub fn run(model: &LossModel, pen: &Penalty, config: &SagaConfig) -> Result<SolverTrace> {
    if config.passes == 0 {
        return Err(invalid("passes must be >= 1"));
    }
    let theta0 = config.theta0.clone().unwrap_or_else(|| Array1::zeros(model.p()));
    let options = SagaOptions { mode: config.mode, retain_phi: false };
    let state = SolverState::init(model, pen, theta0, config.step, config.seed, options)?;
    drive(
        SagaIter { state, n: model.n() },
        model,
        pen,
        DriveSpec {
            algorithm: Algorithm::Saga,
            hyperparameters: vec![("step".into(), config.step)],
            seed: config.seed,
            passes: config.passes,
            trace_every: config.trace_every.unwrap_or(model.n()),
        },
    )
}
