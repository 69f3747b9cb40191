//! Objective gaps against a high-accuracy reference, the Lyapunov function,
//! and the rate constants of the convergence analysis.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array1;

use crate::baselines::ProxGdState;
use crate::error::{invalid, Error, Result};
use crate::model::LossModel;
use crate::penalty::Penalty;
use crate::saga::{SagaOptions, SolverState};
use crate::trace::{objective_unchecked, validate_setup, SolverTrace};

/// Floor applied to gaps so they stay plottable on a log axis.
pub const GAP_FLOOR: f64 = 1e-16;
/// Stationarity residual a reference solution must reach.
pub const REFERENCE_TOLERANCE: f64 = 1e-12;

/// `G(θ) = f(θ) + λψ(θ)`, or `f(θ) + g_{λ,μ}(θ)` for SCAD/MCP, where `f` is
/// the original (unshifted) loss.
pub fn objective(model: &LossModel, pen: &Penalty, theta: &Array1<f64>) -> Result<f64> {
    if theta.len() != model.p() {
        return Err(Error::DimensionMismatch { expected: model.p(), found: theta.len() });
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("theta"));
    }
    Ok(objective_unchecked(model, pen, theta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceStatus {
    Converged,
    /// The pass budget ran out first; the best iterate found is returned.
    BudgetExhausted,
}

impl ReferenceStatus {
    pub fn name(self) -> &'static str {
        match self {
            ReferenceStatus::Converged => "converged",
            ReferenceStatus::BudgetExhausted => "budget-exhausted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub theta: Array1<f64>,
    pub objective: f64,
    /// `‖θ - prox(θ - γ∇F(θ), γλ)‖∞` with `γ = 1/L̂` (full-gradient smoothness estimate).
    pub residual: f64,
    pub status: ReferenceStatus,
    /// Effective passes spent.
    pub passes: f64,
}

/// SAGA passes between stationarity checks in the first stage.
const WARM_CHUNK: usize = 10;
/// Residual at which the first stage hands over to full-gradient polishing.
const WARM_TARGET: f64 = 1e-9;

/// Computes a near-exact minimizer: SAGA at step `1/(3L)` until the
/// stationarity residual drops below `1e-9`, then proximal gradient descent
/// at step `1/L̂` until it reaches `1e-12` or `budget_passes` run out.
pub fn reference_solution(model: &LossModel, pen: &Penalty, budget_passes: usize) -> Result<Reference> {
    if budget_passes == 0 {
        return Err(invalid("reference budget must be >= 1 pass"));
    }
    let theta0 = Array1::zeros(model.p());
    validate_setup(model, pen, &theta0)?;
    let gd_step = 1.0 / model.full_smoothness_estimate().max(model.mu_shift());
    let budget = budget_passes as f64;

    let saga_step = 1.0 / (3.0 * model.smoothness_bound());
    let mut saga = SolverState::init(model, pen, theta0, saga_step, 0, SagaOptions::default())?;
    let mut spent = 1.0;
    let mut residual = f64::INFINITY;
    // Half the budget at most goes to the stochastic stage.
    while spent + (WARM_CHUNK + 1) as f64 <= budget / 2.0 {
        for _ in 0..WARM_CHUNK * model.n() {
            saga.step(model, pen)?;
        }
        spent += WARM_CHUNK as f64;
        residual = stationarity_residual(model, pen, saga.theta(), gd_step)?;
        spent += 1.0;
        if residual <= WARM_TARGET || !residual.is_finite() {
            break;
        }
    }
    let start = if residual.is_finite() { saga.theta().clone() } else { Array1::zeros(model.p()) };

    let mut gd = ProxGdState::init(model, pen, start, gd_step)?;
    let mut best = (gd.theta().clone(), f64::INFINITY);
    while spent + 1.0 <= budget {
        let before = gd.theta().clone();
        gd.step(model, pen)?;
        spent += 1.0;
        // The step's displacement is the residual at the previous iterate.
        let r = gd.residual();
        if r < best.1 {
            best = (before, r);
        }
        if r <= REFERENCE_TOLERANCE {
            break;
        }
    }
    let (theta, residual) = best;
    let status = if residual <= REFERENCE_TOLERANCE {
        ReferenceStatus::Converged
    } else {
        log::warn!("reference solve stopped at residual {residual:e} after {spent} passes");
        ReferenceStatus::BudgetExhausted
    };
    Ok(Reference { objective: objective_unchecked(model, pen, &theta), theta, residual, status, passes: spent })
}

/// `‖θ - prox(θ - γ∇F(θ), γλ)‖∞`.
pub fn stationarity_residual(model: &LossModel, pen: &Penalty, theta: &Array1<f64>, step: f64) -> Result<f64> {
    let grad = model.grad_full(theta)?;
    let mut w = theta.clone();
    w.scaled_add(-step, &grad);
    let next = pen.prox(&w, step * pen.lambda())?;
    Ok(next.iter().zip(theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// Reference solutions stored as text files named by a caller-supplied key.
#[derive(Debug, Clone)]
pub struct ReferenceCache {
    dir: PathBuf,
}

const CACHE_HEADER: &str = "rsc-saga reference v1";

impl ReferenceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReferenceCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.ref"))
    }

    pub fn load(&self, key: &str) -> Result<Option<Reference>> {
        let path = self.path(key);
        if !path.exists() {
            return Ok(None);
        }
        parse_reference(&fs::read_to_string(&path)?).map(Some)
    }

    /// Writes to a temporary file and renames it into place. An entry that
    /// already exists is left untouched, so concurrent writers agree.
    pub fn store(&self, key: &str, reference: &Reference) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path(key);
        if path.exists() {
            return Ok(());
        }
        let tmp = self.dir.join(format!(".{key}.{}.tmp", std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(format_reference(reference).as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    pub fn get_or_compute(&self, key: &str, compute: impl FnOnce() -> Result<Reference>) -> Result<Reference> {
        if let Some(r) = self.load(key)? {
            return Ok(r);
        }
        let r = compute()?;
        self.store(key, &r)?;
        // Another writer may have won the rename; everyone reads the stored copy.
        Ok(self.load(key)?.unwrap_or(r))
    }
}

fn format_reference(r: &Reference) -> String {
    let mut s = format!(
        "{CACHE_HEADER}\nstatus {}\nresidual {:e}\nobjective {:e}\npasses {}\np {}\n",
        r.status.name(),
        r.residual,
        r.objective,
        r.passes,
        r.theta.len()
    );
    for v in &r.theta {
        s.push_str(&format!("{v:e}\n"));
    }
    s
}

fn parse_reference(text: &str) -> Result<Reference> {
    let mut lines = text.lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, String)> {
        lines
            .next()
            .map(|(i, l)| (i + 1, l.to_string()))
            .ok_or_else(|| Error::Parse { line: 0, message: format!("missing {what}") })
    };
    let (_, header) = next("header")?;
    if header != CACHE_HEADER {
        return Err(Error::Parse { line: 1, message: format!("unexpected header '{header}'") });
    }
    let mut field = |name: &str| -> Result<(usize, String)> {
        let (line, text) = next(name)?;
        text.strip_prefix(name)
            .and_then(|rest| rest.strip_prefix(' '))
            .map(|v| (line, v.to_string()))
            .ok_or_else(|| Error::Parse { line, message: format!("expected '{name}'") })
    };
    let num = |(line, v): (usize, String)| -> Result<f64> {
        v.parse().map_err(|_| Error::Parse { line, message: format!("bad number '{v}'") })
    };
    let status = match field("status")?.1.as_str() {
        "converged" => ReferenceStatus::Converged,
        "budget-exhausted" => ReferenceStatus::BudgetExhausted,
        other => return Err(Error::Parse { line: 2, message: format!("bad status '{other}'") }),
    };
    let residual = num(field("residual")?)?;
    let objective = num(field("objective")?)?;
    let passes = num(field("passes")?)?;
    let p = num(field("p")?)? as usize;
    let mut theta = Array1::zeros(p);
    for v in theta.iter_mut() {
        *v = num(next("coefficient")?)?;
    }
    Ok(Reference { theta, objective, residual, status, passes })
}

/// `(pass, max(G_k - Ĝ, 1e-16))` for every record. Non-finite objectives of
/// diverged runs pass through unfloored.
pub fn gap_trace(trace: &SolverTrace, g_hat: f64) -> Vec<(f64, f64)> {
    trace.records.iter().map(|r| (r.pass, floor_gap(r.objective - g_hat))).collect()
}

pub fn floor_gap(gap: f64) -> f64 {
    if gap.is_nan() {
        gap
    } else {
        gap.max(GAP_FLOOR)
    }
}

/// Most negative raw gap, as a multiple of `|Ĝ|` (0 when none is negative).
/// Values below `-1e-9` mean the reference is not accurate enough.
pub fn reference_shortfall(trace: &SolverTrace, g_hat: f64) -> f64 {
    let scale = g_hat.abs().max(f64::MIN_POSITIVE);
    trace
        .records
        .iter()
        .map(|r| ((r.objective - g_hat) / scale).min(0.0))
        .fold(0.0, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(x, ln y)`. Needs two distinct abscissae.
pub fn fit_log_linear(points: &[(f64, f64)]) -> Option<LinearFit> {
    if points.len() < 2 || points.iter().any(|&(_, y)| y <= 0.0) {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (dx, dy) = (x - mx, y.ln() - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit { slope, intercept: my - slope * mx, r_squared })
}

/// Coefficients of the Lyapunov function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovCoeffs {
    pub gamma: f64,
    pub c: f64,
    pub alpha: f64,
    pub coef_b: f64,
}

impl LyapunovCoeffs {
    /// `γ = 1/(9L)`, `c = 9L/n`, `α = c/2`, `b = 2αγ`.
    pub fn convex(l: f64, n: usize) -> Self {
        Self::with_factor(9.0, l, n)
    }

    /// `γ = 1/(24L)`, `c = 24L/n`, `α = c/2`, `b = 2αγ`.
    pub fn nonconvex(l: f64, n: usize) -> Self {
        Self::with_factor(24.0, l, n)
    }

    fn with_factor(k: f64, l: f64, n: usize) -> Self {
        let gamma = 1.0 / (k * l);
        let c = k * l / n as f64;
        let alpha = c / 2.0;
        LyapunovCoeffs { gamma, c, alpha, coef_b: 2.0 * alpha * gamma }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lyapunov {
    /// `(1/n) Σ_i [F_i(φ_i) - F_i(θ̂) - ⟨∇F_i(θ̂), φ_i - θ̂⟩]`.
    pub table: f64,
    /// `‖θ - θ̂‖²`.
    pub distance_sq: f64,
    /// `G(θ) - G(θ̂)`.
    pub gap: f64,
    pub value: f64,
}

/// Evaluates `T = table + (c + α)‖θ - θ̂‖² + b(G(θ) - G(θ̂))` at a SAGA state
/// that retains its table iterates.
pub fn lyapunov(
    model: &LossModel,
    pen: &Penalty,
    state: &SolverState,
    theta_hat: &Array1<f64>,
    coeffs: &LyapunovCoeffs,
) -> Result<Lyapunov> {
    let phi = state.phi().ok_or(Error::PhiNotRetained { operation: "lyapunov" })?;
    if theta_hat.len() != model.p() {
        return Err(Error::DimensionMismatch { expected: model.p(), found: theta_hat.len() });
    }
    let ds = model.dataset();
    let mu = model.mu_shift();
    let mut table = 0.0;
    for (i, phi_i) in phi.rows().into_iter().enumerate() {
        let x = ds.row(i);
        let (u, u_hat) = (x.dot(&phi_i), x.dot(theta_hat));
        let piece = match model.kind() {
            // Exact for quadratics; avoids cancellation near θ̂.
            crate::model::LossKind::SquaredError | crate::model::LossKind::CorrectedQuadratic => {
                0.5 * (u - u_hat) * (u - u_hat)
            }
            crate::model::LossKind::Logistic => {
                model.sample_piece(i, u) - model.sample_piece(i, u_hat) - model.sample_derivative(i, u_hat) * (u - u_hat)
            }
        };
        let shift = if mu != 0.0 {
            let d = &phi_i - theta_hat;
            0.5 * mu * d.dot(&d)
        } else {
            0.0
        };
        table += piece - shift;
    }
    table /= model.n() as f64;
    let d = state.theta() - theta_hat;
    let distance_sq = d.dot(&d);
    let gap = objective_unchecked(model, pen, state.theta()) - objective_unchecked(model, pen, theta_hat);
    let value = table + (coeffs.c + coeffs.alpha) * distance_sq + coeffs.coef_b * gap;
    Ok(Lyapunov { table, distance_sq, gap, value })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Convex,
    NonConvex,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryInputs {
    pub regime: Regime,
    /// Restricted strong convexity curvature `σ`.
    pub sigma: f64,
    /// Restricted strong convexity tolerance `τ_σ`.
    pub tau_sigma: f64,
    /// Squared subspace compatibility `H²(M̄)` (`r` for Lasso, `s_G` for group Lasso).
    pub compat_sq: f64,
    /// Per-sample smoothness `L`.
    pub smoothness: f64,
    pub n: usize,
    /// Non-convexity of the penalty (ignored in the convex regime).
    pub mu: f64,
    pub l_g: f64,
    pub rho: f64,
    /// Dual norm of `∇f(θ*)`.
    pub grad_at_star_dual: f64,
    /// Unspecified universal constant in the λ requirement.
    pub c1: f64,
    /// `‖θ̂ - θ*‖₂`, when a true parameter exists.
    pub estimation_error: Option<f64>,
    /// `ψ(θ*_{M⊥})`; zero when `θ*` lies in the model subspace.
    pub psi_perp: f64,
}

impl TheoryInputs {
    pub fn new(regime: Regime, sigma: f64, tau_sigma: f64, compat_sq: f64, smoothness: f64, n: usize) -> Self {
        TheoryInputs {
            regime,
            sigma,
            tau_sigma,
            compat_sq,
            smoothness,
            n,
            mu: 0.0,
            l_g: 1.0,
            rho: f64::INFINITY,
            grad_at_star_dual: 0.0,
            c1: 1.0,
            estimation_error: None,
            psi_perp: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryReport {
    pub inputs: TheoryInputs,
    pub sigma_bar: f64,
    /// `None` when the rate is not guaranteed.
    pub inv_kappa: Option<f64>,
    /// `None` without an estimation error.
    pub delta: Option<f64>,
    pub coeffs: LyapunovCoeffs,
    pub lambda_floor: f64,
}

impl TheoryReport {
    pub fn rate_guaranteed(&self) -> bool {
        self.inv_kappa.is_some()
    }
}

/// `c·x`, reading `0·∞` as 0 so an inactive radius contributes nothing when `τ_σ = 0`.
fn scaled(c: f64, x: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * x
    }
}

pub fn theory_constants(inputs: &TheoryInputs) -> Result<TheoryReport> {
    let i = inputs;
    let finite_nonneg = [("tau_sigma", i.tau_sigma), ("compat_sq", i.compat_sq), ("mu", i.mu), ("grad_at_star_dual", i.grad_at_star_dual), ("c1", i.c1), ("psi_perp", i.psi_perp)];
    for (name, v) in finite_nonneg {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(invalid(format!("{name} must be finite and >= 0, got {v}")));
        }
    }
    if !i.sigma.is_finite() {
        return Err(invalid("sigma must be finite"));
    }
    if !(i.smoothness > 0.0 && i.smoothness.is_finite()) || !(i.l_g > 0.0 && i.l_g.is_finite()) {
        return Err(invalid("smoothness and l_g must be finite and > 0"));
    }
    if i.n == 0 {
        return Err(invalid("n must be >= 1"));
    }
    if !(i.rho > 0.0) {
        return Err(invalid("rho must be > 0"));
    }
    if let Some(e) = i.estimation_error {
        if !(e >= 0.0 && e.is_finite()) {
            return Err(invalid("estimation error must be finite and >= 0"));
        }
    }
    let (l, n) = (i.smoothness, i.n as f64);
    let restricted = i.sigma - 64.0 * i.tau_sigma * i.compat_sq;
    let (sigma_bar, inv_kappa, coeffs, lambda_floor) = match i.regime {
        Regime::Convex => {
            let inv_kappa = (restricted > 0.0).then(|| (restricted / (14.0 * l)).min(1.0 / (9.0 * n)));
            let floor = (2.0 * i.grad_at_star_dual).max(scaled(i.c1 * i.tau_sigma, i.rho));
            (restricted, inv_kappa, LyapunovCoeffs::convex(l, i.n), floor)
        }
        Regime::NonConvex => {
            let sigma_bar = restricted - i.mu;
            let inv_kappa = (sigma_bar > 3.0 * i.mu).then(|| (2.0 * sigma_bar / (5.0 * l)).min(1.0 / n) / 24.0);
            let floor = scaled(i.c1 * i.tau_sigma, i.rho).max(4.0 * i.grad_at_star_dual) / i.l_g;
            (sigma_bar, inv_kappa, LyapunovCoeffs::nonconvex(l, i.n), floor)
        }
    };
    let delta = i.estimation_error.map(|e| {
        let inner = 8.0 * i.compat_sq.sqrt() * e + 8.0 * i.psi_perp;
        24.0 * i.tau_sigma * inner * inner
    });
    Ok(TheoryReport { inputs: *inputs, sigma_bar, inv_kappa, delta, coeffs, lambda_floor })
}

/// Lasso requirement `λ ≥ 6ς√(log p / n)`.
pub fn lasso_lambda_floor(noise_std: f64, p: usize, n: usize) -> f64 {
    6.0 * noise_std * ((p as f64).ln() / n as f64).sqrt()
}

/// Group Lasso requirement `λ ≥ 4ς(√(m/n) + √(log N_G / n))`.
pub fn group_lasso_lambda_floor(noise_std: f64, group_size: usize, num_groups: usize, n: usize) -> f64 {
    let n = n as f64;
    4.0 * noise_std * ((group_size as f64 / n).sqrt() + ((num_groups as f64).ln() / n).sqrt())
}

/// SCAD regression requirement `λ ≥ 12ς√(log p / n)`.
pub fn scad_lambda_floor(noise_std: f64, p: usize, n: usize) -> f64 {
    12.0 * noise_std * ((p as f64).ln() / n as f64).sqrt()
}

/// `τ_σ = c·ν(Σ)·log p / n`, the restricted-curvature tolerance of Gaussian designs.
pub fn gaussian_tau_sigma(c: f64, nu: f64, p: usize, n: usize) -> f64 {
    c * nu * (p as f64).ln() / n as f64
}
