//! Regularizers and their constrained proximal operators.
//!
//! Convex kinds (`L1`, `GroupL2`) are used as `λψ(θ)`. SCAD and MCP are
//! handled through their convexified surrogate
//! `ḡ_λ(t) = (ḡ_{λ,μ}(t) + (μ/2)t²)/λ`, which is what the proximal step sees;
//! the subtracted `(μ/2)‖θ‖²` lives in the loss (see
//! [`LossModel::with_penalty_shift`](crate::model::LossModel::with_penalty_shift)).

use ndarray::Array1;

use crate::error::{invalid, Error, Result};
use crate::model::Groups;

const BISECTION_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub enum PenaltyKind {
    L1,
    GroupL2(Groups),
    Scad { zeta: f64 },
    Mcp { b: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Penalty {
    kind: PenaltyKind,
    lambda: f64,
    rho: f64,
}

impl Penalty {
    fn build(kind: PenaltyKind, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("lambda must be finite and > 0, got {lambda}")));
        }
        Ok(Penalty { kind, lambda, rho: f64::INFINITY })
    }

    pub fn l1(lambda: f64) -> Result<Self> {
        Self::build(PenaltyKind::L1, lambda)
    }

    pub fn group_l2(lambda: f64, groups: Groups) -> Result<Self> {
        Self::build(PenaltyKind::GroupL2(groups), lambda)
    }

    pub fn scad(lambda: f64, zeta: f64) -> Result<Self> {
        if !(zeta > 2.0 && zeta.is_finite()) {
            return Err(invalid(format!("SCAD requires zeta > 2, got {zeta}")));
        }
        Self::build(PenaltyKind::Scad { zeta }, lambda)
    }

    pub fn mcp(lambda: f64, b: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(invalid(format!("MCP requires b > 0, got {b}")));
        }
        Self::build(PenaltyKind::Mcp { b }, lambda)
    }

    /// Restricts iterates to `{θ : ψ(θ) ≤ ρ}`. `ρ = +∞` disables the constraint.
    pub fn with_rho(mut self, rho: f64) -> Result<Self> {
        if rho.is_nan() || rho <= 0.0 {
            return Err(invalid(format!("rho must be > 0, got {rho}")));
        }
        self.rho = rho;
        Ok(self)
    }

    pub fn kind(&self) -> &PenaltyKind {
        &self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn is_nonconvex(&self) -> bool {
        matches!(self.kind, PenaltyKind::Scad { .. } | PenaltyKind::Mcp { .. })
    }

    /// Non-convexity parameter μ: 0 for convex kinds, `1/(ζ-1)` for SCAD, `1/b` for MCP.
    pub fn mu(&self) -> f64 {
        match self.kind {
            PenaltyKind::L1 | PenaltyKind::GroupL2(_) => 0.0,
            PenaltyKind::Scad { zeta } => 1.0 / (zeta - 1.0),
            PenaltyKind::Mcp { b } => 1.0 / b,
        }
    }

    /// Slope of the penalty at `0⁺`, in units of λ.
    pub fn l_g(&self) -> f64 {
        1.0
    }

    fn groups(&self) -> Option<&Groups> {
        match &self.kind {
            PenaltyKind::GroupL2(g) => Some(g),
            _ => None,
        }
    }

    /// `ψ(θ)` for convex kinds, `g_λ(θ) = Σ_j ḡ_λ(θ_j)` for SCAD/MCP.
    pub fn convex_value(&self, theta: &Array1<f64>) -> Result<f64> {
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("theta"));
        }
        if let Some(max) = self.groups().and_then(Groups::max_index) {
            if max >= theta.len() {
                return Err(Error::DimensionMismatch { expected: max + 1, found: theta.len() });
            }
        }
        Ok(self.convex_value_unchecked(theta))
    }

    pub(crate) fn convex_value_unchecked(&self, theta: &Array1<f64>) -> f64 {
        match &self.kind {
            PenaltyKind::L1 => theta.iter().map(|v| v.abs()).sum(),
            PenaltyKind::GroupL2(groups) => groups.iter().map(|g| group_norm(theta, g)).sum(),
            _ => theta.iter().map(|&t| self.surrogate_scalar(t)).sum(),
        }
    }

    /// `g_{λ,μ}(θ) = Σ_j SCAD(θ_j)` or `Σ_j MCP(θ_j)`.
    pub fn nonconvex_value(&self, theta: &Array1<f64>) -> Result<f64> {
        if !self.is_nonconvex() {
            return Err(Error::ConvexPenalty("nonconvex_value"));
        }
        Ok(theta.iter().map(|&t| self.nonconvex_scalar(t)).sum())
    }

    /// The regularizer as it enters the objective: `λψ(θ)` or `g_{λ,μ}(θ)`.
    pub fn objective_term(&self, theta: &Array1<f64>) -> f64 {
        if self.is_nonconvex() {
            theta.iter().map(|&t| self.nonconvex_scalar(t)).sum()
        } else {
            self.lambda * self.convex_value_unchecked(theta)
        }
    }

    fn nonconvex_scalar(&self, t: f64) -> f64 {
        match self.kind {
            PenaltyKind::Scad { zeta } => scad_value(t, self.lambda, zeta),
            PenaltyKind::Mcp { b } => mcp_value(t, self.lambda, b),
            _ => unreachable!("nonconvex_scalar on a convex penalty"),
        }
    }

    fn surrogate_scalar(&self, t: f64) -> f64 {
        (self.nonconvex_scalar(t) + 0.5 * self.mu() * t * t) / self.lambda
    }

    /// Dual norm: `‖v‖∞` for L1 (and for SCAD/MCP), `max_g ‖v_g‖₂` for groups.
    pub fn dual_norm(&self, v: &Array1<f64>) -> f64 {
        match &self.kind {
            PenaltyKind::GroupL2(groups) => groups.iter().map(|g| group_norm(v, g)).fold(0.0, f64::max),
            _ => v.iter().fold(0.0, |a, x| a.max(x.abs())),
        }
    }

    /// `argmin_{ψ(θ) ≤ ρ} (1/2)‖θ - w‖² + step_lambda·ψ(θ)`, with ψ replaced by
    /// `g_λ` for SCAD/MCP. `step_lambda` is the product `γλ`.
    pub fn prox(&self, w: &Array1<f64>, step_lambda: f64) -> Result<Array1<f64>> {
        if !(step_lambda >= 0.0 && step_lambda.is_finite()) {
            return Err(invalid(format!("prox threshold must be finite and >= 0, got {step_lambda}")));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("prox input"));
        }
        if self.groups().and_then(Groups::max_index).is_some_and(|j| j >= w.len()) {
            return Err(Error::DimensionMismatch {
                expected: self.groups().and_then(Groups::max_index).unwrap_or(0) + 1,
                found: w.len(),
            });
        }
        let free = self.unconstrained_prox(w, step_lambda);
        if !self.rho.is_finite() || self.convex_value_unchecked(&free) <= self.rho {
            return Ok(free);
        }
        self.bisect_radius(w, step_lambda)
    }

    /// Raises the threshold by ν ≥ 0 until `ψ(θ(ν)) = ρ`. ψ(θ(ν)) is
    /// non-increasing in ν and vanishes at `ν = max |w|` (or the largest
    /// group norm), which brackets the root. Returns the feasible endpoint.
    fn bisect_radius(&self, w: &Array1<f64>, step_lambda: f64) -> Result<Array1<f64>> {
        let rho = self.rho;
        let tol = 1e-10 * rho.max(1.0);
        let mut lo = 0.0;
        let mut hi = self.dual_norm(w);
        let mut best = self.unconstrained_prox(w, step_lambda + hi);
        if rho - self.convex_value_unchecked(&best) <= tol {
            return Ok(best);
        }
        for _ in 0..BISECTION_MAX_ITER {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let candidate = self.unconstrained_prox(w, step_lambda + mid);
            let value = self.convex_value_unchecked(&candidate);
            if value > rho {
                lo = mid;
            } else {
                hi = mid;
                best = candidate;
                if rho - value <= tol {
                    return Ok(best);
                }
            }
        }
        if rho - self.convex_value_unchecked(&best) <= tol {
            Ok(best)
        } else {
            Err(Error::ProxBisection(BISECTION_MAX_ITER))
        }
    }

    fn unconstrained_prox(&self, w: &Array1<f64>, step_lambda: f64) -> Array1<f64> {
        match &self.kind {
            PenaltyKind::L1 => w.mapv(|v| soft_threshold(v, step_lambda)),
            PenaltyKind::GroupL2(groups) => {
                let mut out = w.clone();
                for g in groups.iter() {
                    let norm = group_norm(w, g);
                    let scale = if norm > step_lambda { 1.0 - step_lambda / norm } else { 0.0 };
                    for &j in g {
                        out[j] = scale * w[j];
                    }
                }
                out
            }
            &PenaltyKind::Scad { zeta } => {
                let gamma = step_lambda / self.lambda;
                w.mapv(|v| scad_surrogate_prox(v, self.lambda, zeta, gamma))
            }
            &PenaltyKind::Mcp { b } => {
                let gamma = step_lambda / self.lambda;
                w.mapv(|v| mcp_surrogate_prox(v, self.lambda, b, gamma))
            }
        }
    }
}

fn group_norm(v: &Array1<f64>, group: &[usize]) -> f64 {
    group.iter().map(|&j| v[j] * v[j]).sum::<f64>().sqrt()
}

/// `sign(v)·max(|v| - t, 0)`; `|v| = t` maps to 0.
#[inline]
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

pub fn scad_value(t: f64, lambda: f64, zeta: f64) -> f64 {
    let a = t.abs();
    if a <= lambda {
        lambda * a
    } else if a <= zeta * lambda {
        -(a * a - 2.0 * zeta * lambda * a + lambda * lambda) / (2.0 * (zeta - 1.0))
    } else {
        (zeta + 1.0) * lambda * lambda / 2.0
    }
}

/// Even extension of `λ ∫_0^{|t|} (1 - z/(λb))₊ dz`.
pub fn mcp_value(t: f64, lambda: f64, b: f64) -> f64 {
    let a = t.abs();
    if a <= b * lambda {
        lambda * a - a * a / (2.0 * b)
    } else {
        0.5 * b * lambda * lambda
    }
}

/// Minimizer of `(1/2)(t - w)² + γ(SCAD(t) + (μ/2)t²)` with `μ = 1/(ζ-1)`.
///
/// The surrogate derivative on `t > 0` is `λ + μt` on `(0, λ]`, the constant
/// `ζλμ` on `(λ, ζλ]` and `μt` beyond; stationarity in each piece gives the
/// branches below.
fn scad_surrogate_prox(w: f64, lambda: f64, zeta: f64, gamma: f64) -> f64 {
    let mu = 1.0 / (zeta - 1.0);
    let a = w.abs();
    let t = if a <= gamma * lambda {
        0.0
    } else if a <= lambda * (1.0 + gamma + gamma * mu) {
        (a - gamma * lambda) / (1.0 + gamma * mu)
    } else if a <= zeta * lambda * (1.0 + gamma * mu) {
        a - gamma * zeta * lambda * mu
    } else {
        a / (1.0 + gamma * mu)
    };
    t.copysign(w)
}

/// Minimizer of `(1/2)(t - w)² + γ(MCP(t) + t²/(2b))`.
///
/// The surrogate derivative on `t > 0` is the constant λ up to `bλ` and
/// `t/b` beyond.
fn mcp_surrogate_prox(w: f64, lambda: f64, b: f64, gamma: f64) -> f64 {
    let a = w.abs();
    let t = if a <= gamma * lambda {
        0.0
    } else if a <= lambda * (b + gamma) {
        a - gamma * lambda
    } else {
        a / (1.0 + gamma / b)
    };
    t.copysign(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn norm(v: &Array1<f64>) -> f64 {
        v.dot(v).sqrt()
    }

    /// Minimizes a 1-D convex function on [lo, hi] by repeated grid refinement.
    fn grid_minimize(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..40 {
            let k = 200;
            let h = (hi - lo) / k as f64;
            let (best, _) = (0..=k)
                .map(|i| lo + i as f64 * h)
                .map(|t| (t, f(t)))
                .fold((lo, f64::INFINITY), |acc, (t, v)| if v < acc.1 { (t, v) } else { acc });
            lo = best - 2.0 * h;
            hi = best + 2.0 * h;
        }
        0.5 * (lo + hi)
    }

    /// Composite Simpson quadrature of `λ(1 - z/(λb))₊` on [0, |t|], split at
    /// the integrand's kink `z = λb`.
    fn mcp_quadrature(t: f64, lambda: f64, b: f64) -> f64 {
        let a = t.abs();
        let f = |z: f64| lambda * (1.0 - z / (lambda * b)).max(0.0);
        let simpson = |lo: f64, hi: f64| {
            let k = 20_000;
            let h = (hi - lo) / k as f64;
            let mut s = f(lo) + f(hi);
            for i in 1..k {
                s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        let kink = lambda * b;
        if a <= kink {
            simpson(0.0, a)
        } else {
            simpson(0.0, kink) + simpson(kink, a)
        }
    }

    fn groups_12_3() -> Groups {
        Groups::new(vec![vec![0, 1], vec![2]], 3).unwrap()
    }

    fn all_kinds(lambda: f64) -> Vec<Penalty> {
        vec![
            Penalty::l1(lambda).unwrap(),
            Penalty::group_l2(lambda, Groups::new(vec![vec![0, 1], vec![2, 3]], 4).unwrap()).unwrap(),
            Penalty::scad(lambda, 3.7).unwrap(),
            Penalty::mcp(lambda, 2.5).unwrap(),
        ]
    }

    #[test]
    fn values() {
        assert_eq!(Penalty::l1(1.0).unwrap().convex_value(&array![1.0, -2.0, 0.0]).unwrap(), 3.0);
        let g = Penalty::group_l2(1.0, groups_12_3()).unwrap();
        assert_eq!(g.convex_value(&array![3.0, 4.0, 5.0]).unwrap(), 10.0);
        let scad = Penalty::scad(1.0, 3.0).unwrap();
        assert_relative_eq!(scad.convex_value(&array![0.5]).unwrap(), 0.5625, epsilon = 1e-15);
        assert_relative_eq!(scad.nonconvex_value(&array![5.0]).unwrap(), 2.0, epsilon = 1e-15);
        assert_eq!(scad.nonconvex_value(&array![0.0]).unwrap(), 0.0);
        assert!(Penalty::l1(1.0).unwrap().nonconvex_value(&array![1.0]).is_err());
    }

    #[test]
    fn mcp_matches_quadrature() {
        let mcp = Penalty::mcp(1.0, 2.0).unwrap();
        let value = mcp.nonconvex_value(&array![0.5]).unwrap();
        assert_relative_eq!(value, mcp_quadrature(0.5, 1.0, 2.0), epsilon = 1e-10);
        assert_relative_eq!(value, 0.4375, epsilon = 1e-15);
        for t in [-3.0, -0.7, 0.1, 1.9, 2.0, 4.5] {
            assert_relative_eq!(mcp_value(t, 1.0, 2.0), mcp_quadrature(t, 1.0, 2.0), epsilon = 1e-9);
        }
    }

    #[test]
    fn dual_norms_and_duality() {
        assert_eq!(Penalty::l1(1.0).unwrap().dual_norm(&array![1.0, -3.0, 2.0]), 3.0);
        assert_eq!(Penalty::group_l2(1.0, groups_12_3()).unwrap().dual_norm(&array![3.0, 4.0, 1.0]), 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for pen in all_kinds(0.3).into_iter().take(2) {
            for _ in 0..100 {
                let u = Array1::from_shape_fn(4, |_| rng.random_range(-2.0..2.0));
                let v = Array1::from_shape_fn(4, |_| rng.random_range(-2.0..2.0));
                let bound = pen.convex_value(&u).unwrap() * pen.dual_norm(&v);
                assert!(u.dot(&v) <= bound + 1e-12);
            }
        }
    }

    #[test]
    fn mu_and_lg() {
        assert_relative_eq!(Penalty::scad(0.1, 4.5).unwrap().mu(), 1.0 / 3.5);
        assert_eq!(Penalty::l1(0.1).unwrap().mu(), 0.0);
        assert_eq!(Penalty::mcp(0.1, 2.0).unwrap().mu(), 0.5);
        assert!(all_kinds(0.2).iter().all(|p| p.l_g() == 1.0));
    }

    #[test]
    fn prox_closed_forms() {
        let l1 = Penalty::l1(1.0).unwrap();
        assert_eq!(l1.prox(&array![1.2, -0.3, 0.0], 0.5).unwrap(), array![0.7, 0.0, 0.0]);
        assert_eq!(l1.prox(&array![0.5, -0.5], 0.5).unwrap(), array![0.0, 0.0]);
        let ball = Penalty::l1(1.0).unwrap().with_rho(1.0).unwrap();
        let p = ball.prox(&array![2.0, 0.0], 0.0).unwrap();
        assert_relative_eq!(p[0], 1.0, epsilon = 1e-9);
        assert_eq!(p[1], 0.0);
        let g = Penalty::group_l2(1.0, groups_12_3()).unwrap();
        let p = g.prox(&array![3.0, 4.0, 0.5], 1.0).unwrap();
        assert_relative_eq!(p[0], 2.4, epsilon = 1e-15);
        assert_relative_eq!(p[1], 3.2, epsilon = 1e-15);
        assert_eq!(p[2], 0.0);
    }

    #[test]
    fn nonconvex_prox_matches_grid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let lambda = 0.05;
        for pen in [Penalty::scad(lambda, 3.7).unwrap(), Penalty::mcp(lambda, 1.5).unwrap()] {
            for _ in 0..200 {
                let w = rng.random_range(-3.0..3.0);
                let s = rng.random_range(1e-6..0.2);
                let obj = |t: f64| 0.5 * (t - w) * (t - w) + s * pen.surrogate_scalar(t);
                let oracle = grid_minimize(obj, -3.5, 3.5);
                let got = pen.prox(&array![w], s).unwrap()[0];
                assert!((got - oracle).abs() <= 1e-6, "w={w} s={s}: {got} vs {oracle}");
            }
        }
    }

    #[test]
    fn surrogate_is_midpoint_convex() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for pen in [Penalty::scad(0.4, 3.0).unwrap(), Penalty::mcp(0.4, 2.0).unwrap()] {
            for _ in 0..1000 {
                let a = rng.random_range(-3.0..3.0);
                let b = rng.random_range(-3.0..3.0);
                let mid = pen.surrogate_scalar(0.5 * (a + b));
                let avg = 0.5 * (pen.surrogate_scalar(a) + pen.surrogate_scalar(b));
                assert!(mid <= avg + 1e-12);
            }
        }
    }

    fn prox_objective(pen: &Penalty, theta: &Array1<f64>, w: &Array1<f64>, s: f64) -> f64 {
        0.5 * (theta - w).mapv(|v| v * v).sum() + s * pen.convex_value(theta).unwrap()
    }

    /// A random point of the ball `{ψ ≤ ρ}`: random direction scaled onto a random level.
    fn random_feasible(pen: &Penalty, rng: &mut ChaCha8Rng, p: usize) -> Array1<f64> {
        let dir = Array1::from_shape_fn(p, |_| rng.random_range(-1.0..1.0));
        let level = pen.rho() * rng.random::<f64>();
        let mut lo = 0.0;
        let mut hi = 1.0;
        while pen.convex_value(&(&dir * hi)).unwrap() < level {
            hi *= 2.0;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if pen.convex_value(&(&dir * mid)).unwrap() < level { lo = mid } else { hi = mid }
        }
        dir * lo
    }

    #[test]
    fn constrained_prox_beats_feasible_candidates() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for base in all_kinds(0.3) {
            let pen = base.with_rho(0.8).unwrap();
            for _ in 0..4 {
                let w = Array1::from_shape_fn(4, |_| rng.random_range(-3.0..3.0));
                let s = rng.random_range(0.0..0.5);
                let out = pen.prox(&w, s).unwrap();
                assert!(pen.convex_value(&out).unwrap() <= pen.rho() + 1e-8);
                let best = prox_objective(&pen, &out, &w, s);
                for _ in 0..20_000 {
                    let c = random_feasible(&pen, &mut rng, 4);
                    assert!(prox_objective(&pen, &c, &w, s) - best >= -1e-9);
                }
            }
        }
    }

    #[test]
    fn prox_is_separable() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for pen in all_kinds(0.2) {
            let w = Array1::from_shape_fn(4, |_| rng.random_range(-2.0..2.0));
            let whole = pen.prox(&w, 0.15).unwrap();
            match pen.kind() {
                PenaltyKind::GroupL2(groups) => {
                    for g in groups.iter() {
                        let sub = Array1::from_iter(g.iter().map(|&j| w[j]));
                        let single = Penalty::group_l2(0.2, Groups::new(vec![(0..g.len()).collect()], g.len()).unwrap())
                            .unwrap()
                            .prox(&sub, 0.15)
                            .unwrap();
                        for (k, &j) in g.iter().enumerate() {
                            assert_eq!(whole[j], single[k]);
                        }
                    }
                }
                _ => {
                    for j in 0..4 {
                        assert_eq!(whole[j], pen.prox(&array![w[j]], 0.15).unwrap()[0]);
                    }
                }
            }
        }
    }

    #[test]
    fn prox_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for pen in all_kinds(0.2) {
            let w = Array1::from_shape_fn(4, |_| rng.random_range(-2.0..2.0));
            // θ̄ = prox(w) is a fixed point of θ ↦ prox(θ̄ + (w - θ̄)), i.e. of the
            // same subproblem; with zero threshold prox is the identity on θ̄.
            let bar = pen.prox(&w, 0.1).unwrap();
            assert_eq!(pen.prox(&bar, 0.0).unwrap(), bar);
            // The origin minimizes every subproblem centred at itself.
            let zero = Array1::zeros(4);
            assert_eq!(pen.prox(&zero, 0.1).unwrap(), zero);
        }
    }

    #[test]
    fn prox_errors() {
        assert!(Penalty::l1(1.0).unwrap().with_rho(0.0).is_err());
        assert!(Penalty::l1(1.0).unwrap().with_rho(-1.0).is_err());
        assert!(Penalty::scad(1.0, 2.0).is_err());
        assert!(Penalty::mcp(1.0, 0.0).is_err());
        assert!(Penalty::l1(1.0).unwrap().prox(&array![f64::NAN], 0.1).is_err());
        assert!(Penalty::l1(1.0).unwrap().prox(&array![1.0], -0.1).is_err());
    }

    proptest! {
        #[test]
        fn prox_is_nonexpansive(
            kind in 0usize..4,
            constrained in any::<bool>(),
            a in prop::collection::vec(-3.0f64..3.0, 4),
            b in prop::collection::vec(-3.0f64..3.0, 4),
            s in 0.0f64..0.5,
        ) {
            let mut pen = all_kinds(0.25).swap_remove(kind);
            if constrained {
                pen = pen.with_rho(1.0).unwrap();
            }
            let (a, b) = (Array1::from(a), Array1::from(b));
            let pa = pen.prox(&a, s).unwrap();
            let pb = pen.prox(&b, s).unwrap();
            prop_assert!(norm(&(&pa - &pb)) <= norm(&(&a - &b)) + 1e-9);
            prop_assert!(pen.convex_value(&pa).unwrap() <= pen.rho() + 1e-8);
        }
    }
}
