//! Datasets and smooth finite-sum losses.
//!
//! Every loss handled here has the generalized linear form
//! `f_i(θ) = h_i(x_iᵀθ)`, optionally shifted by `-(μ/2)‖θ‖²` so that the
//! non-convex pipeline can run on `F_i(θ) = f_i(θ) - (μ/2)‖θ‖²` while the
//! per-sample pieces `h_i` stay convex.

use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{invalid, Error, Result};

/// A partition of (a subset of) the feature indices into disjoint groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Groups(Vec<Vec<usize>>);

impl Groups {
    /// Builds a group structure, checking that groups are non-empty, disjoint
    /// and only reference indices below `p`.
    pub fn new(groups: Vec<Vec<usize>>, p: usize) -> Result<Self> {
        let mut seen = vec![false; p];
        for (g, members) in groups.iter().enumerate() {
            if members.is_empty() {
                return Err(invalid(format!("group {g} is empty")));
            }
            for &j in members {
                if j >= p {
                    return Err(invalid(format!(
                        "group {g} references feature {j}, but p = {p}"
                    )));
                }
                if seen[j] {
                    return Err(invalid(format!("feature {j} appears in more than one group")));
                }
                seen[j] = true;
            }
        }
        Ok(Groups(groups))
    }

    /// Consecutive groups of `size` features covering `0..p`.
    pub fn contiguous(p: usize, size: usize) -> Result<Self> {
        if size == 0 || p % size != 0 {
            return Err(invalid(format!("group size {size} does not divide p = {p}")));
        }
        Self::new((0..p / size).map(|g| (g * size..(g + 1) * size).collect()).collect(), p)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.0.iter().map(Vec::as_slice)
    }

    /// Largest feature index referenced, if any.
    pub fn max_index(&self) -> Option<usize> {
        self.0.iter().flatten().copied().max()
    }

    pub fn covers_all(&self, p: usize) -> bool {
        self.0.iter().map(Vec::len).sum::<usize>() == p
    }
}

/// Dense design matrix (rows are samples) with responses and optional groups.
///
/// Immutable after construction; share it between models and threads with
/// an `Arc`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    responses: Array1<f64>,
    groups: Option<Groups>,
    column_normalized: bool,
}

impl Dataset {
    pub fn new(features: Array2<f64>, responses: Array1<f64>) -> Result<Self> {
        let (n, p) = features.dim();
        if n == 0 || p == 0 {
            return Err(Error::EmptyDataset);
        }
        if responses.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: responses.len() });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        if responses.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("responses"));
        }
        // Row-major storage keeps per-sample access contiguous.
        let features = if features.is_standard_layout() {
            features
        } else {
            features.as_standard_layout().into_owned()
        };
        Ok(Dataset { features, responses, groups: None, column_normalized: false })
    }

    pub fn with_groups(mut self, groups: Groups) -> Result<Self> {
        if let Some(j) = groups.max_index() {
            if j >= self.p() {
                return Err(invalid(format!("group index {j} out of range for p = {}", self.p())));
            }
        }
        self.groups = Some(groups);
        Ok(self)
    }

    /// Marks the dataset as column-normalized after checking
    /// `‖X_j‖₂/√n ≤ 1 + 1e-9` for every column.
    pub(crate) fn mark_column_normalized(mut self) -> Result<Self> {
        let sqrt_n = (self.n() as f64).sqrt();
        for (j, col) in self.features.columns().into_iter().enumerate() {
            let ratio = col.dot(&col).sqrt() / sqrt_n;
            if ratio > 1.0 + 1e-9 {
                return Err(invalid(format!("column {j} has normalized norm {ratio}")));
            }
        }
        self.column_normalized = true;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn p(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn responses(&self) -> &Array1<f64> {
        &self.responses
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    pub fn groups(&self) -> Option<&Groups> {
        self.groups.as_ref()
    }

    pub fn column_normalized(&self) -> bool {
        self.column_normalized
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// `(1/2)(y_i - x_iᵀθ)²`
    SquaredError,
    /// `log(1 + exp(-y_i x_iᵀθ))` with labels in {-1, +1}.
    Logistic,
    /// Errors-in-variables least squares on observed features `z_i`: the
    /// convex piece `(1/2)(y_i - z_iᵀθ)²` plus a global `-(γ_w/2)‖θ‖²`.
    CorrectedQuadratic,
}

/// A finite-sum loss `(1/n) Σ f_i(θ) - (mu_shift/2)‖θ‖²` over a dataset.
///
/// `mu_shift` is the total quadratic shift. It is made of an intrinsic part
/// (`γ_w` for [`LossKind::CorrectedQuadratic`], zero otherwise) and the
/// penalty's non-convexity parameter `μ` when the model is paired with SCAD
/// or MCP.
#[derive(Debug, Clone)]
pub struct LossModel {
    kind: LossKind,
    dataset: Arc<Dataset>,
    gamma_w: f64,
    mu_shift: f64,
}

impl LossModel {
    /// Model for a convex penalty: the only shift is the intrinsic `γ_w` of
    /// the corrected loss.
    pub fn new(kind: LossKind, dataset: Arc<Dataset>, gamma_w: f64) -> Result<Self> {
        match kind {
            LossKind::CorrectedQuadratic => {
                if !(gamma_w > 0.0 && gamma_w.is_finite()) {
                    return Err(invalid("corrected quadratic loss requires gamma_w > 0"));
                }
            }
            _ => {
                if gamma_w != 0.0 {
                    return Err(invalid("gamma_w is only meaningful for the corrected loss"));
                }
            }
        }
        if kind == LossKind::Logistic && dataset.responses().iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(invalid("logistic loss requires labels in {-1, +1}"));
        }
        let mu_shift = if kind == LossKind::CorrectedQuadratic { gamma_w } else { 0.0 };
        Ok(LossModel { kind, dataset, gamma_w, mu_shift })
    }

    pub fn squared(dataset: Arc<Dataset>) -> Self {
        LossModel { kind: LossKind::SquaredError, dataset, gamma_w: 0.0, mu_shift: 0.0 }
    }

    /// Adds the penalty non-convexity `μ` to the shift, producing the `F_i`
    /// losses used with the convexified regularizer.
    pub fn with_penalty_shift(mut self, mu: f64) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(invalid(format!("penalty shift must be finite and >= 0, got {mu}")));
        }
        self.mu_shift = self.intrinsic_shift() + mu;
        Ok(self)
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn shared_dataset(&self) -> Arc<Dataset> {
        Arc::clone(&self.dataset)
    }

    pub fn n(&self) -> usize {
        self.dataset.n()
    }

    pub fn p(&self) -> usize {
        self.dataset.p()
    }

    pub fn gamma_w(&self) -> f64 {
        self.gamma_w
    }

    pub fn mu_shift(&self) -> f64 {
        self.mu_shift
    }

    /// Part of the shift that belongs to the loss itself.
    pub fn intrinsic_shift(&self) -> f64 {
        match self.kind {
            LossKind::CorrectedQuadratic => self.gamma_w,
            _ => 0.0,
        }
    }

    /// Part of the shift borrowed from a non-convex penalty.
    pub fn penalty_shift(&self) -> f64 {
        self.mu_shift - self.intrinsic_shift()
    }

    fn check_theta(&self, theta: &Array1<f64>) -> Result<()> {
        if theta.len() != self.p() {
            return Err(Error::DimensionMismatch { expected: self.p(), found: theta.len() });
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("theta"));
        }
        Ok(())
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            return Err(Error::IndexOutOfRange { index: i, n: self.n() });
        }
        Ok(())
    }

    /// Convex per-sample piece `h_i(u)` at the margin `u = x_iᵀθ`.
    pub fn sample_piece(&self, i: usize, u: f64) -> f64 {
        let y = self.dataset.responses[i];
        match self.kind {
            LossKind::SquaredError | LossKind::CorrectedQuadratic => 0.5 * (u - y) * (u - y),
            LossKind::Logistic => softplus(-y * u),
        }
    }

    /// `h_i'(u)`.
    pub fn sample_derivative(&self, i: usize, u: f64) -> f64 {
        let y = self.dataset.responses[i];
        match self.kind {
            LossKind::SquaredError | LossKind::CorrectedQuadratic => u - y,
            LossKind::Logistic => -y * sigmoid(-y * u),
        }
    }

    #[inline]
    pub(crate) fn margin(&self, i: usize, theta: &Array1<f64>) -> f64 {
        self.dataset.row(i).dot(theta)
    }

    /// `f(θ)`, or `F(θ) = f(θ) - (mu_shift/2)‖θ‖²` when shifted.
    pub fn loss_value(&self, theta: &Array1<f64>) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(self.value_unchecked(theta))
    }

    pub(crate) fn value_unchecked(&self, theta: &Array1<f64>) -> f64 {
        let margins = self.dataset.features.dot(theta);
        let sum: f64 = margins.iter().enumerate().map(|(i, &u)| self.sample_piece(i, u)).sum();
        sum / self.n() as f64 - 0.5 * self.mu_shift * theta.dot(theta)
    }

    /// `∇f_i(θ) - mu_shift·θ`.
    pub fn grad_sample(&self, i: usize, theta: &Array1<f64>) -> Result<Array1<f64>> {
        self.check_index(i)?;
        self.check_theta(theta)?;
        let s = self.sample_derivative(i, self.margin(i, theta));
        Ok(self.sample_gradient_from_scalar(i, s, theta))
    }

    /// Builds `s·x_i - mu_shift·θ`.
    pub(crate) fn sample_gradient_from_scalar(&self, i: usize, s: f64, theta: &Array1<f64>) -> Array1<f64> {
        let mut g = self.dataset.row(i).mapv(|x| s * x);
        if self.mu_shift != 0.0 {
            g.scaled_add(-self.mu_shift, theta);
        }
        g
    }

    /// Mean of the per-sample gradients.
    pub fn grad_full(&self, theta: &Array1<f64>) -> Result<Array1<f64>> {
        self.check_theta(theta)?;
        Ok(self.grad_full_unchecked(theta))
    }

    pub(crate) fn grad_full_unchecked(&self, theta: &Array1<f64>) -> Array1<f64> {
        let scalars = self.scalars_at(theta);
        let mut g = self.mean_of_scaled_rows(&scalars);
        if self.mu_shift != 0.0 {
            g.scaled_add(-self.mu_shift, theta);
        }
        g
    }

    /// `h_i'(x_iᵀθ)` for every sample.
    /// Uses the same per-row dot product as the stochastic solvers so full and
    /// sampled gradients agree bit for bit.
    pub(crate) fn scalars_at(&self, theta: &Array1<f64>) -> Array1<f64> {
        Array1::from_iter((0..self.n()).map(|i| self.sample_derivative(i, self.margin(i, theta))))
    }

    /// `(1/n) Σ s_i x_i`, accumulated row by row.
    pub(crate) fn mean_of_scaled_rows(&self, scalars: &Array1<f64>) -> Array1<f64> {
        let mut acc = Array1::zeros(self.p());
        for (row, &s) in self.dataset.features.rows().into_iter().zip(scalars.iter()) {
            acc.scaled_add(s, &row);
        }
        acc /= self.n() as f64;
        acc
    }

    /// Scalar `h_i'(x_iᵀθ)` such that `∇f_i(θ) = scalar·x_i` (before the shift).
    pub fn scalar_residual(&self, i: usize, theta: &Array1<f64>) -> Result<f64> {
        self.check_index(i)?;
        self.check_theta(theta)?;
        Ok(self.sample_derivative(i, self.margin(i, theta)))
    }

    /// Uniform per-sample smoothness constant `L = max_i L_i` of the convex pieces.
    pub fn smoothness_bound(&self) -> f64 {
        let max_sq = self
            .dataset
            .features
            .rows()
            .into_iter()
            .map(|r| r.dot(&r))
            .fold(0.0, f64::max);
        match self.kind {
            LossKind::Logistic => max_sq / 4.0,
            _ => max_sq,
        }
    }

    /// Power-iteration estimate of the Lipschitz constant of `∇f` (the full
    /// average, not the per-sample bound). Inflated by 1% to absorb the
    /// iteration's underestimate.
    pub fn full_smoothness_estimate(&self) -> f64 {
        let x = &self.dataset.features;
        let p = self.p();
        let mut v = Array1::from_elem(p, 1.0 / (p as f64).sqrt());
        // Break symmetry with a deterministic perturbation.
        for (j, vj) in v.iter_mut().enumerate() {
            *vj *= 1.0 + 0.01 * ((j % 7) as f64);
        }
        let mut estimate = 0.0;
        for _ in 0..300 {
            let xv = x.dot(&v);
            let w = x.t().dot(&xv) / self.n() as f64;
            let norm = w.dot(&w).sqrt();
            if norm == 0.0 {
                break;
            }
            let next = v.dot(&w) / v.dot(&v);
            v = w / norm;
            if (next - estimate).abs() <= 1e-10 * next {
                estimate = next;
                break;
            }
            estimate = next;
        }
        let scale = if self.kind == LossKind::Logistic { 0.25 } else { 1.0 };
        (estimate * scale * 1.01).max(f64::MIN_POSITIVE)
    }
}

/// `log(1 + exp(z))` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
