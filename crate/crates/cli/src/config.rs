//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use rsc_saga::datagen::{Family, SyntheticSpec};
use rsc_saga::{Algorithm, Groups, Penalty};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// `{2, 2/2, …, 2/2¹²}`.
pub fn default_step_grid() -> Vec<f64> {
    (0..=12).map(|k| 2.0 / f64::from(1u32 << k)).collect()
}

/// `{10⁻³, …, 10²}` for `η₀` (Prox-SGD) and `β₀` (RDA).
pub fn default_decay_grid() -> Vec<f64> {
    vec![1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2]
}

fn default_reference_budget() -> usize {
    20_000
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Solver names as printed by `Algorithm::name`.
    pub algorithms: Vec<String>,
    pub passes: usize,
    pub seeds: Vec<u64>,
    #[serde(default = "default_step_grid")]
    pub step_grid: Vec<f64>,
    #[serde(default = "default_decay_grid")]
    pub decay_grid: Vec<f64>,
    /// Steps per trace record for stochastic solvers; defaults to n.
    #[serde(default)]
    pub trace_every: Option<usize>,
    /// SVRG inner-loop length; defaults to 2n.
    #[serde(default)]
    pub svrg_inner_m: Option<usize>,
    #[serde(default = "default_reference_budget")]
    pub reference_budget: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub problem: ProblemConfig,
    pub penalty: PenaltyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default)]
    pub synthetic: Option<SyntheticConfig>,
    #[serde(default)]
    pub libsvm: Option<LibsvmConfig>,
    /// Defaults to `corrected` for corrected-lasso data and `squared` otherwise.
    #[serde(default)]
    pub loss: Option<LossName>,
    /// Feature-noise level for the corrected loss on file data.
    #[serde(default)]
    pub gamma_w: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossName {
    Squared,
    Logistic,
    Corrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyName {
    Lasso,
    GroupLasso,
    CorrectedLasso,
    Scad,
}

impl From<FamilyName> for Family {
    fn from(f: FamilyName) -> Family {
        match f {
            FamilyName::Lasso => Family::Lasso,
            FamilyName::GroupLasso => Family::GroupLasso,
            FamilyName::CorrectedLasso => Family::CorrectedLasso,
            FamilyName::Scad => Family::ScadRegression,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub family: FamilyName,
    pub n: usize,
    pub p: usize,
    /// Non-zero coefficients, or active groups for group-lasso.
    pub support: usize,
    #[serde(default = "one_usize")]
    pub group_size: usize,
    #[serde(default)]
    pub equicorrelation: f64,
    #[serde(default = "one")]
    pub noise_std: f64,
    #[serde(default)]
    pub gamma_w: f64,
    #[serde(default)]
    pub seed: u64,
    /// Rescale columns so that `‖X_j‖₂/√n ≤ 1`.
    #[serde(default)]
    pub normalize: bool,
}

impl SyntheticConfig {
    pub fn spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            family: self.family.into(),
            n: self.n,
            p: self.p,
            support: self.support,
            group_size: self.group_size,
            equicorrelation: self.equicorrelation,
            noise_std: self.noise_std,
            gamma_w: self.gamma_w,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelName {
    Real,
    Signed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LibsvmConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub num_features: Option<usize>,
    pub labels: LabelName,
    #[serde(default)]
    pub normalize: bool,
    /// Expand every feature into a group `(x, x², …, x^d)`.
    #[serde(default)]
    pub poly_degree: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyName {
    L1,
    GroupL2,
    Scad,
    Mcp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyConfig {
    pub kind: PenaltyName,
    pub lambda: f64,
    #[serde(default)]
    pub zeta: Option<f64>,
    #[serde(default)]
    pub b: Option<f64>,
    /// Feasible-set radius; unconstrained when absent.
    #[serde(default)]
    pub rho: Option<f64>,
}

impl PenaltyConfig {
    pub fn build(&self, groups: Option<&Groups>) -> Result<Penalty, CliError> {
        let field = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| CliError::Config(format!("penalty.{name} is required for this penalty kind")))
        };
        let pen = match self.kind {
            PenaltyName::L1 => Penalty::l1(self.lambda),
            PenaltyName::GroupL2 => {
                let groups = groups
                    .cloned()
                    .ok_or_else(|| CliError::Config("penalty.kind = group-l2 needs a dataset with groups".into()))?;
                Penalty::group_l2(self.lambda, groups)
            }
            PenaltyName::Scad => Penalty::scad(self.lambda, field("zeta", self.zeta)?),
            PenaltyName::Mcp => Penalty::mcp(self.lambda, field("b", self.b)?),
        }
        .map_err(|e| CliError::Config(format!("penalty: {e}")))?;
        match self.rho {
            Some(rho) => pen.with_rho(rho).map_err(|e| CliError::Config(format!("penalty.rho: {e}"))),
            None => Ok(pen),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    pub fn parsed_algorithms(&self) -> Result<Vec<Algorithm>, CliError> {
        self.algorithms
            .iter()
            .enumerate()
            .map(|(i, a)| a.parse().map_err(|_| CliError::Config(format!("algorithms[{i}]: unknown algorithm '{a}'"))))
            .collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let err = |m: String| Err(CliError::Config(m));
        if self.algorithms.is_empty() {
            return err("algorithms: must not be empty".into());
        }
        let algos = self.parsed_algorithms()?;
        for (i, a) in algos.iter().enumerate() {
            if algos[..i].contains(a) {
                return err(format!("algorithms[{i}]: '{a}' listed twice"));
            }
        }
        if self.seeds.is_empty() {
            return err("seeds: must not be empty".into());
        }
        if self.passes == 0 {
            return err("passes: must be >= 1".into());
        }
        if self.reference_budget == 0 {
            return err("reference_budget: must be >= 1".into());
        }
        if self.trace_every == Some(0) {
            return err("trace_every: must be >= 1".into());
        }
        if self.svrg_inner_m == Some(0) {
            return err("svrg_inner_m: must be >= 1".into());
        }
        for (name, grid) in [("step_grid", &self.step_grid), ("decay_grid", &self.decay_grid)] {
            if grid.is_empty() {
                return err(format!("{name}: must not be empty"));
            }
            if let Some(i) = grid.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
                return err(format!("{name}[{i}]: must be finite and > 0"));
            }
        }
        match (&self.problem.synthetic, &self.problem.libsvm) {
            (Some(_), Some(_)) | (None, None) => {
                return err("problem: exactly one of problem.synthetic or problem.libsvm is required".into())
            }
            (Some(s), None) => {
                s.spec().validate().map_err(|e| CliError::Config(format!("problem.synthetic: {e}")))?;
                if self.problem.gamma_w.is_some() {
                    return err("problem.gamma_w: set problem.synthetic.gamma_w for synthetic data".into());
                }
            }
            (None, Some(l)) => {
                if l.poly_degree == Some(0) {
                    return err("problem.libsvm.poly_degree: must be >= 1".into());
                }
                if self.problem.loss == Some(LossName::Corrected) && self.problem.gamma_w.is_none() {
                    return err("problem.gamma_w: required for the corrected loss".into());
                }
            }
        }
        if !(self.penalty.lambda > 0.0 && self.penalty.lambda.is_finite()) {
            return err("penalty.lambda: must be finite and > 0".into());
        }
        Ok(())
    }
}
