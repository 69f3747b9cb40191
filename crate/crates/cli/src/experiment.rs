//! Tuning, seeded reruns and CSV output.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ndarray::Array1;
use rayon::prelude::*;
use rsc_saga::baselines::{self, Baseline, BaselineConfig};
use rsc_saga::datagen::{self, LabelMode};
use rsc_saga::diagnostics::{self, Reference, ReferenceCache};
use rsc_saga::saga::{self, SagaConfig};
use rsc_saga::{Algorithm, LossKind, LossModel, Penalty, SolverTrace, TraceStatus};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, LabelName, LossName};
use crate::error::CliError;

/// Environment variable overriding the reference cache directory.
pub const CACHE_ENV: &str = "RSC_SAGA_CACHE";
pub const DEFAULT_CACHE_DIR: &str = ".rsc-saga-cache";

/// A loss model and penalty ready for the solvers.
#[derive(Debug, Clone)]
pub struct Problem {
    pub model: LossModel,
    pub penalty: Penalty,
    /// Coefficients that generated synthetic data.
    pub theta_star: Option<Array1<f64>>,
}

pub fn build_problem(cfg: &ExperimentConfig) -> Result<Problem, CliError> {
    let prob = &cfg.problem;
    let (dataset, theta_star, gamma_w, default_loss) = if let Some(s) = &prob.synthetic {
        let syn = datagen::generate(&s.spec())?;
        let ds = if s.normalize { datagen::normalize_columns(&syn.dataset)? } else { syn.dataset };
        let loss = if syn.gamma_w > 0.0 { LossName::Corrected } else { LossName::Squared };
        (ds, Some(syn.theta_star), syn.gamma_w, loss)
    } else if let Some(l) = &prob.libsvm {
        let labels = match l.labels {
            LabelName::Real => LabelMode::Real,
            LabelName::Signed => LabelMode::Signed,
        };
        let mut ds = datagen::load_libsvm(&l.path, l.num_features, labels)?;
        if let Some(d) = l.poly_degree {
            ds = datagen::poly_expand_grouped(&ds, d)?;
        }
        if l.normalize {
            ds = datagen::normalize_columns(&ds)?;
        }
        (ds, None, prob.gamma_w.unwrap_or(0.0), LossName::Squared)
    } else {
        return Err(CliError::Config("problem: no data source".into()));
    };
    let loss = prob.loss.unwrap_or(default_loss);
    let (kind, gamma_w) = match loss {
        LossName::Squared => (LossKind::SquaredError, 0.0),
        LossName::Logistic => (LossKind::Logistic, 0.0),
        LossName::Corrected => (LossKind::CorrectedQuadratic, gamma_w),
    };
    let penalty = cfg.penalty.build(dataset.groups())?;
    let mut model = LossModel::new(kind, Arc::new(dataset), gamma_w)
        .map_err(|e| CliError::Config(format!("problem.loss: {e}")))?;
    if penalty.is_nonconvex() {
        model = model.with_penalty_shift(penalty.mu())?;
    }
    Ok(Problem { model, penalty, theta_star })
}

/// Cache key: digest of the problem, penalty and budget (plus file contents
/// for file-backed data).
pub fn reference_key(cfg: &ExperimentConfig) -> Result<String, CliError> {
    #[derive(serde::Serialize)]
    struct KeyMaterial<'a> {
        problem: &'a crate::config::ProblemConfig,
        penalty: &'a crate::config::PenaltyConfig,
        reference_budget: usize,
    }
    let material = KeyMaterial { problem: &cfg.problem, penalty: &cfg.penalty, reference_budget: cfg.reference_budget };
    let mut hasher = Sha256::new();
    hasher.update(toml::to_string(&material).map_err(|e| CliError::Runtime(e.to_string()))?.as_bytes());
    if let Some(l) = &cfg.problem.libsvm {
        let bytes = fs::read(&l.path).map_err(|e| CliError::Io(format!("reading {}: {e}", l.path.display())))?;
        hasher.update(Sha256::digest(&bytes));
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn cache_dir_from_env() -> PathBuf {
    std::env::var_os(CACHE_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR))
}

/// Loads `θ̂` from the cache or computes and stores it.
pub fn cached_reference(cfg: &ExperimentConfig, problem: &Problem, cache_dir: &Path) -> Result<Reference, CliError> {
    let cache = ReferenceCache::new(cache_dir);
    let key = reference_key(cfg)?;
    let reference = cache.get_or_compute(&key, || {
        log::info!("computing reference solution for '{}'", cfg.name);
        diagnostics::reference_solution(&problem.model, &problem.penalty, cfg.reference_budget)
    })?;
    if reference.status != diagnostics::ReferenceStatus::Converged {
        log::warn!(
            "reference for '{}' did not reach the stationarity tolerance (residual {:e})",
            cfg.name,
            reference.residual
        );
    }
    Ok(reference)
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Write 0 in the seconds column.
    pub no_timing: bool,
    pub cache_dir: PathBuf,
    /// Replaces the configured output directory.
    pub output_dir: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { no_timing: false, cache_dir: cache_dir_from_env(), output_dir: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    /// `step`, `eta0` or `beta0`.
    pub parameter: &'static str,
    pub value: f64,
    pub seed: u64,
    pub final_pass: f64,
    pub final_objective: f64,
    pub final_gap: f64,
    pub status: TraceStatus,
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub reference: Reference,
    pub rows: Vec<SummaryRow>,
    /// Trace CSVs in write order, followed by the summary file.
    pub files: Vec<PathBuf>,
}

fn tuned_parameter(algorithm: Algorithm) -> &'static str {
    match algorithm {
        Algorithm::ProxSgd => "eta0",
        Algorithm::Rda => "beta0",
        _ => "step",
    }
}

/// Candidate values ordered from most to least aggressive, so that the
/// first minimum wins ties.
fn candidates(cfg: &ExperimentConfig, algorithm: Algorithm) -> Vec<f64> {
    let mut grid = if algorithm.uses_constant_step() { cfg.step_grid.clone() } else { cfg.decay_grid.clone() };
    grid.sort_by(|a, b| b.total_cmp(a));
    grid.dedup();
    if algorithm == Algorithm::Rda {
        // Larger β₀ means smaller steps.
        grid.reverse();
    }
    grid
}

fn run_one(cfg: &ExperimentConfig, problem: &Problem, algorithm: Algorithm, value: f64, seed: u64) -> Result<SolverTrace, CliError> {
    let (model, pen) = (&problem.model, &problem.penalty);
    let trace = match algorithm {
        Algorithm::Saga => {
            let mut sc = SagaConfig::new(value, cfg.passes, seed);
            sc.trace_every = cfg.trace_every;
            saga::run(model, pen, &sc)?
        }
        other => {
            let mut baseline = Baseline::from_tuned(other, value).expect("non-saga algorithm");
            if let Baseline::ProxSvrg { inner_m, .. } = &mut baseline {
                *inner_m = cfg.svrg_inner_m;
            }
            let mut bc = BaselineConfig::new(baseline, cfg.passes, seed);
            if other != Algorithm::ProxGd {
                bc.trace_every = cfg.trace_every;
            }
            baselines::run(model, pen, &bc)?
        }
    };
    Ok(trace)
}

/// Final gap used for tuning; diverged or non-finite runs rank last.
fn tuning_score(trace: &SolverTrace, g_hat: f64) -> f64 {
    match (trace.status, trace.final_objective()) {
        (TraceStatus::Diverged, _) | (_, None) => f64::INFINITY,
        (_, Some(v)) if !v.is_finite() => f64::INFINITY,
        (_, Some(v)) => v - g_hat,
    }
}

/// Index of the smallest score; earlier entries win ties. `None` if all are infinite.
pub fn select_best(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if s.is_finite() && best.is_none_or(|b| s < scores[b]) {
            best = Some(i);
        }
    }
    best
}

/// Grid search on the first seed; returns the chosen value and its trace.
pub fn tune(cfg: &ExperimentConfig, problem: &Problem, algorithm: Algorithm, g_hat: f64) -> Result<(f64, SolverTrace), CliError> {
    let grid = candidates(cfg, algorithm);
    let seed = cfg.seeds[0];
    let traces: Vec<SolverTrace> = grid
        .par_iter()
        .map(|&v| run_one(cfg, problem, algorithm, v, seed))
        .collect::<Result<_, _>>()?;
    let scores: Vec<f64> = traces.iter().map(|t| tuning_score(t, g_hat)).collect();
    for (v, s) in grid.iter().zip(&scores) {
        log::debug!("{algorithm} {}={v:e}: final gap {s:e}", tuned_parameter(algorithm));
    }
    let best = select_best(&scores)
        .ok_or_else(|| CliError::Runtime(format!("{algorithm}: every grid value diverged")))?;
    let trace = traces.into_iter().nth(best).expect("index in range");
    Ok((grid[best], trace))
}

pub fn zero_timing(trace: &mut SolverTrace) {
    trace.records.iter_mut().for_each(|r| r.seconds = 0.0);
}

/// Writes `pass,seconds,objective[,gap]` with 17 significant digits.
pub fn emit_csv(trace: &SolverTrace, g_hat: Option<f64>, path: &Path) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("writing {}: {e}", path.display()));
    let mut out = BufWriter::new(fs::File::create(path).map_err(io)?);
    let gaps = g_hat.map(|g| diagnostics::gap_trace(trace, g));
    let header = if gaps.is_some() { "pass,seconds,objective,gap" } else { "pass,seconds,objective" };
    writeln!(out, "{header}").map_err(io)?;
    for (k, r) in trace.records.iter().enumerate() {
        write!(out, "{:.16e},{:.16e},{:.16e}", r.pass, r.seconds, r.objective).map_err(io)?;
        if let Some(g) = &gaps {
            write!(out, ",{:.16e}", g[k].1).map_err(io)?;
        }
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}

fn write_summary(rows: &[SummaryRow], reference: &Reference, path: &Path) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("writing {}: {e}", path.display()));
    let mut out = BufWriter::new(fs::File::create(path).map_err(io)?);
    writeln!(out, "algorithm,parameter,value,seed,final_pass,final_objective,final_gap,status,reference_objective")
        .map_err(io)?;
    for r in rows {
        writeln!(
            out,
            "{},{},{:.16e},{},{:.16e},{:.16e},{:.16e},{},{:.16e}",
            r.algorithm,
            r.parameter,
            r.value,
            r.seed,
            r.final_pass,
            r.final_objective,
            r.final_gap,
            r.status.name(),
            reference.objective
        )
        .map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Tunes every configured algorithm on the first seed, reruns the chosen
/// value across all seeds and writes `<algorithm>-seed<seed>.csv` per run
/// plus `summary.csv`.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Summary, CliError> {
    cfg.validate()?;
    let algorithms = cfg.parsed_algorithms()?;
    let out_dir = opts.output_dir.clone().unwrap_or_else(|| cfg.output_dir.clone());
    fs::create_dir_all(&out_dir).map_err(|e| CliError::Io(format!("creating {}: {e}", out_dir.display())))?;

    let problem = build_problem(cfg)?;
    let reference = cached_reference(cfg, &problem, &opts.cache_dir)?;
    let g_hat = reference.objective;

    let mut rows = Vec::new();
    let mut files = Vec::new();
    for &algorithm in &algorithms {
        let (value, first) = tune(cfg, &problem, algorithm, g_hat)?;
        log::info!("{algorithm}: chose {}={value:e}", tuned_parameter(algorithm));
        let rest: Vec<SolverTrace> = cfg.seeds[1..]
            .par_iter()
            .map(|&seed| run_one(cfg, &problem, algorithm, value, seed))
            .collect::<Result<_, _>>()?;
        for mut trace in std::iter::once(first).chain(rest) {
            if opts.no_timing {
                zero_timing(&mut trace);
            }
            let path = out_dir.join(format!("{}-seed{}.csv", algorithm.name(), trace.seed));
            emit_csv(&trace, Some(g_hat), &path)?;
            files.push(path);
            let last = trace.records.last().copied();
            let (final_pass, final_objective) = last.map_or((0.0, f64::NAN), |r| (r.pass, r.objective));
            rows.push(SummaryRow {
                algorithm,
                parameter: tuned_parameter(algorithm),
                value,
                seed: trace.seed,
                final_pass,
                final_objective,
                final_gap: diagnostics::floor_gap(final_objective - g_hat),
                status: trace.status,
            });
        }
    }
    let summary_path = out_dir.join("summary.csv");
    write_summary(&rows, &reference, &summary_path)?;
    files.push(summary_path);
    Ok(Summary { reference, rows, files })
}
