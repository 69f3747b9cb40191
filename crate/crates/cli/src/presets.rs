//! Named experiment configurations for the synthetic figures and the real datasets.
//!
//! Every synthetic preset has a `-desk` variant with (n, p, support) shrunk
//! roughly fivefold so that a full run finishes in seconds.

use std::path::PathBuf;

use crate::config::{
    default_decay_grid, default_step_grid, ExperimentConfig, FamilyName, LabelName, LibsvmConfig, LossName,
    PenaltyConfig, PenaltyName, ProblemConfig, SyntheticConfig,
};
use crate::error::CliError;

const ALL_ALGORITHMS: [&str; 6] = ["saga", "prox-svrg", "prox-sag", "prox-gd", "prox-sgd", "rda"];

struct Synth {
    name: &'static str,
    family: FamilyName,
    n: usize,
    p: usize,
    support: usize,
    group_size: usize,
    b: f64,
    gamma_w: f64,
    penalty: PenaltyName,
    lambda: f64,
    zeta: Option<f64>,
}

const fn lasso(name: &'static str, n: usize, p: usize, r: usize, b: f64) -> Synth {
    Synth {
        name,
        family: FamilyName::Lasso,
        n,
        p,
        support: r,
        group_size: 1,
        b,
        gamma_w: 0.0,
        penalty: PenaltyName::L1,
        lambda: 0.05,
        zeta: None,
    }
}

const fn group(name: &'static str, n: usize, p: usize, m: usize, s: usize, b: f64) -> Synth {
    Synth {
        name,
        family: FamilyName::GroupLasso,
        n,
        p,
        support: s,
        group_size: m,
        b,
        gamma_w: 0.0,
        penalty: PenaltyName::GroupL2,
        lambda: 0.05,
        zeta: None,
    }
}

const fn corrected(name: &'static str, n: usize, p: usize, r: usize, gamma_w: f64) -> Synth {
    Synth {
        name,
        family: FamilyName::CorrectedLasso,
        n,
        p,
        support: r,
        group_size: 1,
        b: 0.0,
        gamma_w,
        penalty: PenaltyName::L1,
        lambda: 0.05,
        zeta: None,
    }
}

const fn scad(name: &'static str, n: usize, p: usize, r: usize, zeta: f64) -> Synth {
    Synth {
        name,
        family: FamilyName::Scad,
        n,
        p,
        support: r,
        group_size: 1,
        b: 0.0,
        gamma_w: 0.0,
        penalty: PenaltyName::Scad,
        lambda: 0.05,
        zeta: Some(zeta),
    }
}

const SYNTHETIC: [Synth; 24] = [
    lasso("lasso-fig1a", 2500, 5000, 50, 0.0),
    lasso("lasso-fig1b", 2500, 5000, 100, 0.0),
    lasso("lasso-fig1c", 2500, 5000, 50, 0.1),
    lasso("lasso-fig1d", 2500, 5000, 100, 0.4),
    lasso("lasso-fig1a-desk", 500, 1000, 25, 0.0),
    lasso("lasso-fig1b-desk", 500, 1000, 50, 0.0),
    lasso("lasso-fig1c-desk", 500, 1000, 25, 0.1),
    lasso("lasso-fig1d-desk", 500, 1000, 50, 0.4),
    group("group-lasso-fig2a", 2500, 5000, 10, 10, 0.0),
    group("group-lasso-fig2b", 2500, 5000, 20, 20, 0.0),
    group("group-lasso-fig2c", 2500, 5000, 10, 10, 0.1),
    group("group-lasso-fig2d", 2500, 5000, 20, 20, 0.4),
    group("group-lasso-fig2a-desk", 500, 1000, 10, 2, 0.0),
    group("group-lasso-fig2b-desk", 500, 1000, 20, 4, 0.0),
    group("group-lasso-fig2c-desk", 500, 1000, 10, 2, 0.1),
    group("group-lasso-fig2d-desk", 500, 1000, 20, 4, 0.4),
    corrected("corrected-lasso-fig3a", 2500, 3000, 50, 0.05),
    corrected("corrected-lasso-fig3b", 2500, 5000, 100, 0.1),
    corrected("corrected-lasso-fig3a-desk", 600, 500, 15, 0.05),
    corrected("corrected-lasso-fig3b-desk", 600, 1000, 30, 0.1),
    scad("scad-fig4a", 3000, 2500, 30, 4.5),
    scad("scad-fig4b", 2500, 5000, 50, 3.7),
    scad("scad-fig4a-desk", 600, 500, 15, 4.5),
    scad("scad-fig4b-desk", 500, 1000, 10, 3.7),
];

struct Real {
    name: &'static str,
    file: &'static str,
    labels: LabelName,
    loss: LossName,
    penalty: PenaltyName,
    lambda: f64,
    zeta: Option<f64>,
    poly_degree: Option<usize>,
    passes: usize,
}

const REAL: [Real; 5] = [
    Real {
        name: "rcv1",
        file: "data/rcv1_train.binary",
        labels: LabelName::Signed,
        loss: LossName::Logistic,
        penalty: PenaltyName::L1,
        lambda: 2e-5,
        zeta: None,
        poly_degree: None,
        passes: 1000,
    },
    Real {
        name: "sido0",
        file: "data/sido0_train.libsvm",
        labels: LabelName::Signed,
        loss: LossName::Logistic,
        penalty: PenaltyName::L1,
        lambda: 1e-4,
        zeta: None,
        poly_degree: None,
        passes: 1000,
    },
    Real {
        name: "ijcnn1-lasso",
        file: "data/ijcnn1",
        labels: LabelName::Real,
        loss: LossName::Squared,
        penalty: PenaltyName::L1,
        lambda: 0.02,
        zeta: None,
        poly_degree: None,
        passes: 200,
    },
    Real {
        name: "ijcnn1-scad",
        file: "data/ijcnn1",
        labels: LabelName::Real,
        loss: LossName::Squared,
        penalty: PenaltyName::Scad,
        lambda: 0.02,
        zeta: Some(5.0),
        poly_degree: None,
        passes: 200,
    },
    Real {
        name: "boston-group-lasso",
        file: "data/housing_scale",
        labels: LabelName::Real,
        loss: LossName::Squared,
        penalty: PenaltyName::GroupL2,
        lambda: 0.1,
        zeta: None,
        poly_degree: Some(3),
        passes: 200,
    },
];

pub fn preset_names() -> Vec<&'static str> {
    SYNTHETIC.iter().map(|s| s.name).chain(REAL.iter().map(|r| r.name)).collect()
}

fn base(name: &str, passes: usize, seeds: Vec<u64>, problem: ProblemConfig, penalty: PenaltyConfig) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        algorithms: ALL_ALGORITHMS.iter().map(|a| a.to_string()).collect(),
        passes,
        seeds,
        step_grid: default_step_grid(),
        decay_grid: default_decay_grid(),
        trace_every: None,
        svrg_inner_m: None,
        reference_budget: 20_000,
        output_dir: PathBuf::from("results").join(name),
        problem,
        penalty,
    }
}

pub fn preset(name: &str) -> Result<ExperimentConfig, CliError> {
    if let Some(s) = SYNTHETIC.iter().find(|s| s.name == name) {
        let desk = name.ends_with("-desk");
        let problem = ProblemConfig {
            synthetic: Some(SyntheticConfig {
                family: s.family,
                n: s.n,
                p: s.p,
                support: s.support,
                group_size: s.group_size,
                equicorrelation: s.b,
                noise_std: 1.0,
                gamma_w: s.gamma_w,
                seed: 0,
                normalize: false,
            }),
            libsvm: None,
            loss: None,
            gamma_w: None,
        };
        let penalty = PenaltyConfig { kind: s.penalty, lambda: s.lambda, zeta: s.zeta, b: None, rho: None };
        let seeds = if desk { (0..5).collect() } else { vec![0] };
        return Ok(base(name, 200, seeds, problem, penalty));
    }
    if let Some(r) = REAL.iter().find(|r| r.name == name) {
        let problem = ProblemConfig {
            synthetic: None,
            libsvm: Some(LibsvmConfig {
                path: PathBuf::from(r.file),
                num_features: None,
                labels: r.labels,
                normalize: true,
                poly_degree: r.poly_degree,
            }),
            loss: Some(r.loss),
            gamma_w: None,
        };
        let penalty = PenaltyConfig { kind: r.penalty, lambda: r.lambda, zeta: r.zeta, b: None, rho: None };
        return Ok(base(name, r.passes, vec![0], problem, penalty));
    }
    Err(CliError::Config(format!("unknown preset '{name}' (see list-presets)")))
}
