//! Synthetic designs and real-data loading/preprocessing.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::model::{Dataset, Groups};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Equicorrelated Gaussian design, `±1` coefficients.
    Lasso,
    /// Equicorrelated Gaussian design, whole groups active with `U[-1, 1]` coefficients.
    GroupLasso,
    /// `N(0, I)` design observed through additive noise `z = x + w`.
    CorrectedLasso,
    /// `N(0, 2I)` design, `±1` coefficients.
    ScadRegression,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Lasso => "lasso",
            Family::GroupLasso => "group-lasso",
            Family::CorrectedLasso => "corrected-lasso",
            Family::ScadRegression => "scad",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub family: Family,
    pub n: usize,
    pub p: usize,
    /// Number of non-zero coefficients, or of active groups for `GroupLasso`.
    pub support: usize,
    /// Group size (`GroupLasso` only); groups are contiguous blocks.
    pub group_size: usize,
    /// Off-diagonal covariance `b ∈ [0, 1)`.
    pub equicorrelation: f64,
    pub noise_std: f64,
    /// Feature-noise variance (`CorrectedLasso` only).
    pub gamma_w: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(family: Family, n: usize, p: usize, support: usize) -> Self {
        SyntheticSpec {
            family,
            n,
            p,
            support,
            group_size: 1,
            equicorrelation: 0.0,
            noise_std: 1.0,
            gamma_w: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(invalid("n and p must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.equicorrelation) {
            return Err(invalid(format!("equicorrelation must lie in [0, 1), got {}", self.equicorrelation)));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(invalid(format!("noise_std must be finite and >= 0, got {}", self.noise_std)));
        }
        if !(self.gamma_w >= 0.0 && self.gamma_w.is_finite()) {
            return Err(invalid(format!("gamma_w must be finite and >= 0, got {}", self.gamma_w)));
        }
        let independent = matches!(self.family, Family::CorrectedLasso | Family::ScadRegression);
        if independent && self.equicorrelation != 0.0 {
            return Err(invalid(format!("{} designs have identity covariance; equicorrelation must be 0", self.family.name())));
        }
        if self.family != Family::CorrectedLasso && self.gamma_w != 0.0 {
            return Err(invalid("gamma_w only applies to corrected-lasso"));
        }
        if self.family == Family::GroupLasso {
            if self.group_size == 0 || self.p % self.group_size != 0 {
                return Err(invalid(format!("group size {} must divide p = {}", self.group_size, self.p)));
            }
            let groups = self.p / self.group_size;
            if self.support > groups {
                return Err(invalid(format!("{} active groups requested but only {groups} exist", self.support)));
            }
        } else if self.support > self.p {
            return Err(invalid(format!("support {} exceeds p = {}", self.support, self.p)));
        }
        Ok(())
    }
}

/// A generated dataset together with the coefficients that produced it.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub dataset: Dataset,
    pub theta_star: Array1<f64>,
    /// Feature-noise variance of the observed design (0 unless corrected).
    pub gamma_w: f64,
}

/// Generates the design described by `spec`.
pub fn generate(spec: &SyntheticSpec) -> Result<Synthetic> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (theta_star, groups) = match spec.family {
        Family::GroupLasso => {
            let groups = Groups::contiguous(spec.p, spec.group_size)?;
            let mut order: Vec<usize> = (0..groups.len()).collect();
            order.shuffle(&mut rng);
            let mut theta = Array1::zeros(spec.p);
            let blocks: Vec<&[usize]> = groups.iter().collect();
            for &g in &order[..spec.support] {
                for &j in blocks[g] {
                    theta[j] = rng.random_range(-1.0..=1.0);
                }
            }
            (theta, Some(groups))
        }
        _ => {
            let mut order: Vec<usize> = (0..spec.p).collect();
            order.shuffle(&mut rng);
            let mut theta = Array1::zeros(spec.p);
            for &j in &order[..spec.support] {
                theta[j] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            }
            (theta, None)
        }
    };

    let mut latent = Array2::<f64>::zeros((spec.n, spec.p));
    let b = spec.equicorrelation;
    let (own, shared) = ((1.0 - b).sqrt(), b.sqrt());
    let scale = if spec.family == Family::ScadRegression { 2f64.sqrt() } else { 1.0 };
    for mut row in latent.rows_mut() {
        row.iter_mut().for_each(|v| *v = rng.sample::<f64, _>(StandardNormal));
        if b > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            row.mapv_inplace(|g| own * g + shared * z);
        }
        if scale != 1.0 {
            row.mapv_inplace(|g| scale * g);
        }
    }

    let mut y = latent.dot(&theta_star);
    if spec.noise_std > 0.0 {
        y.iter_mut().for_each(|v| *v += spec.noise_std * rng.sample::<f64, _>(StandardNormal));
    }

    let observed = if spec.gamma_w > 0.0 {
        let sd = spec.gamma_w.sqrt();
        latent.mapv(|x| x + sd * rng.sample::<f64, _>(StandardNormal))
    } else {
        latent
    };

    let mut dataset = Dataset::new(observed, y)?;
    if let Some(groups) = groups {
        dataset = dataset.with_groups(groups)?;
    }
    Ok(Synthetic { dataset, theta_star, gamma_w: spec.gamma_w })
}

fn expect_family(spec: &SyntheticSpec, family: Family) -> Result<()> {
    if spec.family == family {
        Ok(())
    } else {
        Err(invalid(format!("expected a {} spec, got {}", family.name(), spec.family.name())))
    }
}

pub fn gen_lasso(spec: &SyntheticSpec) -> Result<Synthetic> {
    expect_family(spec, Family::Lasso)?;
    generate(spec)
}

pub fn gen_group_lasso(spec: &SyntheticSpec) -> Result<Synthetic> {
    expect_family(spec, Family::GroupLasso)?;
    generate(spec)
}

pub fn gen_corrected_lasso(spec: &SyntheticSpec) -> Result<Synthetic> {
    expect_family(spec, Family::CorrectedLasso)?;
    generate(spec)
}

pub fn gen_scad(spec: &SyntheticSpec) -> Result<Synthetic> {
    expect_family(spec, Family::ScadRegression)?;
    generate(spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    /// Keep labels as real responses.
    Real,
    /// Positive labels become `+1`, everything else `-1`.
    Signed,
}

/// Reads a libsvm text file (`label idx:val …`, 1-based indices) into a
/// dense dataset. `num_features` defaults to the largest index seen.
pub fn load_libsvm(path: &Path, num_features: Option<usize>, labels: LabelMode) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    parse_libsvm(&text, num_features, labels)
}

pub fn parse_libsvm(text: &str, num_features: Option<usize>, labels: LabelMode) -> Result<Dataset> {
    let mut ys = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_index = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse { line: lineno + 1, message };
        let mut tokens = line.split_whitespace();
        let label_token = tokens.next().unwrap_or_default();
        let label: f64 = label_token
            .parse()
            .map_err(|_| err(format!("bad label '{label_token}'")))?;
        let mut entries = Vec::new();
        for token in tokens {
            let (idx, val) = token
                .split_once(':')
                .ok_or_else(|| err(format!("expected idx:value, got '{token}'")))?;
            let idx: usize = idx.parse().map_err(|_| err(format!("bad index '{idx}'")))?;
            if idx == 0 {
                return Err(err("indices are 1-based".into()));
            }
            if num_features.is_some_and(|p| idx > p) {
                return Err(err(format!("index {idx} exceeds {} features", num_features.unwrap_or(0))));
            }
            let val: f64 = val.parse().map_err(|_| err(format!("bad value '{val}'")))?;
            if !val.is_finite() || !label.is_finite() {
                return Err(err("non-finite value".into()));
            }
            max_index = max_index.max(idx);
            entries.push((idx - 1, val));
        }
        ys.push(match labels {
            LabelMode::Real => label,
            LabelMode::Signed if label > 0.0 => 1.0,
            LabelMode::Signed => -1.0,
        });
        rows.push(entries);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let p = num_features.unwrap_or(max_index).max(1);
    let mut x = Array2::zeros((rows.len(), p));
    for (i, entries) in rows.iter().enumerate() {
        for &(j, v) in entries {
            x[[i, j]] = v;
        }
    }
    Dataset::new(x, Array1::from(ys))
}

/// Writes non-zero entries in libsvm format; values use the shortest
/// representation that parses back exactly.
pub fn write_libsvm(ds: &Dataset, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for (row, y) in ds.features().rows().into_iter().zip(ds.responses()) {
        write!(out, "{y}")?;
        for (j, v) in row.iter().enumerate().filter(|(_, v)| **v != 0.0) {
            write!(out, " {}:{v}", j + 1)?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Debug dump with header `row,col,value`: every non-zero feature entry
/// (0-based indices) followed by the responses with `col = y`.
pub fn write_csv_dump(ds: &Dataset, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "row,col,value")?;
    for (i, row) in ds.features().rows().into_iter().enumerate() {
        for (j, v) in row.iter().enumerate().filter(|(_, v)| **v != 0.0) {
            writeln!(out, "{i},{j},{v}")?;
        }
    }
    for (i, y) in ds.responses().iter().enumerate() {
        writeln!(out, "{i},y,{y}")?;
    }
    out.flush()?;
    Ok(())
}

/// Scales each column by `min(1, √n/‖X_j‖₂)` so that `‖X_j‖₂/√n ≤ 1`.
pub fn normalize_columns(ds: &Dataset) -> Result<Dataset> {
    let mut x = ds.features().clone();
    let root_n = (ds.n() as f64).sqrt();
    for mut col in x.columns_mut() {
        let norm = col.dot(&col).sqrt();
        if norm > root_n {
            let s = root_n / norm;
            col.mapv_inplace(|v| v * s);
        }
    }
    let mut out = Dataset::new(x, ds.responses().clone())?;
    if let Some(g) = ds.groups() {
        out = out.with_groups(g.clone())?;
    }
    out.mark_column_normalized()
}

/// Replaces feature `j` by the block `(x_j, x_j², …, x_j^degree)` and records
/// each block as a group.
pub fn poly_expand_grouped(ds: &Dataset, degree: usize) -> Result<Dataset> {
    if degree == 0 {
        return Err(invalid("polynomial degree must be >= 1"));
    }
    let p = ds.p();
    let x = ds.features();
    let expanded = Array2::from_shape_fn((ds.n(), p * degree), |(i, c)| {
        let (j, power) = (c / degree, c % degree + 1);
        x[[i, j]].powi(power as i32)
    });
    let groups = Groups::contiguous(p * degree, degree)?;
    Dataset::new(expanded, ds.responses().clone())?.with_groups(groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn moments(x: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
        let n = x.nrows() as f64;
        let mean = x.sum_axis(ndarray::Axis(0)) / n;
        let centered = x - &mean;
        let cov = centered.t().dot(&centered) / (n - 1.0);
        (mean, cov)
    }

    #[test]
    fn independent_design_moments() {
        let mut spec = SyntheticSpec::new(Family::Lasso, 100_000, 4, 0);
        spec.seed = 3;
        let (_, cov) = moments(generate(&spec).unwrap().dataset.features());
        for i in 0..4 {
            for j in 0..4 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((cov[[i, j]] - target).abs() <= 0.02, "cov[{i},{j}] = {}", cov[[i, j]]);
            }
        }
    }

    #[test]
    fn equicorrelated_design_moments() {
        let mut spec = SyntheticSpec::new(Family::Lasso, 100_000, 3, 0);
        spec.equicorrelation = 0.4;
        let (_, cov) = moments(generate(&spec).unwrap().dataset.features());
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.4 };
                assert!((cov[[i, j]] - target).abs() <= 0.02);
            }
        }
    }

    #[test]
    fn corrected_and_scad_variances() {
        let mut spec = SyntheticSpec::new(Family::CorrectedLasso, 100_000, 3, 1);
        spec.gamma_w = 0.1;
        let (_, cov) = moments(generate(&spec).unwrap().dataset.features());
        for j in 0..3 {
            assert!((cov[[j, j]] - 1.1).abs() <= 0.03);
        }
        let spec = SyntheticSpec::new(Family::ScadRegression, 100_000, 3, 1);
        let (_, cov) = moments(generate(&spec).unwrap().dataset.features());
        for j in 0..3 {
            assert!((cov[[j, j]] - 2.0).abs() <= 0.05);
        }
    }

    #[test]
    fn zero_feature_noise_reduces_to_independent_lasso() {
        let mut lasso = SyntheticSpec::new(Family::Lasso, 50, 8, 3);
        lasso.seed = 11;
        let mut corrected = lasso.clone();
        corrected.family = Family::CorrectedLasso;
        let a = generate(&lasso).unwrap();
        let b = generate(&corrected).unwrap();
        assert_eq!(a.dataset.features(), b.dataset.features());
        assert_eq!(a.dataset.responses(), b.dataset.responses());
        assert_eq!(a.theta_star, b.theta_star);
    }

    #[test]
    fn null_model_and_support() {
        let mut spec = SyntheticSpec::new(Family::Lasso, 20, 10, 0);
        spec.noise_std = 0.0;
        let s = generate(&spec).unwrap();
        assert!(s.dataset.responses().iter().all(|&v| v == 0.0));

        let spec = SyntheticSpec::new(Family::Lasso, 20, 30, 7);
        let s = generate(&spec).unwrap();
        assert_eq!(s.theta_star.iter().filter(|v| **v != 0.0).count(), 7);
        assert!(s.theta_star.iter().all(|v| [0.0, 1.0, -1.0].contains(v)));
        let mut noiseless = spec.clone();
        noiseless.noise_std = 0.0;
        let s = generate(&noiseless).unwrap();
        let fitted = s.dataset.features().dot(&s.theta_star);
        assert_eq!(&fitted, s.dataset.responses());
    }

    #[test]
    fn group_design() {
        let mut spec = SyntheticSpec::new(Family::GroupLasso, 30, 40, 3);
        spec.group_size = 10;
        let s = generate(&spec).unwrap();
        let groups = s.dataset.groups().unwrap();
        assert_eq!(groups.len(), 4);
        assert!(groups.covers_all(40));
        let active: Vec<bool> = groups.iter().map(|g| g.iter().any(|&j| s.theta_star[j] != 0.0)).collect();
        assert_eq!(active.iter().filter(|a| **a).count(), 3);
        assert_eq!(s.theta_star.iter().filter(|v| **v != 0.0).count(), 30);
        assert!(s.theta_star.iter().all(|v| v.abs() <= 1.0));

        spec.support = 0;
        assert!(generate(&spec).unwrap().theta_star.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn determinism_and_validation() {
        let mut spec = SyntheticSpec::new(Family::Lasso, 40, 12, 4);
        spec.equicorrelation = 0.1;
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.dataset.features(), b.dataset.features());
        assert_eq!(a.dataset.responses(), b.dataset.responses());
        spec.seed = 1;
        assert_ne!(generate(&spec).unwrap().dataset.features(), a.dataset.features());

        assert!(generate(&SyntheticSpec::new(Family::Lasso, 10, 5, 6)).is_err());
        assert!(generate(&SyntheticSpec::new(Family::Lasso, 0, 5, 1)).is_err());
        let mut bad = SyntheticSpec::new(Family::GroupLasso, 10, 12, 1);
        bad.group_size = 5;
        assert!(generate(&bad).is_err());
        bad.group_size = 4;
        bad.support = 4;
        assert!(generate(&bad).is_err());
        let mut bad = SyntheticSpec::new(Family::ScadRegression, 10, 5, 1);
        bad.equicorrelation = 0.2;
        assert!(generate(&bad).is_err());
        assert!(gen_lasso(&SyntheticSpec::new(Family::ScadRegression, 10, 5, 1)).is_err());
        assert!(gen_scad(&SyntheticSpec::new(Family::ScadRegression, 10, 5, 1)).is_ok());
    }

    #[test]
    fn libsvm_parsing() {
        let ds = parse_libsvm("1 1:0.5 3:2\n", Some(3), LabelMode::Signed).unwrap();
        assert_eq!(ds.features(), &array![[0.5, 0.0, 2.0]]);
        assert_eq!(ds.responses(), &array![1.0]);
        let ds = parse_libsvm("0 2:1\n# comment\n\n3 1:1\n", None, LabelMode::Signed).unwrap();
        assert_eq!(ds.responses(), &array![-1.0, 1.0]);
        assert_eq!(ds.p(), 2);
        let ds = parse_libsvm("2.5 1:1\n", None, LabelMode::Real).unwrap();
        assert_eq!(ds.responses(), &array![2.5]);

        assert!(matches!(parse_libsvm("", None, LabelMode::Real), Err(Error::EmptyDataset)));
        for (text, line) in [("1 1:1\n1 0:2\n", 2), ("1 1:1\nx 1:1\n", 2), ("1 1-2\n", 1), ("1 4:1\n", 1)] {
            match parse_libsvm(text, Some(3), LabelMode::Real) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
    }

    #[test]
    fn libsvm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.svm");
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = Array2::from_shape_fn((20, 5), |_| {
            if rng.random_bool(0.3) { 0.0 } else { rng.sample::<f64, _>(StandardNormal) }
        });
        let y = Array1::from_shape_fn(20, |_| rng.random_range(-3.0..3.0));
        let ds = Dataset::new(x, y).unwrap();
        write_libsvm(&ds, &path).unwrap();
        let back = load_libsvm(&path, Some(5), LabelMode::Real).unwrap();
        assert_eq!(back.features(), ds.features());
        assert_eq!(back.responses(), ds.responses());
        assert!(load_libsvm(&dir.path().join("missing"), None, LabelMode::Real).is_err());
    }

    #[test]
    fn csv_dump() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let ds = Dataset::new(array![[1.0, 0.0], [0.0, -2.5]], array![3.0, 4.0]).unwrap();
        write_csv_dump(&ds, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "row,col,value\n0,0,1\n1,1,-2.5\n0,y,3\n1,y,4\n");
    }

    #[test]
    fn column_normalization() {
        let ds = Dataset::new(
            array![[1.0, 3.0, 0.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
            array![0.0, 0.0, 0.0, 0.0],
        )
        .unwrap();
        let out = normalize_columns(&ds).unwrap();
        assert!(out.column_normalized());
        assert_eq!(out.features().column(0), ds.features().column(0));
        assert!((out.features()[[0, 1]] - 2.0).abs() < 1e-15);
        assert!(out.features().column(2).iter().all(|&v| v == 0.0));

        let s = generate(&SyntheticSpec::new(Family::Lasso, 50, 20, 2)).unwrap();
        let out = normalize_columns(&s.dataset).unwrap();
        for col in out.features().columns() {
            assert!(col.dot(&col).sqrt() / 50f64.sqrt() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn polynomial_groups() {
        let ds = Dataset::new(array![[2.0, 0.0], [-1.5, 0.0]], array![1.0, 2.0]).unwrap();
        let out = poly_expand_grouped(&ds, 3).unwrap();
        assert_eq!(out.p(), 6);
        assert_eq!(out.groups().unwrap().len(), 2);
        assert_eq!(out.features().row(0).to_vec(), vec![2.0, 4.0, 8.0, 0.0, 0.0, 0.0]);
        for i in 0..2 {
            let x = ds.features()[[i, 0]];
            assert!((out.features()[[i, 1]] - x * x).abs() <= 1e-15);
        }
        let wide = Dataset::new(Array2::ones((3, 13)), Array1::zeros(3)).unwrap();
        let out = poly_expand_grouped(&wide, 3).unwrap();
        assert_eq!((out.p(), out.groups().unwrap().len()), (39, 13));
        assert!(out.groups().unwrap().iter().all(|g| g.len() == 3));
    }
}
