//! Estimator simulation studies against a computed truth.
//!
//! Each replication simulates a finite Draw-mode dataset, applies every
//! estimator, and the per-estimator points and intervals are summarized into
//! bias, empirical SE, MSE and coverage with their Monte Carlo SEs.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgm::{logistic, DgmSpec, Intervention};
use crate::engine::{simulate, Dataset, EvalMode, SeedSpec};
use crate::error::{Error, FitError, Result};
use crate::numeric::{mean, normal_quantile, quantile_sorted, sample_sd, NeumaierSum};
use crate::rng::{derive_seed, label_hash, Stream};
use crate::truth::{Contrast, TruthResult};

pub const SCORE_TOLERANCE: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 50;
pub const SEPARATION_BOUND: f64 = 30.0;
pub const DEFAULT_BOOTSTRAP_REPS: usize = 500;
pub const MIN_BOOTSTRAP_REPS: usize = 100;
pub const DEFAULT_WEIGHT_WARNING: f64 = 100.0;
const MAX_HALVINGS: usize = 30;
const SINGULAR_PIVOT: f64 = 1e-12;

/// Row-major design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Design {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> std::result::Result<Self, FitError> {
        if data.len() != rows * cols {
            return Err(FitError::Input(format!(
                "design data has {} values, expected {rows}×{cols}",
                data.len()
            )));
        }
        Ok(Design { rows, cols, data })
    }

    /// Intercept column followed by `columns`.
    pub fn with_intercept(columns: &[&[f64]]) -> std::result::Result<Self, FitError> {
        let rows = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != rows) {
            return Err(FitError::Input("design columns have unequal lengths".into()));
        }
        let cols = columns.len() + 1;
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            data.push(1.0);
            data.extend(columns.iter().map(|c| c[i]));
        }
        Ok(Design { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn eta(&self, i: usize, beta: &[f64]) -> f64 {
        self.row(i).iter().zip(beta).map(|(x, b)| x * b).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub coefficients: Vec<f64>,
    /// Inverse observed information at the returned coefficients.
    pub covariance: DMatrix<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub max_score: f64,
}

impl FitResult {
    pub fn std_error(&self, j: usize) -> f64 {
        self.covariance[(j, j)].sqrt()
    }
}

/// Bernoulli log-likelihood under the logit link.
pub fn log_likelihood(design: &Design, response: &[f64], beta: &[f64]) -> f64 {
    (0..design.rows)
        .map(|i| {
            let eta = design.eta(i, beta);
            // log(1 + e^eta) without overflow
            let log1pexp = eta.max(0.0) + (-eta.abs()).exp().ln_1p();
            response[i] * eta - log1pexp
        })
        .collect::<NeumaierSum>()
        .value()
}

/// Gradient of [`log_likelihood`]: `Xᵀ(y − p)`.
pub fn score(design: &Design, response: &[f64], beta: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; design.cols];
    for (i, &y) in response.iter().enumerate().take(design.rows) {
        let r = y - logistic(design.eta(i, beta));
        for (gj, x) in g.iter_mut().zip(design.row(i)) {
            *gj += x * r;
        }
    }
    g
}

/// Log-likelihood, score and information in one pass. `exp(−|η|)` is
/// shared between the mean and `log(1 + e^η)`.
fn evaluate(design: &Design, response: &[f64], beta: &[f64]) -> (f64, Vec<f64>, DMatrix<f64>) {
    let p = design.cols;
    let mut ll = NeumaierSum::new();
    let mut g = vec![0.0; p];
    let mut h = vec![0.0; p * p];
    for (i, &y) in response.iter().enumerate().take(design.rows) {
        let x = design.row(i);
        let eta = design.eta(i, beta);
        let e = (-eta.abs()).exp();
        let mu = if eta >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
        ll.add(y * eta - (eta.max(0.0) + e.ln_1p()));
        let r = y - mu;
        let w = mu * (1.0 - mu);
        for j in 0..p {
            g[j] += x[j] * r;
            let wx = w * x[j];
            let row = &mut h[j * p..j * p + j + 1];
            for (hk, xk) in row.iter_mut().zip(x) {
                *hk += wx * xk;
            }
        }
    }
    let h = DMatrix::from_fn(p, p, |j, k| if k <= j { h[j * p + k] } else { h[k * p + j] });
    (ll.value(), g, h)
}

/// Solves `H x = rhs` for symmetric positive definite `H`, rejecting
/// numerically singular systems. Returns `x` and `H⁻¹`.
fn spd_solve(h: &DMatrix<f64>, rhs: &[f64]) -> std::result::Result<(Vec<f64>, DMatrix<f64>), FitError> {
    let p = h.nrows();
    let mut scale = DVector::<f64>::zeros(p);
    for j in 0..p {
        let d = h[(j, j)];
        if !(d > 0.0 && d.is_finite()) {
            return Err(FitError::Singular);
        }
        scale[j] = 1.0 / d.sqrt();
    }
    let scaled = DMatrix::from_fn(p, p, |i, j| h[(i, j)] * scale[i] * scale[j]);
    let chol = scaled.cholesky().ok_or(FitError::Singular)?;
    if chol.l_dirty().diagonal().iter().any(|&l| l * l < SINGULAR_PIVOT) {
        return Err(FitError::Singular);
    }
    let b = DVector::from_iterator(p, rhs.iter().enumerate().map(|(j, r)| r * scale[j]));
    let y = chol.solve(&b);
    let x = (0..p).map(|j| y[j] * scale[j]).collect();
    let inv_scaled = chol.inverse();
    // Lower triangle mirrored, so the returned covariance is exactly symmetric.
    let inv = DMatrix::from_fn(p, p, |i, j| {
        let (r, c) = if j <= i { (i, j) } else { (j, i) };
        inv_scaled[(r, c)] * scale[r] * scale[c]
    });
    Ok((x, inv))
}

/// Logistic regression by iteratively reweighted least squares (Newton's
/// method on the log-likelihood) with step halving.
pub fn fit_logistic(design: &Design, response: &[f64]) -> std::result::Result<FitResult, FitError> {
    if response.len() != design.rows {
        return Err(FitError::Input("response length differs from design rows".into()));
    }
    if design.rows < design.cols {
        return Err(FitError::Input(format!(
            "{} rows cannot identify {} coefficients",
            design.rows, design.cols
        )));
    }
    if response.iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(FitError::Input("response must be binary {0, 1}".into()));
    }
    if design.data.iter().any(|x| !x.is_finite()) {
        return Err(FitError::Input("design contains non-finite values".into()));
    }
    let ones = response.iter().filter(|&&y| y == 1.0).count();
    if ones == 0 || ones == response.len() {
        // The MLE of the intercept is infinite.
        return Err(FitError::Separation {
            index: 0,
            bound: SEPARATION_BOUND,
        });
    }

    // Start at the intercept-only MLE when the first column is the intercept.
    let mut beta = vec![0.0; design.cols];
    if (0..design.rows).all(|i| design.row(i)[0] == 1.0) {
        let ybar = ones as f64 / response.len() as f64;
        beta[0] = (ybar / (1.0 - ybar)).ln();
    }
    let (mut ll, mut g, mut h) = evaluate(design, response, &beta);
    let mut iterations = 0;
    loop {
        let max_score = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let converged = max_score < SCORE_TOLERANCE;
        if converged || iterations == MAX_ITERATIONS {
            let (_, covariance) = spd_solve(&h, &g)?;
            return Ok(FitResult {
                coefficients: beta,
                covariance,
                converged,
                iterations,
                max_score,
            });
        }
        let (step, _) = spd_solve(&h, &g)?;
        iterations += 1;

        let mut t = 1.0;
        let mut halvings = 0;
        let (candidate, next) = loop {
            let candidate = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect::<Vec<_>>();
            let next = evaluate(design, response, &candidate);
            if next.0 >= ll - 1e-12 * ll.abs() || halvings == MAX_HALVINGS {
                break (candidate, next);
            }
            t *= 0.5;
            halvings += 1;
        };
        beta = candidate;
        (ll, g, h) = next;
        if let Some(index) = beta.iter().position(|b| b.abs() > SEPARATION_BOUND) {
            return Err(FitError::Separation {
                index,
                bound: SEPARATION_BOUND,
            });
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EstimatorKind {
    /// `exp(β̂_exposure)` from the outcome-equation logistic model, Wald interval.
    ConditionalLogistic { exposure: String },
    /// Outcome-model standardization (g-computation) with bootstrap percentile interval.
    MarginalStandardization {
        exposure: String,
        a1: f64,
        a0: f64,
        contrast: Contrast,
        bootstrap_reps: usize,
    },
    /// Inverse probability weighting with normalized weights; binary exposure.
    Ipw {
        exposure: String,
        propensity_covariates: Vec<String>,
        contrast: Contrast,
        bootstrap_reps: usize,
        truncate_weights_at: Option<f64>,
        weight_warning: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    pub confidence_level: f64,
}

impl EstimatorSpec {
    pub fn new(kind: EstimatorKind) -> Self {
        EstimatorSpec {
            kind,
            confidence_level: 0.95,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            EstimatorKind::ConditionalLogistic { .. } => "conditional_logistic",
            EstimatorKind::MarginalStandardization { .. } => "marginal_standardization",
            EstimatorKind::Ipw { .. } => "ipw",
        }
    }

    pub fn exposure(&self) -> &str {
        match &self.kind {
            EstimatorKind::ConditionalLogistic { exposure }
            | EstimatorKind::MarginalStandardization { exposure, .. }
            | EstimatorKind::Ipw { exposure, .. } => exposure,
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.confidence_level > 0.0 && self.confidence_level < 1.0) {
            return Err(Error::domain("confidence_level must lie in (0, 1)"));
        }
        match &self.kind {
            EstimatorKind::ConditionalLogistic { .. } => Ok(()),
            EstimatorKind::MarginalStandardization {
                a1,
                a0,
                contrast,
                bootstrap_reps,
                ..
            } => {
                if a1 == a0 {
                    return Err(Error::domain("a1 and a0 must differ"));
                }
                check_marginal(*contrast, *bootstrap_reps)
            }
            EstimatorKind::Ipw {
                contrast,
                bootstrap_reps,
                truncate_weights_at,
                weight_warning,
                ..
            } => {
                if let Some(c) = truncate_weights_at {
                    if c.is_nan() || *c < 1.0 {
                        return Err(Error::domain("weight truncation cap must be >= 1"));
                    }
                }
                if weight_warning.is_nan() || *weight_warning <= 0.0 {
                    return Err(Error::domain("weight_warning must be > 0"));
                }
                check_marginal(*contrast, *bootstrap_reps)
            }
        }
    }
}

fn check_marginal(contrast: Contrast, bootstrap_reps: usize) -> Result<()> {
    if contrast == Contrast::Ratio {
        return Err(Error::domain(
            "marginal estimators support odds_ratio or difference contrasts",
        ));
    }
    if bootstrap_reps < MIN_BOOTSTRAP_REPS {
        return Err(Error::domain(format!(
            "bootstrap_reps must be >= {MIN_BOOTSTRAP_REPS} for interval coverage"
        )));
    }
    Ok(())
}

/// Outcome column and outcome-equation covariates used by outcome models.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeModel {
    pub outcome: String,
    pub covariates: Vec<String>,
}

impl OutcomeModel {
    pub fn from_dgm(dgm: &DgmSpec) -> Self {
        OutcomeModel {
            outcome: dgm.outcome.clone(),
            covariates: dgm.outcome_parents(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub warnings: Vec<String>,
}

fn column<'a>(ds: &'a Dataset, name: &str) -> Result<&'a [f64]> {
    ds.column(name)
        .ok_or_else(|| Error::Estimation(format!("dataset has no column `{name}`")))
}

/// Columns of the rows in `idx`, or all rows when `idx` is `None`.
struct Frame {
    columns: Vec<Vec<f64>>,
}

impl Frame {
    fn gather(ds: &Dataset, names: &[&str], idx: Option<&[usize]>) -> Result<Frame> {
        let columns = names
            .iter()
            .map(|n| {
                let c = column(ds, n)?;
                Ok(match idx {
                    Some(idx) => idx.iter().map(|&i| c[i]).collect(),
                    None => c.to_vec(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Frame { columns })
    }
}

fn ensure_varies(x: &[f64], what: &str) -> Result<()> {
    match x.first() {
        Some(&first) if x.iter().any(|&v| v != first) => Ok(()),
        _ => Err(Error::Estimation(format!(
            "{what} column is constant; contrast undefined"
        ))),
    }
}

fn confidence_z(level: f64) -> f64 {
    normal_quantile(1.0 - (1.0 - level) / 2.0)
}

/// Column names for an outcome model: exposure first, then the other
/// outcome-equation covariates.
fn outcome_design_names<'a>(model: &'a OutcomeModel, exposure: &'a str) -> Vec<&'a str> {
    let mut names = vec![exposure];
    names.extend(model.covariates.iter().map(String::as_str).filter(|c| *c != exposure));
    names
}

fn marginal_standardization_point(frame: &Frame, y: &[f64], a1: f64, a0: f64, contrast: Contrast) -> Result<f64> {
    let cols: Vec<&[f64]> = frame.columns.iter().map(Vec::as_slice).collect();
    ensure_varies(cols[0], "exposure")?;
    let design = Design::with_intercept(&cols)?;
    let fit = fit_logistic(&design, y)?;
    let b = &fit.coefficients;
    let n = design.rows();
    let mut s1 = NeumaierSum::new();
    let mut s0 = NeumaierSum::new();
    for i in 0..n {
        let rest: f64 = design.row(i)[2..].iter().zip(&b[2..]).map(|(x, b)| x * b).sum();
        s1.add(logistic(b[0] + b[1] * a1 + rest));
        s0.add(logistic(b[0] + b[1] * a0 + rest));
    }
    contrast.apply(s1.value() / n as f64, s0.value() / n as f64)
}

fn ipw_point(frame: &Frame, y: &[f64], contrast: Contrast, truncate: Option<f64>) -> Result<(f64, f64)> {
    let a = frame.columns[0].as_slice();
    ensure_varies(a, "exposure")?;
    if a.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Estimation("IPW requires a binary {0, 1} exposure".into()));
    }
    let cov: Vec<&[f64]> = frame.columns[1..].iter().map(Vec::as_slice).collect();
    let design = Design::with_intercept(&cov)?;
    let fit = fit_logistic(&design, a)?;
    let (mut num1, mut den1, mut num0, mut den0) = (
        NeumaierSum::new(),
        NeumaierSum::new(),
        NeumaierSum::new(),
        NeumaierSum::new(),
    );
    let mut max_w = 0.0f64;
    for i in 0..design.rows() {
        let ps = logistic(design.eta(i, &fit.coefficients));
        let mut w = if a[i] == 1.0 { 1.0 / ps } else { 1.0 / (1.0 - ps) };
        max_w = max_w.max(w);
        if let Some(cap) = truncate {
            w = w.min(cap);
        }
        if a[i] == 1.0 {
            num1.add(w * y[i]);
            den1.add(w);
        } else {
            num0.add(w * y[i]);
            den0.add(w);
        }
    }
    let point = contrast.apply(num1.value() / den1.value(), num0.value() / den0.value())?;
    Ok((point, max_w))
}

fn percentile_interval(mut boots: Vec<f64>, level: f64) -> (f64, f64) {
    boots.sort_by(|a, b| a.total_cmp(b));
    let alpha = 1.0 - level;
    (
        quantile_sorted(&boots, alpha / 2.0),
        quantile_sorted(&boots, 1.0 - alpha / 2.0),
    )
}

/// Nonparametric bootstrap: `reps` resamples of whole rows. Failed resamples
/// are dropped; more than half failing is an error.
fn bootstrap(n: usize, reps: usize, seed: u64, mut stat: impl FnMut(&[usize]) -> Result<f64>) -> Result<Vec<f64>> {
    let mut stream = Stream::new(seed, label_hash("bootstrap"));
    let mut idx = vec![0usize; n];
    let mut out = Vec::with_capacity(reps);
    for _ in 0..reps {
        for slot in idx.iter_mut() {
            *slot = stream.next_index(n);
        }
        if let Ok(v) = stat(&idx) {
            out.push(v);
        }
    }
    if out.len() * 2 < reps {
        return Err(Error::Estimation(format!(
            "{} of {reps} bootstrap resamples failed",
            reps - out.len()
        )));
    }
    Ok(out)
}

/// Applies `estimator` to `dataset`. `bootstrap_seed` drives resampling for
/// the marginal estimators.
pub fn estimate(
    dataset: &Dataset,
    estimator: &EstimatorSpec,
    model: &OutcomeModel,
    bootstrap_seed: u64,
) -> Result<Estimate> {
    estimator.check()?;
    let y_all = column(dataset, &model.outcome)?;
    if y_all.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Estimation(format!("outcome `{}` is not binary", model.outcome)));
    }
    let level = estimator.confidence_level;
    match &estimator.kind {
        EstimatorKind::ConditionalLogistic { exposure } => {
            let names = outcome_design_names(model, exposure);
            let frame = Frame::gather(dataset, &names, None)?;
            ensure_varies(&frame.columns[0], "exposure")?;
            let cols: Vec<&[f64]> = frame.columns.iter().map(Vec::as_slice).collect();
            let fit = fit_logistic(&Design::with_intercept(&cols)?, y_all)?;
            if !fit.converged {
                return Err(Error::Estimation("outcome model did not converge".into()));
            }
            let (b, se) = (fit.coefficients[1], fit.std_error(1));
            let z = confidence_z(level);
            Ok(Estimate {
                point: b.exp(),
                ci_low: (b - z * se).exp(),
                ci_high: (b + z * se).exp(),
                warnings: Vec::new(),
            })
        }
        EstimatorKind::MarginalStandardization {
            exposure,
            a1,
            a0,
            contrast,
            bootstrap_reps,
        } => {
            let names = outcome_design_names(model, exposure);
            let frame = Frame::gather(dataset, &names, None)?;
            let point = marginal_standardization_point(&frame, y_all, *a1, *a0, *contrast)?;
            let boots = bootstrap(dataset.n(), *bootstrap_reps, bootstrap_seed, |idx| {
                let f = Frame::gather(dataset, &names, Some(idx))?;
                let y: Vec<f64> = idx.iter().map(|&i| y_all[i]).collect();
                marginal_standardization_point(&f, &y, *a1, *a0, *contrast)
            })?;
            let (ci_low, ci_high) = percentile_interval(boots, level);
            Ok(Estimate {
                point,
                ci_low,
                ci_high,
                warnings: Vec::new(),
            })
        }
        EstimatorKind::Ipw {
            exposure,
            propensity_covariates,
            contrast,
            bootstrap_reps,
            truncate_weights_at,
            weight_warning,
        } => {
            let mut names = vec![exposure.as_str()];
            names.extend(propensity_covariates.iter().map(String::as_str));
            let frame = Frame::gather(dataset, &names, None)?;
            let (point, max_w) = ipw_point(&frame, y_all, *contrast, *truncate_weights_at)?;
            let boots = bootstrap(dataset.n(), *bootstrap_reps, bootstrap_seed, |idx| {
                let f = Frame::gather(dataset, &names, Some(idx))?;
                let y: Vec<f64> = idx.iter().map(|&i| y_all[i]).collect();
                ipw_point(&f, &y, *contrast, *truncate_weights_at).map(|(p, _)| p)
            })?;
            let (ci_low, ci_high) = percentile_interval(boots, level);
            let mut warnings = Vec::new();
            if truncate_weights_at.is_none() && max_w > *weight_warning {
                warnings.push(format!(
                    "maximum IPW weight {max_w:.3} exceeds {weight_warning} (weights untruncated)"
                ));
            }
            Ok(Estimate {
                point,
                ci_low,
                ci_high,
                warnings,
            })
        }
    }
}

/// An estimator evaluated against a specific truth value.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyArm {
    pub label: String,
    pub estimator: EstimatorSpec,
    pub truth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Performance {
    pub mean_estimate: f64,
    pub bias: f64,
    pub bias_mcse: f64,
    pub empirical_se: f64,
    pub mse: f64,
    pub coverage: f64,
    pub coverage_mcse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorPerformance {
    pub label: String,
    pub estimator: String,
    pub truth_used: f64,
    pub n_sims: u64,
    pub n_failed: u64,
    pub n_warnings: u64,
    /// `None` when every replication failed; see `error`.
    pub performance: Option<Performance>,
    pub error: Option<String>,
    /// Per-replication points (`None` for failed fits), kept on request.
    pub points: Option<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub n_sims: u64,
    pub sample_size: u64,
    pub master_seed: u64,
    pub estimators: Vec<EstimatorPerformance>,
}

/// Performance measures from successful replications.
///
/// `bias_mcse = empirical_se/√n` and `coverage_mcse = √(coverage(1−coverage)/n)`
/// with `n` the number of successful replications.
pub fn performance(estimates: &[Estimate], truth: f64) -> Option<Performance> {
    if estimates.len() < 2 {
        return None;
    }
    let points: Vec<f64> = estimates.iter().map(|e| e.point).collect();
    let n = points.len() as f64;
    let m = mean(&points);
    let empirical_se = sample_sd(&points)?;
    let mse = points
        .iter()
        .map(|p| (p - truth) * (p - truth))
        .collect::<NeumaierSum>()
        .value()
        / n;
    let covered = estimates
        .iter()
        .filter(|e| e.ci_low <= truth && truth <= e.ci_high)
        .count() as f64;
    let coverage = covered / n;
    Some(Performance {
        mean_estimate: m,
        bias: m - truth,
        bias_mcse: empirical_se / n.sqrt(),
        empirical_se,
        mse,
        coverage,
        coverage_mcse: (coverage * (1.0 - coverage) / n).sqrt(),
    })
}

/// Runs `n_sims` replications of `sample_size` rows each and evaluates every arm.
pub fn run_study(
    dgm: &DgmSpec,
    arms: &[StudyArm],
    n_sims: usize,
    sample_size: usize,
    seed: &SeedSpec,
    keep_points: bool,
) -> Result<PerformanceReport> {
    if n_sims < 2 {
        return Err(Error::domain("n_sims must be at least 2"));
    }
    if sample_size == 0 {
        return Err(Error::domain("sample_size must be at least 1"));
    }
    for arm in arms {
        arm.estimator.check()?;
    }
    let model = OutcomeModel::from_dgm(dgm);
    // Surface DGM problems once rather than as n_sims failures.
    simulate(dgm, 1, seed, &Intervention::new(), EvalMode::Draw)?;

    let per_rep: Vec<Vec<Option<Estimate>>> = (0..n_sims)
        .into_par_iter()
        .map(|r| {
            let ds = simulate(
                dgm,
                sample_size,
                &seed.derive("simstudy", r as u64),
                &Intervention::new(),
                EvalMode::Draw,
            );
            arms.iter()
                .enumerate()
                .map(|(a, arm)| {
                    let ds = ds.as_ref().ok()?;
                    let boot_seed = derive_seed(seed.master_seed, &format!("bootstrap:{a}"), r as u64);
                    estimate(ds, &arm.estimator, &model, boot_seed).ok()
                })
                .collect()
        })
        .collect();

    let estimators = arms
        .iter()
        .enumerate()
        .map(|(a, arm)| {
            let results: Vec<&Option<Estimate>> = per_rep.iter().map(|r| &r[a]).collect();
            let ok: Vec<Estimate> = results.iter().filter_map(|e| (*e).clone()).collect();
            let n_failed = (n_sims - ok.len()) as u64;
            let perf = performance(&ok, arm.truth);
            let error = match ok.len() {
                0 => Some("all replications failed".to_string()),
                1 => Some("only one replication succeeded; SD undefined".to_string()),
                _ => None,
            };
            EstimatorPerformance {
                label: arm.label.clone(),
                estimator: arm.estimator.name().to_string(),
                truth_used: arm.truth,
                n_sims: n_sims as u64,
                n_failed,
                n_warnings: ok.iter().filter(|e| !e.warnings.is_empty()).count() as u64,
                performance: perf,
                error,
                points: keep_points.then(|| results.iter().map(|e| e.as_ref().map(|e| e.point)).collect()),
            }
        })
        .collect();

    Ok(PerformanceReport {
        n_sims: n_sims as u64,
        sample_size: sample_size as u64,
        master_seed: seed.master_seed,
        estimators,
    })
}

/// [`run_study`] with every estimator judged against `truth.value`.
pub fn run_study_against(
    dgm: &DgmSpec,
    truth: &TruthResult,
    estimators: &[EstimatorSpec],
    n_sims: usize,
    sample_size: usize,
    seed: &SeedSpec,
) -> Result<PerformanceReport> {
    let arms: Vec<StudyArm> = estimators
        .iter()
        .map(|e| StudyArm {
            label: e.name().to_string(),
            estimator: e.clone(),
            truth: truth.value,
        })
        .collect();
    run_study(dgm, &arms, n_sims, sample_size, seed, false)
}
