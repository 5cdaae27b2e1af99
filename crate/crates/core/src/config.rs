//! Run configuration files.
//!
//! A configuration is a TOML document holding one DGM, one estimand, the Monte
//! Carlo settings and optional per-command blocks. Unknown keys are rejected,
//! and every numeric field is range-checked before any computation starts.
//! Relative empirical-source paths resolve against the configuration file's
//! directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::dgm::{DgmSpec, DistributionSpec, Intervention, LinkFunction, NodeSpec, Noise, Term};
use crate::engine::{ingest_empirical, SeedSpec, DEFAULT_CHUNK_SIZE};
use crate::error::{ConfigError, Error, Result};
use crate::oracle::{QuadratureSpec, MAX_HERMITE_NODES, MIN_SIMPSON_TOL};
use crate::simstudy::{
    EstimatorKind, EstimatorSpec, DEFAULT_BOOTSTRAP_REPS, DEFAULT_WEIGHT_WARNING, MIN_BOOTSTRAP_REPS,
};
use crate::truth::{
    Contrast, ControlledDirectEffect, EffectScale, EstimandSpec, MarginalOddsRatio, PotentialOutcomeContrast,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputSpec {
    pub format: Option<Format>,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleBlock {
    pub quadrature: QuadratureSpec,
    /// Also run the Monte Carlo truth and report the difference.
    pub compare_mc: bool,
}

impl Default for OracleBlock {
    fn default() -> Self {
        OracleBlock {
            quadrature: QuadratureSpec::default(),
            compare_mc: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseBlock {
    pub n_grid: Vec<usize>,
    pub replicates_per_n: usize,
    pub decimal_places: u32,
    pub seeds: Vec<u64>,
}

/// Truth an estimator is judged against in a simulation study.
#[derive(Debug, Clone, PartialEq)]
pub enum TruthChoice {
    /// Monte Carlo truth of the configured estimand.
    Estimand,
    /// `exp(coefficient)` of the estimator's exposure in the outcome equation.
    Conditional,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorEntry {
    pub label: String,
    pub spec: EstimatorSpec,
    pub truth: TruthChoice,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimstudyBlock {
    pub n_sims: usize,
    pub sample_size: usize,
    pub keep_points: bool,
    pub estimators: Vec<EstimatorEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dgm: DgmSpec,
    pub estimand: EstimandSpec,
    pub n: usize,
    pub seed: SeedSpec,
    pub replicates: usize,
    pub oracle: Option<OracleBlock>,
    pub diagnose: Option<DiagnoseBlock>,
    pub simstudy: Option<SimstudyBlock>,
    pub output: OutputSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    run: RawRun,
    seed: RawSeed,
    dgm: RawDgm,
    estimand: RawEstimand,
    oracle: Option<RawOracle>,
    diagnose: Option<RawDiagnose>,
    simstudy: Option<RawSimstudy>,
    output: Option<RawOutput>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    n: u64,
    #[serde(default = "one")]
    replicates: u64,
}

fn one() -> u64 {
    1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSeed {
    master: u64,
    chunk_size: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDgm {
    outcome: String,
    #[serde(default)]
    sources: Vec<RawSource>,
    nodes: Vec<RawNode>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSource {
    name: String,
    path: PathBuf,
    columns: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    name: String,
    distribution: Option<RawDistribution>,
    intercept: Option<f64>,
    terms: Option<Vec<RawTerm>>,
    link: Option<RawLink>,
    noise: Option<RawNoise>,
    noise_sd: Option<f64>,
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawDistribution {
    Normal { mean: f64, sd: f64 },
    Bernoulli { p: f64 },
    Uniform { low: f64, high: f64 },
    Empirical { source: String, column: String },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    parent: String,
    coefficient: f64,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum RawLink {
    Identity,
    Expit,
    Exp,
}

#[derive(Deserialize, Clone, Copy, PartialEq)]
#[serde(rename_all = "snake_case")]
enum RawNoise {
    None,
    Bernoulli,
    Gaussian,
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawEstimand {
    MarginalOddsRatio {
        exposure: String,
        #[serde(default = "one_f")]
        a1: f64,
        #[serde(default)]
        a0: f64,
    },
    ControlledDirectEffect {
        exposure: String,
        mediator: String,
        m: f64,
        #[serde(default = "one_f")]
        a1: f64,
        #[serde(default)]
        a0: f64,
        #[serde(default = "difference")]
        scale: EffectScale,
    },
    PotentialOutcomeContrast {
        intervention_a: BTreeMap<String, f64>,
        intervention_b: BTreeMap<String, f64>,
        contrast: Contrast,
    },
}

fn one_f() -> f64 {
    1.0
}

fn difference() -> EffectScale {
    EffectScale::Difference
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOracle {
    method: Option<String>,
    nodes: Option<u64>,
    abs_tol: Option<f64>,
    range_sigmas: Option<f64>,
    compare_mc: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDiagnose {
    n_grid: Vec<u64>,
    replicates_per_n: u64,
    decimal_places: Option<u32>,
    #[serde(default)]
    seeds: Vec<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimstudy {
    n_sims: u64,
    sample_size: u64,
    #[serde(default)]
    keep_points: bool,
    estimators: Vec<RawEstimator>,
}

#[derive(Deserialize, Clone, Copy, PartialEq)]
#[serde(rename_all = "snake_case")]
enum RawEstimatorType {
    ConditionalLogistic,
    MarginalStandardization,
    Ipw,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawTruth {
    Value(f64),
    Named(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEstimator {
    #[serde(rename = "type")]
    kind: RawEstimatorType,
    label: Option<String>,
    exposure: String,
    a1: Option<f64>,
    a0: Option<f64>,
    contrast: Option<Contrast>,
    bootstrap_reps: Option<u64>,
    propensity_covariates: Option<Vec<String>>,
    truncate_weights_at: Option<f64>,
    weight_warning: Option<f64>,
    confidence_level: Option<f64>,
    truth: Option<RawTruth>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    format: Option<Format>,
    path: Option<PathBuf>,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, column)
}

fn parse_error(text: &str, err: toml::de::Error) -> ConfigError {
    let (line, column) = err.span().map_or((0, 0), |s| line_col(text, s.start));
    let message = err.message().to_string();
    if let Some(rest) = message.strip_prefix("unknown field `") {
        if let Some(end) = rest.find('`') {
            return ConfigError::UnknownKey {
                key: rest[..end].to_string(),
                line,
                column,
            };
        }
    }
    ConfigError::Parse { line, column, message }
}

fn count(field: &str, v: u64, min: u64) -> Result<usize, ConfigError> {
    if v < min {
        return Err(ConfigError::range(field, format!("must be >= {min}, got {v}")));
    }
    usize::try_from(v).map_err(|_| ConfigError::range(field, "too large for this platform"))
}

fn finite(field: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::range(field, format!("must be finite, got {v}")))
    }
}

/// Reads and checks a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_config_str(&text, base)
}

/// Parses configuration text; relative source paths resolve against `base_dir`.
pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| parse_error(text, e))?;

    let n = count("run.n", raw.run.n, 1)?;
    let replicates = count("run.replicates", raw.run.replicates, 1)?;
    let chunk_size = count(
        "seed.chunk_size",
        raw.seed.chunk_size.unwrap_or(DEFAULT_CHUNK_SIZE as u64),
        1,
    )?;
    let seed = SeedSpec::new(raw.seed.master).with_chunk_size(chunk_size);

    let dgm = build_dgm(raw.dgm, base_dir)?;
    let estimand = build_estimand(raw.estimand)?;
    check_estimand_refs(&dgm, &estimand)?;

    let oracle = raw.oracle.map(build_oracle).transpose()?;
    let diagnose = raw.diagnose.map(build_diagnose).transpose()?;
    let simstudy = raw.simstudy.map(|s| build_simstudy(s, &dgm)).transpose()?;
    let output = raw.output.map_or_else(OutputSpec::default, |o| OutputSpec {
        format: o.format,
        path: o.path,
    });

    Ok(RunConfig {
        dgm,
        estimand,
        n,
        seed,
        replicates,
        oracle,
        diagnose,
        simstudy,
        output,
    })
}

fn build_dgm(raw: RawDgm, base_dir: &Path) -> Result<DgmSpec> {
    let mut nodes = Vec::with_capacity(raw.nodes.len());
    for node in raw.nodes {
        let field = |f: &str| format!("dgm.nodes.{}.{f}", node.name);
        let structural_fields = node.intercept.is_some()
            || node.terms.is_some()
            || node.link.is_some()
            || node.noise.is_some()
            || node.noise_sd.is_some();
        let spec = match node.distribution {
            Some(dist) => {
                if structural_fields {
                    return Err(ConfigError::range(
                        field("distribution"),
                        "an exogenous node cannot also declare intercept/terms/link/noise",
                    )
                    .into());
                }
                let dist = match dist {
                    RawDistribution::Normal { mean, sd } => DistributionSpec::Normal { mean, sd },
                    RawDistribution::Bernoulli { p } => DistributionSpec::Bernoulli { p },
                    RawDistribution::Uniform { low, high } => DistributionSpec::Uniform { low, high },
                    RawDistribution::Empirical { source, column } => DistributionSpec::Empirical { source, column },
                };
                NodeSpec::exogenous(node.name, dist)
            }
            None => {
                let link = match node.link.unwrap_or(RawLink::Identity) {
                    RawLink::Identity => LinkFunction::Identity,
                    RawLink::Expit => LinkFunction::Expit,
                    RawLink::Exp => LinkFunction::Exp,
                };
                let noise = match (node.noise.unwrap_or(RawNoise::None), node.noise_sd) {
                    (RawNoise::None, None) => Noise::None,
                    (RawNoise::Bernoulli, None) => Noise::BernoulliDraw,
                    (RawNoise::Gaussian, Some(sd)) => Noise::GaussianDraw { sd },
                    (RawNoise::Gaussian, None) => {
                        return Err(ConfigError::range(field("noise_sd"), "required for gaussian noise").into())
                    }
                    (_, Some(_)) => {
                        return Err(ConfigError::range(field("noise_sd"), "only valid with gaussian noise").into())
                    }
                };
                let terms = node
                    .terms
                    .unwrap_or_default()
                    .into_iter()
                    .map(|t| Term::new(t.parent, t.coefficient))
                    .collect();
                NodeSpec::structural(node.name, node.intercept.unwrap_or(0.0), terms, link, noise)
            }
        };
        nodes.push(spec);
    }
    let mut dgm = DgmSpec::new(nodes, raw.outcome);
    for src in raw.sources {
        let path = if src.path.is_absolute() {
            src.path.clone()
        } else {
            base_dir.join(&src.path)
        };
        let cols: Vec<&str> = src.columns.iter().map(String::as_str).collect();
        let source = ingest_empirical(&path, &cols)?;
        dgm = dgm.with_source(src.name, source);
    }
    Ok(dgm)
}

fn build_estimand(raw: RawEstimand) -> Result<EstimandSpec, ConfigError> {
    Ok(match raw {
        RawEstimand::MarginalOddsRatio { exposure, a1, a0 } => {
            if finite("estimand.a1", a1)? == finite("estimand.a0", a0)? {
                return Err(ConfigError::range("estimand.a1", "a1 and a0 must differ"));
            }
            EstimandSpec::MarginalOddsRatio(MarginalOddsRatio { exposure, a1, a0 })
        }
        RawEstimand::ControlledDirectEffect {
            exposure,
            mediator,
            m,
            a1,
            a0,
            scale,
        } => {
            if finite("estimand.a1", a1)? == finite("estimand.a0", a0)? {
                return Err(ConfigError::range("estimand.a1", "a1 and a0 must differ"));
            }
            EstimandSpec::ControlledDirectEffect(ControlledDirectEffect {
                exposure,
                mediator,
                m: finite("estimand.m", m)?,
                a1,
                a0,
                scale,
            })
        }
        RawEstimand::PotentialOutcomeContrast {
            intervention_a,
            intervention_b,
            contrast,
        } => {
            for (k, v) in intervention_a.iter().chain(&intervention_b) {
                finite(&format!("estimand intervention value for `{k}`"), *v)?;
            }
            EstimandSpec::PotentialOutcomeContrast(PotentialOutcomeContrast {
                intervention_a: intervention_a.into_iter().collect::<Intervention>(),
                intervention_b: intervention_b.into_iter().collect::<Intervention>(),
                contrast,
            })
        }
    })
}

fn check_estimand_refs(dgm: &DgmSpec, estimand: &EstimandSpec) -> Result<(), ConfigError> {
    let (a, b, _) = estimand.branches();
    for (name, _) in a.iter().chain(b.iter()) {
        if dgm.node(name).is_none() {
            return Err(ConfigError::DanglingReference {
                what: "estimand node".into(),
                name: name.to_string(),
            });
        }
    }
    if let EstimandSpec::ControlledDirectEffect(c) = estimand {
        if c.exposure == c.mediator {
            return Err(ConfigError::range("estimand.mediator", "must differ from exposure"));
        }
    }
    Ok(())
}

fn build_oracle(raw: RawOracle) -> Result<OracleBlock, ConfigError> {
    let quadrature = match raw.method.as_deref().unwrap_or("gauss_hermite") {
        "gauss_hermite" => {
            if raw.abs_tol.is_some() || raw.range_sigmas.is_some() {
                return Err(ConfigError::range(
                    "oracle",
                    "abs_tol/range_sigmas apply to adaptive_simpson only",
                ));
            }
            let nodes = count("oracle.nodes", raw.nodes.unwrap_or(64), 2)?;
            if nodes > MAX_HERMITE_NODES {
                return Err(ConfigError::range(
                    "oracle.nodes",
                    format!("must be <= {MAX_HERMITE_NODES}"),
                ));
            }
            QuadratureSpec::GaussHermite { nodes }
        }
        "adaptive_simpson" => {
            if raw.nodes.is_some() {
                return Err(ConfigError::range("oracle.nodes", "applies to gauss_hermite only"));
            }
            let abs_tol = raw.abs_tol.unwrap_or(1e-12);
            if !(abs_tol >= MIN_SIMPSON_TOL && abs_tol.is_finite()) {
                return Err(ConfigError::range(
                    "oracle.abs_tol",
                    format!("must be >= {MIN_SIMPSON_TOL:e}"),
                ));
            }
            let range_sigmas = raw.range_sigmas.unwrap_or(10.0);
            if !(range_sigmas > 0.0 && range_sigmas.is_finite()) {
                return Err(ConfigError::range("oracle.range_sigmas", "must be > 0"));
            }
            QuadratureSpec::AdaptiveSimpson { abs_tol, range_sigmas }
        }
        other => {
            return Err(ConfigError::range(
                "oracle.method",
                format!("expected gauss_hermite or adaptive_simpson, got `{other}`"),
            ))
        }
    };
    Ok(OracleBlock {
        quadrature,
        compare_mc: raw.compare_mc.unwrap_or(true),
    })
}

fn build_diagnose(raw: RawDiagnose) -> Result<DiagnoseBlock, ConfigError> {
    if raw.n_grid.is_empty() {
        return Err(ConfigError::range("diagnose.n_grid", "must not be empty"));
    }
    let n_grid = raw
        .n_grid
        .iter()
        .map(|&n| count("diagnose.n_grid", n, 1))
        .collect::<Result<Vec<_>, _>>()?;
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ConfigError::range("diagnose.n_grid", "must be strictly increasing"));
    }
    if raw.seeds.len() == 1 {
        return Err(ConfigError::range(
            "diagnose.seeds",
            "a seed sweep needs at least 2 seeds",
        ));
    }
    let decimal_places = raw.decimal_places.unwrap_or(crate::diagnostics::DEFAULT_DECIMAL_PLACES);
    if decimal_places == 0 || decimal_places > 15 {
        return Err(ConfigError::range("diagnose.decimal_places", "must be in [1, 15]"));
    }
    Ok(DiagnoseBlock {
        n_grid,
        replicates_per_n: count("diagnose.replicates_per_n", raw.replicates_per_n, 2)?,
        decimal_places,
        seeds: raw.seeds,
    })
}

fn build_simstudy(raw: RawSimstudy, dgm: &DgmSpec) -> Result<SimstudyBlock, ConfigError> {
    if raw.estimators.is_empty() {
        return Err(ConfigError::range(
            "simstudy.estimators",
            "at least one estimator is required",
        ));
    }
    let node_ref = |name: &str| {
        if dgm.node(name).is_some() {
            Ok(())
        } else {
            Err(ConfigError::DanglingReference {
                what: "estimator node".into(),
                name: name.to_string(),
            })
        }
    };
    let mut estimators = Vec::with_capacity(raw.estimators.len());
    for (i, e) in raw.estimators.into_iter().enumerate() {
        let f = |name: &str| format!("simstudy.estimators[{i}].{name}");
        node_ref(&e.exposure)?;
        let not_applicable = |present: bool, name: &str| {
            if present {
                Err(ConfigError::range(f(name), "not applicable to this estimator type"))
            } else {
                Ok(())
            }
        };
        let boot = || -> Result<usize, ConfigError> {
            count(
                &f("bootstrap_reps"),
                e.bootstrap_reps.unwrap_or(DEFAULT_BOOTSTRAP_REPS as u64),
                MIN_BOOTSTRAP_REPS as u64,
            )
        };
        let contrast = || -> Result<Contrast, ConfigError> {
            match e.contrast.unwrap_or(Contrast::OddsRatio) {
                Contrast::Ratio => Err(ConfigError::range(f("contrast"), "use odds_ratio or difference")),
                c => Ok(c),
            }
        };
        let kind = match e.kind {
            RawEstimatorType::ConditionalLogistic => {
                not_applicable(e.a1.is_some() || e.a0.is_some(), "a1")?;
                not_applicable(e.contrast.is_some(), "contrast")?;
                not_applicable(e.bootstrap_reps.is_some(), "bootstrap_reps")?;
                not_applicable(e.propensity_covariates.is_some(), "propensity_covariates")?;
                not_applicable(
                    e.truncate_weights_at.is_some() || e.weight_warning.is_some(),
                    "truncate_weights_at",
                )?;
                EstimatorKind::ConditionalLogistic {
                    exposure: e.exposure.clone(),
                }
            }
            RawEstimatorType::MarginalStandardization => {
                not_applicable(e.propensity_covariates.is_some(), "propensity_covariates")?;
                not_applicable(
                    e.truncate_weights_at.is_some() || e.weight_warning.is_some(),
                    "truncate_weights_at",
                )?;
                let a1 = finite(&f("a1"), e.a1.unwrap_or(1.0))?;
                let a0 = finite(&f("a0"), e.a0.unwrap_or(0.0))?;
                if a1 == a0 {
                    return Err(ConfigError::range(f("a1"), "a1 and a0 must differ"));
                }
                EstimatorKind::MarginalStandardization {
                    exposure: e.exposure.clone(),
                    a1,
                    a0,
                    contrast: contrast()?,
                    bootstrap_reps: boot()?,
                }
            }
            RawEstimatorType::Ipw => {
                not_applicable(e.a1.is_some() || e.a0.is_some(), "a1")?;
                let covs = e.propensity_covariates.clone().unwrap_or_default();
                for c in &covs {
                    node_ref(c)?;
                }
                if let Some(cap) = e.truncate_weights_at {
                    if !(cap >= 1.0 && cap.is_finite()) {
                        return Err(ConfigError::range(f("truncate_weights_at"), "must be >= 1"));
                    }
                }
                let weight_warning = e.weight_warning.unwrap_or(DEFAULT_WEIGHT_WARNING);
                if !(weight_warning > 0.0 && weight_warning.is_finite()) {
                    return Err(ConfigError::range(f("weight_warning"), "must be > 0"));
                }
                EstimatorKind::Ipw {
                    exposure: e.exposure.clone(),
                    propensity_covariates: covs,
                    contrast: contrast()?,
                    bootstrap_reps: boot()?,
                    truncate_weights_at: e.truncate_weights_at,
                    weight_warning,
                }
            }
        };
        let confidence_level = e.confidence_level.unwrap_or(0.95);
        if !(confidence_level > 0.0 && confidence_level < 1.0) {
            return Err(ConfigError::range(f("confidence_level"), "must lie in (0, 1)"));
        }
        let spec = EstimatorSpec { kind, confidence_level };
        let truth = match e.truth {
            None => TruthChoice::Estimand,
            Some(RawTruth::Value(v)) => TruthChoice::Value(finite(&f("truth"), v)?),
            Some(RawTruth::Named(s)) => match s.as_str() {
                "estimand" => TruthChoice::Estimand,
                "conditional" => TruthChoice::Conditional,
                other => {
                    return Err(ConfigError::range(
                        f("truth"),
                        format!("expected \"estimand\", \"conditional\" or a number, got `{other}`"),
                    ))
                }
            },
        };
        estimators.push(EstimatorEntry {
            label: e.label.unwrap_or_else(|| format!("{}:{i}", spec.name())),
            spec,
            truth,
        });
    }
    Ok(SimstudyBlock {
        n_sims: count("simstudy.n_sims", raw.n_sims, 2)?,
        sample_size: count("simstudy.sample_size", raw.sample_size, 1)?,
        keep_points: raw.keep_points,
        estimators,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[run]
n = 1000

[seed]
master = 1

[dgm]
outcome = "Y"

[[dgm.nodes]]
name = "C"
distribution = { type = "normal", mean = 0.0, sd = 1.0 }

[[dgm.nodes]]
name = "A"
intercept = 0.0
terms = [{ parent = "C", coefficient = 0.5 }]
link = "expit"
noise = "bernoulli"

[[dgm.nodes]]
name = "Y"
intercept = -1.0
terms = [{ parent = "A", coefficient = 0.7 }, { parent = "C", coefficient = 0.4 }]
link = "expit"
noise = "bernoulli"

[estimand]
type = "marginal_odds_ratio"
exposure = "A"
"#;

    fn parse(text: &str) -> Result<RunConfig> {
        parse_config_str(text, Path::new("."))
    }

    #[test]
    fn minimal_parses() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg.n, 1000);
        assert_eq!(cfg.replicates, 1);
        assert_eq!(cfg.seed.chunk_size, DEFAULT_CHUNK_SIZE);
        assert_eq!(cfg.dgm.nodes.len(), 3);
        assert!(crate::dgm::validate(&cfg.dgm).is_empty());
    }

    #[test]
    fn unknown_key_is_named_with_position() {
        let text = MINIMAL.replace("master = 1", "ssed = 1");
        match parse(&text).unwrap_err() {
            Error::Config(ConfigError::UnknownKey { key, line, .. }) => {
                assert_eq!(key, "ssed");
                assert_eq!(line, 6);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn unknown_key_inside_tagged_table() {
        let text = MINIMAL.replace("sd = 1.0 }", "sd = 1.0, skew = 2.0 }");
        assert!(matches!(
            parse(&text).unwrap_err(),
            Error::Config(ConfigError::UnknownKey { ref key, .. }) if key == "skew"
        ));
    }

    #[test]
    fn zero_n_is_range_violation() {
        let text = MINIMAL.replace("n = 1000", "n = 0");
        assert!(matches!(
            parse(&text).unwrap_err(),
            Error::Config(ConfigError::Range { .. })
        ));
    }

    #[test]
    fn syntax_error_reports_line() {
        let text = MINIMAL.replace("n = 1000", "n = = 1000");
        match parse(&text).unwrap_err() {
            Error::Config(ConfigError::Parse { line, .. }) => assert_eq!(line, 3),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn dangling_estimand_reference() {
        let text = MINIMAL.replace("exposure = \"A\"", "exposure = \"B\"");
        assert!(matches!(
            parse(&text).unwrap_err(),
            Error::Config(ConfigError::DanglingReference { ref name, .. }) if name == "B"
        ));
    }

    #[test]
    fn exogenous_with_link_is_rejected() {
        let text = MINIMAL.replace(
            "distribution = { type = \"normal\", mean = 0.0, sd = 1.0 }",
            "distribution = { type = \"normal\", mean = 0.0, sd = 1.0 }\nlink = \"expit\"",
        );
        assert!(matches!(
            parse(&text).unwrap_err(),
            Error::Config(ConfigError::Range { .. })
        ));
    }
}
