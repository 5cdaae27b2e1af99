//! Command execution and report emission (JSON and CSV).

use serde::{Deserialize, Serialize};

use crate::config::{Format, RunConfig, TruthChoice};
use crate::dgm::{conditional_readoff, validate, Violation};
use crate::diagnostics::{detect_kappa, error_vs_n, seed_sweep, ErrorCurve, SeedSweep};
use crate::error::{ConfigError, Error, Result};
use crate::oracle::{quadrature_mu, LogisticNormalModel, QuadratureSpec};
use crate::simstudy::{run_study, PerformanceReport, StudyArm};
use crate::truth::{compute, Contrast, EstimandSpec, TruthResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Truth,
    Oracle,
    Diagnose,
    Simstudy,
    Validate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub quadrature: QuadratureSpec,
    pub model: LogisticNormalModel,
    pub a1: f64,
    pub a0: f64,
    pub mu_a1: f64,
    pub mu_a0: f64,
    pub psi_quadrature: f64,
    pub psi_mc: Option<f64>,
    pub mc_replicate_se: Option<f64>,
    pub abs_delta: Option<f64>,
    pub n: u64,
    pub replicates: u64,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub estimand: String,
    pub decimal_places: u32,
    pub kappa: Option<u64>,
    pub curve: ErrorCurve,
    pub seed_sweep: Option<SeedSweep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimstudyReport {
    pub estimand: String,
    /// Monte Carlo truth, when any estimator is judged against the estimand.
    pub truth: Option<TruthResult>,
    pub study: PerformanceReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Report {
    Truth(TruthResult),
    Oracle(OracleReport),
    Diagnose(DiagnoseReport),
    Simstudy(SimstudyReport),
    Validate(ValidationReport),
}

impl Report {
    /// Exit status after a successful run: 3 for a failed validation, else 0.
    pub fn exit_code(&self) -> i32 {
        match self {
            Report::Validate(v) if !v.valid => 3,
            _ => 0,
        }
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
                s.push('\n');
                Ok(s)
            }
            Format::Csv => self.to_csv(),
        }
    }

    fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut put = |rec: Vec<String>| w.write_record(&rec).expect("in-memory csv write");
        match self {
            Report::Truth(t) => {
                put(strs(&[
                    "estimand",
                    "value",
                    "replicate_se",
                    "n",
                    "replicates",
                    "master_seed",
                    "branch",
                    "potential_mean",
                ]));
                for (label, mu) in &t.potential_means {
                    put(vec![
                        t.estimand.clone(),
                        num(t.value),
                        opt(t.replicate_se),
                        t.n.to_string(),
                        t.replicates.to_string(),
                        t.master_seed.to_string(),
                        label.clone(),
                        num(*mu),
                    ]);
                }
            }
            Report::Oracle(o) => {
                put(strs(&[
                    "method",
                    "mu_a1",
                    "mu_a0",
                    "psi_quadrature",
                    "psi_mc",
                    "mc_replicate_se",
                    "abs_delta",
                ]));
                let method = match o.quadrature {
                    QuadratureSpec::GaussHermite { nodes } => format!("gauss_hermite({nodes})"),
                    QuadratureSpec::AdaptiveSimpson { abs_tol, range_sigmas } => {
                        format!("adaptive_simpson({abs_tol:e};{range_sigmas})")
                    }
                };
                put(vec![
                    method,
                    num(o.mu_a1),
                    num(o.mu_a0),
                    num(o.psi_quadrature),
                    opt(o.psi_mc),
                    opt(o.mc_replicate_se),
                    opt(o.abs_delta),
                ]);
            }
            Report::Diagnose(d) => {
                put(strs(&["n", "mean", "sd", "replicates", "is_kappa"]));
                for r in &d.curve.rows {
                    put(vec![
                        r.n.to_string(),
                        num(r.mean),
                        num(r.sd),
                        r.replicates.to_string(),
                        (d.kappa == Some(r.n)).to_string(),
                    ]);
                }
            }
            Report::Simstudy(s) => {
                put(strs(&[
                    "label",
                    "estimator",
                    "truth_used",
                    "n_sims",
                    "n_failed",
                    "mean_estimate",
                    "bias",
                    "bias_mcse",
                    "empirical_se",
                    "mse",
                    "coverage",
                    "coverage_mcse",
                    "error",
                ]));
                for e in &s.study.estimators {
                    let p = e.performance.as_ref();
                    put(vec![
                        e.label.clone(),
                        e.estimator.clone(),
                        num(e.truth_used),
                        e.n_sims.to_string(),
                        e.n_failed.to_string(),
                        opt(p.map(|p| p.mean_estimate)),
                        opt(p.map(|p| p.bias)),
                        opt(p.map(|p| p.bias_mcse)),
                        opt(p.map(|p| p.empirical_se)),
                        opt(p.map(|p| p.mse)),
                        opt(p.map(|p| p.coverage)),
                        opt(p.map(|p| p.coverage_mcse)),
                        e.error.clone().unwrap_or_default(),
                    ]);
                }
            }
            Report::Validate(v) => {
                put(strs(&["node", "violation"]));
                for x in &v.violations {
                    put(vec![x.node.clone().unwrap_or_default(), x.message.clone()]);
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::domain(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn strs(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

/// 17 significant digits: exact round trip for f64.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Runs `command` on a parsed configuration.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<Report> {
    if command == Command::Validate {
        let mut violations = validate(&cfg.dgm);
        if violations.is_empty() {
            if let Err(e) = cfg.estimand.check(&cfg.dgm) {
                violations.push(Violation {
                    node: None,
                    message: e.to_string(),
                });
            }
        }
        return Ok(Report::Validate(ValidationReport {
            valid: violations.is_empty(),
            violations,
        }));
    }
    let violations = validate(&cfg.dgm);
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    match command {
        Command::Truth => Ok(Report::Truth(compute(
            &cfg.dgm,
            &cfg.estimand,
            cfg.n,
            &cfg.seed,
            cfg.replicates,
        )?)),
        Command::Oracle => run_oracle(cfg).map(Report::Oracle),
        Command::Diagnose => {
            let block = cfg
                .diagnose
                .as_ref()
                .ok_or_else(|| ConfigError::MissingBlock("diagnose".into()))?;
            let curve = error_vs_n(
                &cfg.dgm,
                &cfg.estimand,
                &block.n_grid,
                block.replicates_per_n,
                &cfg.seed,
            )?;
            let kappa = if curve.rows.len() >= 2 {
                detect_kappa(&curve, block.decimal_places)?.kappa
            } else {
                None
            };
            let sweep = if block.seeds.is_empty() {
                None
            } else {
                Some(seed_sweep(
                    &cfg.dgm,
                    &cfg.estimand,
                    cfg.n,
                    cfg.seed.chunk_size,
                    &block.seeds,
                )?)
            };
            Ok(Report::Diagnose(DiagnoseReport {
                estimand: cfg.estimand.name().to_string(),
                decimal_places: block.decimal_places,
                kappa,
                curve,
                seed_sweep: sweep,
            }))
        }
        Command::Simstudy => {
            let block = cfg
                .simstudy
                .as_ref()
                .ok_or_else(|| ConfigError::MissingBlock("simstudy".into()))?;
            let truth = if block.estimators.iter().any(|e| e.truth == TruthChoice::Estimand) {
                Some(compute(&cfg.dgm, &cfg.estimand, cfg.n, &cfg.seed, cfg.replicates)?)
            } else {
                None
            };
            let arms = block
                .estimators
                .iter()
                .map(|e| {
                    let value = match &e.truth {
                        TruthChoice::Estimand => truth.as_ref().expect("computed above").value,
                        TruthChoice::Conditional => conditional_readoff(&cfg.dgm, e.spec.exposure())?,
                        TruthChoice::Value(v) => *v,
                    };
                    Ok(StudyArm {
                        label: e.label.clone(),
                        estimator: e.spec.clone(),
                        truth: value,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let study = run_study(
                &cfg.dgm,
                &arms,
                block.n_sims,
                block.sample_size,
                &cfg.seed,
                block.keep_points,
            )?;
            Ok(Report::Simstudy(SimstudyReport {
                estimand: cfg.estimand.name().to_string(),
                truth,
                study,
            }))
        }
        Command::Validate => unreachable!(),
    }
}

fn run_oracle(cfg: &RunConfig) -> Result<OracleReport> {
    let EstimandSpec::MarginalOddsRatio(spec) = &cfg.estimand else {
        return Err(Error::domain(
            "the quadrature oracle supports marginal_odds_ratio estimands only",
        ));
    };
    let block = cfg.oracle.clone().unwrap_or_default();
    let model = LogisticNormalModel::from_dgm(&cfg.dgm, &spec.exposure)?;
    let mu_a1 = quadrature_mu(&model, spec.a1, &block.quadrature)?;
    let mu_a0 = quadrature_mu(&model, spec.a0, &block.quadrature)?;
    let psi_quadrature = Contrast::OddsRatio.apply(mu_a1, mu_a0)?;
    let (psi_mc, mc_replicate_se) = if block.compare_mc {
        let t = compute(&cfg.dgm, &cfg.estimand, cfg.n, &cfg.seed, cfg.replicates)?;
        (Some(t.value), t.replicate_se)
    } else {
        (None, None)
    };
    Ok(OracleReport {
        quadrature: block.quadrature,
        model,
        a1: spec.a1,
        a0: spec.a0,
        mu_a1,
        mu_a0,
        psi_quadrature,
        psi_mc,
        mc_replicate_se,
        abs_delta: psi_mc.map(|m| (m - psi_quadrature).abs()),
        n: cfg.n as u64,
        replicates: cfg.replicates as u64,
        master_seed: cfg.seed.master_seed,
    })
}
