#![allow(dead_code)]

use std::path::{Path, PathBuf};

use mctruth::truth::{ControlledDirectEffect, EffectScale, MarginalOddsRatio};
use mctruth::{DgmSpec, DistributionSpec, EstimandSpec, LinkFunction, NodeSpec, Noise, Term};

pub fn ln2() -> f64 {
    2f64.ln()
}

pub fn ln1_5() -> f64 {
    1.5f64.ln()
}

/// C ~ N(mu, sigma^2); A ~ Bernoulli(expit(gamma*C)); Y ~ Bernoulli(expit(b0 + b1*A + b2*C)).
pub fn logistic_normal(b0: f64, b1: f64, b2: f64, mu: f64, sigma: f64, gamma: f64) -> DgmSpec {
    DgmSpec::new(
        vec![
            NodeSpec::exogenous("C", DistributionSpec::Normal { mean: mu, sd: sigma }),
            NodeSpec::structural(
                "A",
                0.0,
                vec![Term::new("C", gamma)],
                LinkFunction::Expit,
                Noise::BernoulliDraw,
            ),
            NodeSpec::structural(
                "Y",
                b0,
                vec![Term::new("A", b1), Term::new("C", b2)],
                LinkFunction::Expit,
                Noise::BernoulliDraw,
            ),
        ],
        "Y",
    )
}

/// Reference parameters for the single-confounder model.
pub fn example1() -> DgmSpec {
    logistic_normal(-2.0, ln2(), ln1_5(), 0.0, 1.0, 0.5)
}

pub fn mor() -> EstimandSpec {
    EstimandSpec::MarginalOddsRatio(MarginalOddsRatio {
        exposure: "A".into(),
        a1: 1.0,
        a0: 0.0,
    })
}

/// Coefficients of the mediation model with exposure-induced confounder L.
#[derive(Debug, Clone, Copy)]
pub struct MediationParams {
    pub a_c: f64,
    pub l0: f64,
    pub l_a: f64,
    pub l_u: f64,
    pub m_a: f64,
    pub m_l: f64,
    pub m_c: f64,
    pub y0: f64,
    pub y_a: f64,
    pub y_c: f64,
    pub y_m: f64,
    pub y_l: f64,
    pub y_u: f64,
}

impl Default for MediationParams {
    fn default() -> Self {
        MediationParams {
            a_c: 0.4,
            l0: -0.5,
            l_a: 0.8,
            l_u: 0.6,
            m_a: 0.7,
            m_l: 0.5,
            m_c: 0.3,
            y0: -1.5,
            y_a: 0.5,
            y_c: 0.4,
            y_m: 0.6,
            y_l: 0.7,
            y_u: 0.5,
        }
    }
}

/// C, U ~ N(0,1); A <- C; L <- A, U; M <- A, L, C; Y <- A, C, M, L, U. All expit with Bernoulli draws.
pub fn example2(p: MediationParams) -> DgmSpec {
    let bern = |name: &str, b0: f64, terms: Vec<Term>| {
        NodeSpec::structural(name, b0, terms, LinkFunction::Expit, Noise::BernoulliDraw)
    };
    DgmSpec::new(
        vec![
            NodeSpec::exogenous("C", DistributionSpec::Normal { mean: 0.0, sd: 1.0 }),
            NodeSpec::exogenous("U", DistributionSpec::Normal { mean: 0.0, sd: 1.0 }),
            bern("A", 0.0, vec![Term::new("C", p.a_c)]),
            bern("L", p.l0, vec![Term::new("A", p.l_a), Term::new("U", p.l_u)]),
            bern(
                "M",
                -0.3,
                vec![Term::new("A", p.m_a), Term::new("L", p.m_l), Term::new("C", p.m_c)],
            ),
            bern(
                "Y",
                p.y0,
                vec![
                    Term::new("A", p.y_a),
                    Term::new("C", p.y_c),
                    Term::new("M", p.y_m),
                    Term::new("L", p.y_l),
                    Term::new("U", p.y_u),
                ],
            ),
        ],
        "Y",
    )
}

pub fn cde(scale: EffectScale) -> EstimandSpec {
    EstimandSpec::ControlledDirectEffect(ControlledDirectEffect {
        exposure: "A".into(),
        mediator: "M".into(),
        m: 0.0,
        a1: 1.0,
        a0: 0.0,
        scale,
    })
}

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_mctruth"))
}

pub fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

/// Single-confounder config text with every command block, sized for quick runs.
pub fn small_config(master: u64) -> String {
    format!(
        r#"[run]
n = 20000
replicates = 3

[seed]
master = {master}
chunk_size = 4096

[dgm]
outcome = "Y"

[[dgm.nodes]]
name = "C"
distribution = {{ type = "normal", mean = 0.0, sd = 1.0 }}

[[dgm.nodes]]
name = "A"
intercept = 0.0
terms = [{{ parent = "C", coefficient = 0.5 }}]
link = "expit"
noise = "bernoulli"

[[dgm.nodes]]
name = "Y"
intercept = -2.0
terms = [{{ parent = "A", coefficient = 0.6931471805599453 }}, {{ parent = "C", coefficient = 0.4054651081081644 }}]
link = "expit"
noise = "bernoulli"

[estimand]
type = "marginal_odds_ratio"
exposure = "A"

[oracle]
method = "gauss_hermite"
nodes = 64

[diagnose]
n_grid = [1000, 4000, 16000]
replicates_per_n = 4
decimal_places = 3
seeds = [1, 2, 3]

[simstudy]
n_sims = 24
sample_size = 400

[[simstudy.estimators]]
type = "conditional_logistic"
exposure = "A"
truth = "conditional"

[[simstudy.estimators]]
type = "marginal_standardization"
exposure = "A"
bootstrap_reps = 100

[[simstudy.estimators]]
type = "ipw"
exposure = "A"
propensity_covariates = ["C"]
bootstrap_reps = 100
"#
    )
}
