//! Monte Carlo integration of true estimand values for simulation studies.
//!
//! A data-generating mechanism (DGM) is declared as an ordered list of
//! exogenous and link-linear structural nodes. The [`engine`] samples it under
//! interventions with reproducible, worker-count independent streams; [`truth`]
//! turns those samples into potential-outcome means and contrasts (marginal
//! odds ratios, controlled direct effects); [`oracle`] checks the
//! single-confounder case with deterministic quadrature; [`diagnostics`]
//! quantifies Monte Carlo error; and [`simstudy`] evaluates estimators
//! against the computed truth.

pub mod config;
pub mod dgm;
pub mod diagnostics;
pub mod engine;
pub mod error;
pub mod numeric;
pub mod oracle;
pub mod report;
pub mod rng;
pub mod simstudy;
pub mod truth;

pub use dgm::{
    conditional_readoff, expit, validate, DgmSpec, DistributionSpec, Intervention, LinkFunction, NodeKind, NodeSpec,
    Noise, Term, Violation,
};
pub use engine::{
    ingest_empirical, simulate, simulate_counterfactual_pair, Dataset, EmpiricalSource, EvalMode, SeedSpec,
};
pub use error::{Error, Result};
pub use truth::{EstimandSpec, TruthResult};
