//! Monte Carlo integration of true estimand values.
//!
//! Each estimand is a contrast between the outcome means of two intervention
//! branches. The outcome node is evaluated in [`EvalMode::Expectation`], so its
//! terminal Bernoulli or Gaussian draw never adds Monte Carlo error. Seed
//! replicates are run under seeds derived from the master seed; the reported
//! value is the mean over replicates and `replicate_se` their standard
//! deviation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dgm::{DgmSpec, Intervention, LinkFunction, NodeKind};
use crate::engine::{outcome_means, EvalMode, SeedSpec};
use crate::error::{Error, Result};
use crate::numeric::{mean, sample_sd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contrast {
    Difference,
    Ratio,
    OddsRatio,
}

impl Contrast {
    /// Contrast of branch means `a` (exposed) against `b` (referent).
    pub fn apply(self, a: f64, b: f64) -> Result<f64> {
        match self {
            Contrast::Difference => Ok(a - b),
            Contrast::Ratio => {
                if b == 0.0 {
                    return Err(Error::degenerate("referent mean is 0; ratio undefined"));
                }
                let r = a / b;
                if !r.is_finite() {
                    return Err(Error::degenerate(format!("ratio {a}/{b} is not finite")));
                }
                Ok(r)
            }
            Contrast::OddsRatio => {
                for (label, p) in [("exposed", a), ("referent", b)] {
                    if !(p > 0.0 && p < 1.0) {
                        return Err(Error::degenerate(format!(
                            "{label} mean {p} is not in (0, 1); odds undefined"
                        )));
                    }
                }
                Ok((a * (1.0 - b)) / (b * (1.0 - a)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalOddsRatio {
    pub exposure: String,
    pub a1: f64,
    pub a0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectScale {
    Difference,
    Ratio,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlledDirectEffect {
    pub exposure: String,
    pub mediator: String,
    pub m: f64,
    pub a1: f64,
    pub a0: f64,
    pub scale: EffectScale,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialOutcomeContrast {
    pub intervention_a: Intervention,
    pub intervention_b: Intervention,
    pub contrast: Contrast,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EstimandSpec {
    MarginalOddsRatio(MarginalOddsRatio),
    ControlledDirectEffect(ControlledDirectEffect),
    PotentialOutcomeContrast(PotentialOutcomeContrast),
}

impl EstimandSpec {
    pub fn name(&self) -> &'static str {
        match self {
            EstimandSpec::MarginalOddsRatio(_) => "marginal_odds_ratio",
            EstimandSpec::ControlledDirectEffect(_) => "controlled_direct_effect",
            EstimandSpec::PotentialOutcomeContrast(_) => "potential_outcome_contrast",
        }
    }

    /// The two branches and the contrast between their outcome means.
    pub fn branches(&self) -> (Intervention, Intervention, Contrast) {
        match self {
            EstimandSpec::MarginalOddsRatio(s) => (
                Intervention::new().set(&s.exposure, s.a1),
                Intervention::new().set(&s.exposure, s.a0),
                Contrast::OddsRatio,
            ),
            EstimandSpec::ControlledDirectEffect(s) => (
                Intervention::new().set(&s.exposure, s.a1).set(&s.mediator, s.m),
                Intervention::new().set(&s.exposure, s.a0).set(&s.mediator, s.m),
                match s.scale {
                    EffectScale::Difference => Contrast::Difference,
                    EffectScale::Ratio => Contrast::Ratio,
                },
            ),
            EstimandSpec::PotentialOutcomeContrast(s) => {
                (s.intervention_a.clone(), s.intervention_b.clone(), s.contrast)
            }
        }
    }

    /// Node references and level choices that make the estimand meaningful for `dgm`.
    pub fn check(&self, dgm: &DgmSpec) -> Result<()> {
        let exists = |name: &str| {
            dgm.node(name)
                .map(|_| ())
                .ok_or_else(|| Error::domain(format!("estimand references undeclared node `{name}`")))
        };
        match self {
            EstimandSpec::MarginalOddsRatio(s) => {
                exists(&s.exposure)?;
                if s.a1 == s.a0 {
                    return Err(Error::domain("a1 and a0 must differ"));
                }
                match dgm.outcome_node().map(|n| &n.kind) {
                    Some(NodeKind::Structural {
                        link: LinkFunction::Expit,
                        ..
                    }) => Ok(()),
                    _ => Err(Error::domain("marginal odds ratio requires an expit-link outcome")),
                }
            }
            EstimandSpec::ControlledDirectEffect(s) => {
                exists(&s.exposure)?;
                exists(&s.mediator)?;
                if s.exposure == s.mediator {
                    return Err(Error::domain("exposure and mediator must be distinct nodes"));
                }
                if s.a1 == s.a0 {
                    return Err(Error::domain("a1 and a0 must differ"));
                }
                Ok(())
            }
            EstimandSpec::PotentialOutcomeContrast(s) => {
                for (name, _) in s.intervention_a.iter().chain(s.intervention_b.iter()) {
                    exists(name)?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthResult {
    pub estimand: String,
    pub value: f64,
    /// Replicate-averaged outcome mean of each branch, keyed by intervention label.
    pub potential_means: BTreeMap<String, f64>,
    pub n: u64,
    pub master_seed: u64,
    pub chunk_size: u64,
    pub replicates: u64,
    /// Standard deviation of the estimand across seed replicates.
    pub replicate_se: Option<f64>,
    pub replicate_values: Vec<f64>,
}

/// μ̂: mean of the expectation-mode outcome under `intervention`.
pub fn potential_outcome_mean(dgm: &DgmSpec, intervention: &Intervention, n: usize, seed: &SeedSpec) -> Result<f64> {
    Ok(outcome_means(dgm, n, seed, &[intervention], EvalMode::Expectation)?[0])
}

pub fn marginal_odds_ratio(
    dgm: &DgmSpec,
    spec: &MarginalOddsRatio,
    n: usize,
    seed: &SeedSpec,
    replicates: usize,
) -> Result<TruthResult> {
    compute(dgm, &EstimandSpec::MarginalOddsRatio(spec.clone()), n, seed, replicates)
}

pub fn controlled_direct_effect(
    dgm: &DgmSpec,
    spec: &ControlledDirectEffect,
    n: usize,
    seed: &SeedSpec,
    replicates: usize,
) -> Result<TruthResult> {
    compute(
        dgm,
        &EstimandSpec::ControlledDirectEffect(spec.clone()),
        n,
        seed,
        replicates,
    )
}

pub fn potential_outcome_contrast(
    dgm: &DgmSpec,
    spec: &PotentialOutcomeContrast,
    n: usize,
    seed: &SeedSpec,
    replicates: usize,
) -> Result<TruthResult> {
    compute(
        dgm,
        &EstimandSpec::PotentialOutcomeContrast(spec.clone()),
        n,
        seed,
        replicates,
    )
}

pub fn compute(
    dgm: &DgmSpec,
    estimand: &EstimandSpec,
    n: usize,
    seed: &SeedSpec,
    replicates: usize,
) -> Result<TruthResult> {
    compute_with_mode(dgm, estimand, n, seed, replicates, EvalMode::Expectation)
}

/// As [`compute`], with the outcome node evaluated in `outcome_mode`.
/// `EvalMode::Draw` exists for variance comparisons only.
pub fn compute_with_mode(
    dgm: &DgmSpec,
    estimand: &EstimandSpec,
    n: usize,
    seed: &SeedSpec,
    replicates: usize,
    outcome_mode: EvalMode,
) -> Result<TruthResult> {
    if replicates == 0 {
        return Err(Error::domain("replicates must be at least 1"));
    }
    estimand.check(dgm)?;
    let (a, b, contrast) = estimand.branches();

    let mut values = Vec::with_capacity(replicates);
    let mut means_a = Vec::with_capacity(replicates);
    let mut means_b = Vec::with_capacity(replicates);
    for r in 0..replicates {
        let seed_r = seed.derive("replicate", r as u64);
        let mu = outcome_means(dgm, n, &seed_r, &[&a, &b], outcome_mode)?;
        values.push(contrast.apply(mu[0], mu[1])?);
        means_a.push(mu[0]);
        means_b.push(mu[1]);
    }

    let mut potential_means = BTreeMap::new();
    potential_means.insert(b.label(), mean(&means_b));
    potential_means.insert(a.label(), mean(&means_a));
    Ok(TruthResult {
        estimand: estimand.name().to_string(),
        value: mean(&values),
        potential_means,
        n: n as u64,
        master_seed: seed.master_seed,
        chunk_size: seed.chunk_size as u64,
        replicates: replicates as u64,
        replicate_se: sample_sd(&values),
        replicate_values: values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odds_ratio_contrast() {
        assert_eq!(Contrast::OddsRatio.apply(0.5, 0.5).unwrap(), 1.0);
        let or = Contrast::OddsRatio.apply(2.0 / 3.0, 0.5).unwrap();
        assert!((or - 2.0).abs() < 1e-15);
        assert!(matches!(Contrast::OddsRatio.apply(1.0, 0.5), Err(Error::Degenerate(_))));
        assert!(matches!(Contrast::OddsRatio.apply(0.5, 0.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn ratio_and_difference() {
        assert_eq!(Contrast::Difference.apply(0.3, 0.3).unwrap(), 0.0);
        assert_eq!(Contrast::Ratio.apply(0.6, 0.3).unwrap(), 2.0);
        assert!(matches!(Contrast::Ratio.apply(0.6, 0.0), Err(Error::Degenerate(_))));
    }
}
