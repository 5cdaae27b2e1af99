//! Monte Carlo error of the truth: error-vs-N curves, the κ stability
//! boundary and seed sweeps.

use serde::{Deserialize, Serialize};

use crate::dgm::DgmSpec;
use crate::engine::SeedSpec;
use crate::error::{Error, Result};
use crate::truth::{compute, EstimandSpec};

pub const DEFAULT_DECIMAL_PLACES: u32 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurveRow {
    pub n: u64,
    pub mean: f64,
    pub sd: f64,
    pub replicates: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub rows: Vec<ErrorCurveRow>,
}

impl ErrorCurve {
    /// Curve from `(n, mean)` pairs, for analysing externally produced runs.
    pub fn from_means(points: &[(u64, f64)], replicates: u64) -> Self {
        ErrorCurve {
            rows: points
                .iter()
                .map(|&(n, mean)| ErrorCurveRow {
                    n,
                    mean,
                    sd: 0.0,
                    replicates,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    /// `None` when no grid point is stable against every larger one.
    pub kappa: Option<u64>,
    pub decimal_places: u32,
    pub grid: ErrorCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedValue {
    pub seed: u64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSweep {
    pub entries: Vec<SeedValue>,
    pub range: f64,
}

/// Mean and standard deviation of the estimand at each grid size.
pub fn error_vs_n(
    dgm: &DgmSpec,
    estimand: &EstimandSpec,
    n_grid: &[usize],
    replicates_per_n: usize,
    seed: &SeedSpec,
) -> Result<ErrorCurve> {
    if n_grid.is_empty() {
        return Err(Error::domain("n grid is empty"));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("n grid must be strictly increasing"));
    }
    if replicates_per_n < 2 {
        return Err(Error::domain("error curves need at least 2 replicates per n"));
    }
    let rows = n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let t = compute(dgm, estimand, n, &seed.derive("grid", i as u64), replicates_per_n)?;
            Ok(ErrorCurveRow {
                n: n as u64,
                mean: t.value,
                sd: t.replicate_se.unwrap_or(0.0),
                replicates: replicates_per_n as u64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorCurve { rows })
}

/// Smallest grid n whose mean differs from the mean at every larger grid n by
/// less than `10^-decimal_places`. The largest grid point has nothing to be
/// compared against and is never returned.
pub fn detect_kappa(curve: &ErrorCurve, decimal_places: u32) -> Result<KappaResult> {
    if curve.rows.len() < 2 {
        return Err(Error::domain("kappa detection needs at least 2 grid rows"));
    }
    if decimal_places == 0 {
        return Err(Error::domain("decimal_places must be at least 1"));
    }
    let tol = 10f64.powi(-(decimal_places as i32));
    let rows = &curve.rows;
    let kappa = (0..rows.len() - 1)
        .find(|&i| rows[i + 1..].iter().all(|r| (r.mean - rows[i].mean).abs() < tol))
        .map(|i| rows[i].n);
    Ok(KappaResult {
        kappa,
        decimal_places,
        grid: curve.clone(),
    })
}

/// One single-replicate truth evaluation per master seed.
pub fn seed_sweep(
    dgm: &DgmSpec,
    estimand: &EstimandSpec,
    n: usize,
    chunk_size: usize,
    seeds: &[u64],
) -> Result<SeedSweep> {
    if seeds.len() < 2 {
        return Err(Error::domain("seed sweep needs at least 2 seeds"));
    }
    let entries = seeds
        .iter()
        .map(|&s| {
            let t = compute(dgm, estimand, n, &SeedSpec::new(s).with_chunk_size(chunk_size), 1)?;
            Ok(SeedValue {
                seed: s,
                value: t.value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = entries.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
        (lo.min(e.value), hi.max(e.value))
    });
    Ok(SeedSweep {
        entries,
        range: hi - lo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kappa_examples() {
        let c = ErrorCurve::from_means(
            &[
                (1_000, 1.23456),
                (10_000, 1.23001),
                (100_000, 1.23002),
                (1_000_000, 1.230021),
            ],
            2,
        );
        assert_eq!(detect_kappa(&c, 4).unwrap().kappa, Some(10_000));

        let flat = ErrorCurve::from_means(&[(10, 0.7), (100, 0.7), (1000, 0.7)], 2);
        assert_eq!(detect_kappa(&flat, 10).unwrap().kappa, Some(10));

        let drift = ErrorCurve::from_means(&[(10, 0.1), (100, 0.2), (1000, 0.3)], 2);
        assert_eq!(detect_kappa(&drift, 3).unwrap().kappa, None);
    }

    #[test]
    fn kappa_needs_two_rows() {
        let c = ErrorCurve::from_means(&[(10, 0.1)], 2);
        assert!(detect_kappa(&c, 5).is_err());
    }

    proptest! {
        #[test]
        fn kappa_is_monotone_in_decimal_places(
            means in proptest::collection::vec(-1.0f64..1.0, 2..8),
            d in 2u32..8,
        ) {
            let pts: Vec<(u64, f64)> = means.iter().enumerate().map(|(i, &m)| (10u64.pow(i as u32 + 1), m)).collect();
            let c = ErrorCurve::from_means(&pts, 2);
            let strict = detect_kappa(&c, d).unwrap().kappa;
            let loose = detect_kappa(&c, d - 1).unwrap().kappa;
            if let Some(k) = strict {
                prop_assert!(loose.is_some());
                prop_assert!(loose.unwrap() <= k);
            }
        }
    }
}
