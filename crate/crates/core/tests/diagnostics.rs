mod common;

use mctruth::diagnostics::{detect_kappa, error_vs_n, seed_sweep, ErrorCurve};
use mctruth::truth::compute;
use mctruth::{DgmSpec, DistributionSpec, Error, LinkFunction, NodeSpec, Noise, SeedSpec, Term};
use proptest::prelude::*;

use common::*;

fn deterministic() -> DgmSpec {
    DgmSpec::new(
        vec![
            NodeSpec::structural("A", 0.3, vec![], LinkFunction::Identity, Noise::None),
            NodeSpec::structural("Y", -1.0, vec![Term::new("A", 0.5)], LinkFunction::Expit, Noise::None),
        ],
        "Y",
    )
}

#[test]
fn deterministic_dgm_has_zero_sd() {
    let c = error_vs_n(&deterministic(), &mor(), &[1_000], 5, &SeedSpec::new(1)).unwrap();
    assert_eq!(c.rows.len(), 1);
    assert_eq!(c.rows[0].sd, 0.0);
    assert_eq!(c.rows[0].replicates, 5);
}

#[test]
fn grid_preconditions() {
    let seed = SeedSpec::new(1);
    for grid in [&[][..], &[100, 100][..], &[1_000, 100][..]] {
        assert!(
            matches!(error_vs_n(&example1(), &mor(), grid, 5, &seed), Err(Error::Domain(_))),
            "{grid:?}"
        );
    }
    assert!(matches!(
        error_vs_n(&example1(), &mor(), &[100], 1, &seed),
        Err(Error::Domain(_))
    ));
}

#[test]
fn error_curve_is_reproducible_and_decays() {
    let seed = SeedSpec::new(2);
    let a = error_vs_n(&example1(), &mor(), &[10_000, 100_000, 1_000_000], 30, &seed).unwrap();
    let b = error_vs_n(&example1(), &mor(), &[10_000, 100_000, 1_000_000], 30, &seed).unwrap();
    assert_eq!(a, b);
    assert!(a.rows.windows(2).all(|w| w[1].sd < w[0].sd), "{a:?}");
}

#[test]
fn duplicate_seeds_agree() {
    let s = seed_sweep(&example1(), &mor(), 20_000, 4_096, &[5, 6, 5]).unwrap();
    assert_eq!(s.entries[0].value.to_bits(), s.entries[2].value.to_bits());
    assert_ne!(s.entries[0].value, s.entries[1].value);
    assert!(s.range > 0.0);
}

#[test]
fn one_seed_is_rejected() {
    assert!(matches!(
        seed_sweep(&example1(), &mor(), 1_000, 1_024, &[5]),
        Err(Error::Domain(_))
    ));
}

#[test]
fn seed_range_is_within_ten_replicate_sds() {
    let n = 10_000_000;
    let seeds: Vec<u64> = (100..110).collect();
    let sweep = seed_sweep(&example1(), &mor(), n, mctruth::engine::DEFAULT_CHUNK_SIZE, &seeds).unwrap();
    let t = compute(&example1(), &mor(), n, &SeedSpec::new(1), 10).unwrap();
    let se = t.replicate_se.unwrap();
    assert!(sweep.range < 10.0 * se, "range {} vs se {se}", sweep.range);
}

#[test]
fn kappa_requires_two_rows_and_positive_d() {
    let one = ErrorCurve::from_means(&[(1_000, 1.0)], 2);
    assert!(matches!(detect_kappa(&one, 3), Err(Error::Domain(_))));
    let two = ErrorCurve::from_means(&[(1_000, 1.0), (2_000, 1.0)], 2);
    assert!(matches!(detect_kappa(&two, 0), Err(Error::Domain(_))));
}

#[test]
fn kappa_uses_every_larger_point() {
    // Adjacent pairs are close at 10^3 and 10^4, but 10^5 drifts away from 10^3.
    let c = ErrorCurve::from_means(
        &[
            (1_000, 1.0000),
            (10_000, 1.00008),
            (100_000, 1.00016),
            (1_000_000, 1.00017),
        ],
        10,
    );
    assert_eq!(detect_kappa(&c, 4).unwrap().kappa, Some(10_000));
}

fn curve_strategy() -> impl Strategy<Value = ErrorCurve> {
    prop::collection::vec(-1e-2..1e-2f64, 2..8).prop_map(|deltas| {
        let mut m = 1.0;
        let pts: Vec<(u64, f64)> = deltas
            .iter()
            .enumerate()
            .map(|(i, d)| {
                m += d / (i + 1) as f64;
                (10u64.pow(i as u32 + 2), m)
            })
            .collect();
        ErrorCurve::from_means(&pts, 5)
    })
}

proptest! {
    #[test]
    fn kappa_is_a_grid_member_and_monotone(curve in curve_strategy(), d in 2u32..8) {
        let hi = detect_kappa(&curve, d).unwrap();
        let lo = detect_kappa(&curve, d - 1).unwrap();
        if let Some(k) = hi.kappa {
            prop_assert!(curve.rows.iter().any(|r| r.n == k));
            prop_assert!(lo.kappa.is_some_and(|l| l <= k));
        }
        prop_assert_eq!(detect_kappa(&curve, d).unwrap(), hi);
    }
}

#[test]
fn deterministic_exogenous_only_dgm_is_valid() {
    let dgm = DgmSpec::new(
        vec![
            NodeSpec::exogenous("A", DistributionSpec::Uniform { low: 0.0, high: 1.0 }),
            NodeSpec::structural("Y", 0.0, vec![], LinkFunction::Expit, Noise::None),
        ],
        "Y",
    );
    let c = error_vs_n(&dgm, &mor(), &[100, 1_000], 3, &SeedSpec::new(3)).unwrap();
    assert!(c.rows.iter().all(|r| r.sd == 0.0));
}
