//! Deterministic quadrature for the single-Normal-confounder logistic model
//!
//! ```text
//! mu(a) = ∫ expit(b0 + b1·a + b2·c) · N(c; mu, sigma²) dc
//! ```
//!
//! used as an independent check on the Monte Carlo truth.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dgm::{logistic, DgmSpec, DistributionSpec, LinkFunction, NodeKind};
use crate::error::{Error, Result};
use crate::truth::Contrast;

pub const MAX_HERMITE_NODES: usize = 200;
pub const MIN_SIMPSON_TOL: f64 = 1e-14;
const SIMPSON_MAX_DEPTH: u32 = 60;
const SIMPSON_MIN_DEPTH: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum QuadratureSpec {
    GaussHermite { nodes: usize },
    AdaptiveSimpson { abs_tol: f64, range_sigmas: f64 },
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec::GaussHermite { nodes: 64 }
    }
}

impl QuadratureSpec {
    pub fn adaptive_simpson_default() -> Self {
        QuadratureSpec::AdaptiveSimpson {
            abs_tol: 1e-12,
            range_sigmas: 10.0,
        }
    }

    pub fn check(&self) -> Result<()> {
        match *self {
            QuadratureSpec::GaussHermite { nodes } => {
                if !(2..=MAX_HERMITE_NODES).contains(&nodes) {
                    return Err(Error::domain(format!(
                        "Gauss-Hermite node count must be in [2, {MAX_HERMITE_NODES}], got {nodes}"
                    )));
                }
            }
            QuadratureSpec::AdaptiveSimpson { abs_tol, range_sigmas } => {
                if !(abs_tol >= MIN_SIMPSON_TOL && abs_tol.is_finite()) {
                    return Err(Error::domain(format!(
                        "adaptive Simpson abs_tol must be >= {MIN_SIMPSON_TOL:e}, got {abs_tol}"
                    )));
                }
                if !(range_sigmas > 0.0 && range_sigmas.is_finite()) {
                    return Err(Error::domain("adaptive Simpson range_sigmas must be > 0"));
                }
            }
        }
        Ok(())
    }
}

/// Coefficients of the logistic outcome model and the Normal confounder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticNormalModel {
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl LogisticNormalModel {
    /// Extracts the model from a DGM whose outcome is `expit(b0 + b1·exposure + b2·C)`
    /// with `C` an exogenous Normal node.
    pub fn from_dgm(dgm: &DgmSpec, exposure: &str) -> Result<Self> {
        let unsupported = |why: &str| {
            Error::domain(format!(
                "quadrature oracle needs a single-Normal-confounder logistic outcome: {why}"
            ))
        };
        let outcome = dgm.outcome_node().ok_or_else(|| unsupported("outcome not declared"))?;
        let NodeKind::Structural {
            intercept,
            terms,
            link: LinkFunction::Expit,
            ..
        } = &outcome.kind
        else {
            return Err(unsupported("outcome is not an expit-link structural node"));
        };
        let mut beta1 = 0.0;
        let mut confounder: Option<(&str, f64)> = None;
        for t in terms {
            if t.parent == exposure {
                beta1 += t.coefficient;
            } else {
                match confounder {
                    Some((name, coef)) if name == t.parent => confounder = Some((name, coef + t.coefficient)),
                    Some(_) => return Err(unsupported("more than one covariate besides the exposure")),
                    None => confounder = Some((&t.parent, t.coefficient)),
                }
            }
        }
        let (beta2, mu, sigma) = match confounder {
            None => (0.0, 0.0, 1.0),
            Some((name, coef)) => match dgm.node(name).map(|n| &n.kind) {
                Some(NodeKind::Exogenous {
                    dist: DistributionSpec::Normal { mean, sd },
                }) => (coef, *mean, *sd),
                _ => return Err(unsupported(&format!("`{name}` is not an exogenous Normal node"))),
            },
        };
        Ok(LogisticNormalModel {
            beta0: *intercept,
            beta1,
            beta2,
            mu,
            sigma,
        })
    }

    fn linear_predictor(&self, a: f64, z: f64) -> f64 {
        self.beta0 + self.beta1 * a + self.beta2 * (self.mu + self.sigma * z)
    }
}

/// Gauss–Hermite nodes and weights for the weight function `exp(-t²)`, nodes
/// ascending.
///
/// Initial nodes come from the eigenvalues of the symmetric tridiagonal Jacobi
/// matrix (Golub–Welsch); each is then polished by Newton iteration on the
/// orthonormal Hermite recurrence, and the weight is `1 / (n · p_{n-1}(t)²)`.
pub fn gauss_hermite_rule(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    QuadratureSpec::GaussHermite { nodes: n }.check()?;
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            ((i.max(j)) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.total_cmp(b));

    let mut weights = Vec::with_capacity(n);
    for t in nodes.iter_mut() {
        for _ in 0..10 {
            let (p_n, p_prev) = orthonormal_hermite(n, *t);
            let step = p_n / ((2.0 * n as f64).sqrt() * p_prev);
            *t -= step;
            if step.abs() <= 1e-15 * t.abs().max(1.0) {
                break;
            }
        }
        let (_, p_prev) = orthonormal_hermite(n, *t);
        weights.push(1.0 / (n as f64 * p_prev * p_prev));
    }
    // Enforce exact symmetry.
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        let w = 0.5 * (weights[i] + weights[j]);
        nodes[i] = -x;
        nodes[j] = x;
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// `(p_n(t), p_{n-1}(t))` for Hermite polynomials orthonormal under `exp(-t²)`.
fn orthonormal_hermite(n: usize, t: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25);
    for k in 0..n {
        let next = t * (2.0 / (k + 1) as f64).sqrt() * cur - (k as f64 / (k + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson_rec(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let (lm, flm, left) = simpson(f, a, fa, m, fm);
    let (rm, frm, right) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth >= SIMPSON_MAX_DEPTH || (depth >= SIMPSON_MIN_DEPTH && delta.abs() <= 15.0 * eps) {
        return left + right + delta / 15.0;
    }
    adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, eps / 2.0, depth + 1)
        + adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, eps / 2.0, depth + 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `eps`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(&f, a, fa, b, fb);
    adaptive_simpson_rec(&f, a, fa, b, fb, m, fm, whole, eps, 0)
}

/// μ(a): marginal outcome probability with the exposure set to `a`.
pub fn quadrature_mu(model: &LogisticNormalModel, a: f64, spec: &QuadratureSpec) -> Result<f64> {
    spec.check()?;
    if !(model.sigma > 0.0 && model.sigma.is_finite()) {
        return Err(Error::domain(format!("sigma must be > 0, got {}", model.sigma)));
    }
    let value = match *spec {
        QuadratureSpec::GaussHermite { nodes } => {
            let (t, w) = gauss_hermite_rule(nodes)?;
            let s: f64 = t
                .iter()
                .zip(&w)
                .map(|(&t, &w)| w * logistic(model.linear_predictor(a, std::f64::consts::SQRT_2 * t)))
                .sum();
            s / std::f64::consts::PI.sqrt()
        }
        QuadratureSpec::AdaptiveSimpson { abs_tol, range_sigmas } => {
            let inv_sqrt_2pi = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
            adaptive_simpson(
                |z| logistic(model.linear_predictor(a, z)) * inv_sqrt_2pi * (-0.5 * z * z).exp(),
                -range_sigmas,
                range_sigmas,
                abs_tol,
            )
        }
    };
    Ok(value)
}

/// Marginal odds ratio `[μ(1)/(1−μ(1))] / [μ(0)/(1−μ(0))]`.
pub fn quadrature_psi(model: &LogisticNormalModel, spec: &QuadratureSpec) -> Result<f64> {
    quadrature_psi_at(model, 1.0, 0.0, spec)
}

/// Marginal odds ratio contrasting exposure levels `a1` and `a0`.
pub fn quadrature_psi_at(model: &LogisticNormalModel, a1: f64, a0: f64, spec: &QuadratureSpec) -> Result<f64> {
    let mu1 = quadrature_mu(model, a1, spec)?;
    let mu0 = quadrature_mu(model, a0, spec)?;
    Contrast::OddsRatio.apply(mu1, mu0)
}
