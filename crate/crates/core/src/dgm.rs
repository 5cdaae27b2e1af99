//! Structural data-generating mechanisms.
//!
//! A [`DgmSpec`] is an ordered list of nodes. Each node is either exogenous
//! (drawn from a [`DistributionSpec`]) or structural: a link-transformed linear
//! predictor over earlier nodes, optionally followed by a Bernoulli or Gaussian
//! draw. Declaration order is the evaluation order, so a spec that passes
//! [`validate`] is acyclic by construction.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::engine::EmpiricalSource;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    Normal {
        mean: f64,
        sd: f64,
    },
    Bernoulli {
        p: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    /// One column of a registered empirical source. Nodes naming the same
    /// source resample whole rows jointly.
    Empirical {
        source: String,
        column: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkFunction {
    Identity,
    Expit,
    Exp,
}

impl LinkFunction {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            LinkFunction::Identity => x,
            LinkFunction::Expit => logistic(x),
            LinkFunction::Exp => x.exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    None,
    /// Draw a {0,1} value with probability equal to the link output.
    BernoulliDraw,
    /// Add a N(0, sd²) draw to the link output.
    GaussianDraw {
        sd: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub parent: String,
    pub coefficient: f64,
}

impl Term {
    pub fn new(parent: impl Into<String>, coefficient: f64) -> Self {
        Term {
            parent: parent.into(),
            coefficient,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Exogenous {
        dist: DistributionSpec,
    },
    Structural {
        intercept: f64,
        terms: Vec<Term>,
        link: LinkFunction,
        noise: Noise,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub name: String,
    pub kind: NodeKind,
}

impl NodeSpec {
    pub fn exogenous(name: impl Into<String>, dist: DistributionSpec) -> Self {
        NodeSpec {
            name: name.into(),
            kind: NodeKind::Exogenous { dist },
        }
    }

    pub fn structural(
        name: impl Into<String>,
        intercept: f64,
        terms: Vec<Term>,
        link: LinkFunction,
        noise: Noise,
    ) -> Self {
        NodeSpec {
            name: name.into(),
            kind: NodeKind::Structural {
                intercept,
                terms,
                link,
                noise,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgmSpec {
    pub nodes: Vec<NodeSpec>,
    pub outcome: String,
    /// Empirical sources available to `DistributionSpec::Empirical` nodes.
    pub sources: BTreeMap<String, Arc<EmpiricalSource>>,
}

impl DgmSpec {
    pub fn new(nodes: Vec<NodeSpec>, outcome: impl Into<String>) -> Self {
        DgmSpec {
            nodes,
            outcome: outcome.into(),
            sources: BTreeMap::new(),
        }
    }

    pub fn with_source(mut self, name: impl Into<String>, source: EmpiricalSource) -> Self {
        self.sources.insert(name.into(), Arc::new(source));
        self
    }

    pub fn node(&self, name: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    pub fn outcome_node(&self) -> Option<&NodeSpec> {
        self.node(&self.outcome)
    }

    /// Direct parents of the outcome node in declaration order of its terms.
    pub fn outcome_parents(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        match self.outcome_node().map(|n| &n.kind) {
            Some(NodeKind::Structural { terms, .. }) => terms
                .iter()
                .filter(|t| seen.insert(t.parent.clone()))
                .map(|t| t.parent.clone())
                .collect(),
            _ => Vec::new(),
        }
    }
}

/// Fixed-value assignments to nodes ("do" operation). Ordered by node name so
/// labels and iteration are deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Intervention {
    assignments: BTreeMap<String, f64>,
}

impl Intervention {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(mut self, node: impl Into<String>, value: f64) -> Self {
        self.assignments.insert(node.into(), value);
        self
    }

    pub fn get(&self, node: &str) -> Option<f64> {
        self.assignments.get(node).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.assignments.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// `A=1,M=0` style label.
    pub fn label(&self) -> String {
        self.assignments
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl FromIterator<(String, f64)> for Intervention {
    fn from_iter<I: IntoIterator<Item = (String, f64)>>(iter: I) -> Self {
        Intervention {
            assignments: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Violation {
    pub node: Option<String>,
    pub message: String,
}

impl Violation {
    fn at(node: &str, message: impl Into<String>) -> Self {
        Violation {
            node: Some(node.to_string()),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            Some(n) => write!(f, "node `{n}`: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Logistic function in the overflow-safe two-branch form.
#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Checked inverse-logit: rejects non-finite input.
pub fn expit(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("expit of non-finite value {x}")));
    }
    Ok(logistic(x))
}

/// Every structural violation in `dgm`. Empty iff the spec is well formed.
pub fn validate(dgm: &DgmSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut declared: HashSet<&str> = HashSet::new();
    let all_names: HashSet<&str> = dgm.nodes.iter().map(|n| n.name.as_str()).collect();

    for node in &dgm.nodes {
        let name = node.name.as_str();
        if name.is_empty() {
            out.push(Violation {
                node: None,
                message: "node with empty name".into(),
            });
        }
        if declared.contains(name) {
            out.push(Violation::at(name, "duplicate node name"));
        }

        match &node.kind {
            NodeKind::Exogenous { dist } => check_distribution(dgm, name, dist, &mut out),
            NodeKind::Structural {
                intercept,
                terms,
                link,
                noise,
            } => {
                if !intercept.is_finite() {
                    out.push(Violation::at(name, "intercept is not finite"));
                }
                for t in terms {
                    if t.parent == name {
                        out.push(Violation::at(name, "node lists itself as a parent"));
                    } else if !declared.contains(t.parent.as_str()) {
                        let msg = if all_names.contains(t.parent.as_str()) {
                            format!("parent `{}` is declared after this node", t.parent)
                        } else {
                            format!("unknown parent `{}`", t.parent)
                        };
                        out.push(Violation::at(name, msg));
                    }
                    if !t.coefficient.is_finite() {
                        out.push(Violation::at(
                            name,
                            format!("coefficient on `{}` is not finite", t.parent),
                        ));
                    }
                }
                match noise {
                    Noise::BernoulliDraw if *link != LinkFunction::Expit => {
                        out.push(Violation::at(name, "Bernoulli draw requires the expit link"))
                    }
                    Noise::GaussianDraw { sd } if !(*sd > 0.0 && sd.is_finite()) => {
                        out.push(Violation::at(name, format!("Gaussian noise sd must be > 0, got {sd}")))
                    }
                    _ => {}
                }
            }
        }
        declared.insert(name);
    }

    if !all_names.contains(dgm.outcome.as_str()) {
        out.push(Violation {
            node: None,
            message: format!("outcome `{}` is not a declared node", dgm.outcome),
        });
    }
    out
}

fn check_distribution(dgm: &DgmSpec, name: &str, dist: &DistributionSpec, out: &mut Vec<Violation>) {
    match dist {
        DistributionSpec::Normal { mean, sd } => {
            if !mean.is_finite() {
                out.push(Violation::at(name, "Normal mean is not finite"));
            }
            if !(*sd > 0.0 && sd.is_finite()) {
                out.push(Violation::at(name, format!("Normal sd must be > 0, got {sd}")));
            }
        }
        DistributionSpec::Bernoulli { p } => {
            if !(0.0..=1.0).contains(p) {
                out.push(Violation::at(name, format!("Bernoulli p must lie in [0, 1], got {p}")));
            }
        }
        DistributionSpec::Uniform { low, high } => {
            if !(low.is_finite() && high.is_finite() && low < high) {
                out.push(Violation::at(
                    name,
                    format!("Uniform requires finite low < high, got [{low}, {high}]"),
                ));
            }
        }
        DistributionSpec::Empirical { source, column } => match dgm.sources.get(source) {
            None => out.push(Violation::at(name, format!("unknown empirical source `{source}`"))),
            Some(src) => {
                if src.column_index(column).is_none() {
                    out.push(Violation::at(
                        name,
                        format!("empirical source `{source}` has no column `{column}`"),
                    ));
                }
                if src.rows() == 0 {
                    out.push(Violation::at(name, format!("empirical source `{source}` is empty")));
                }
            }
        },
    }
}

/// Conditionally adjusted odds ratio read off the outcome equation:
/// `exp(coefficient of exposure)`.
pub fn conditional_readoff(dgm: &DgmSpec, exposure: &str) -> Result<f64> {
    let outcome = dgm
        .outcome_node()
        .ok_or_else(|| Error::domain(format!("outcome `{}` is not declared", dgm.outcome)))?;
    let NodeKind::Structural { terms, link, .. } = &outcome.kind else {
        return Err(Error::domain("outcome node is not structural"));
    };
    if *link != LinkFunction::Expit {
        return Err(Error::domain("conditional odds ratio requires an expit outcome link"));
    }
    let mut found = false;
    let mut coef = 0.0;
    for t in terms.iter().filter(|t| t.parent == exposure) {
        found = true;
        coef += t.coefficient;
    }
    if !found {
        return Err(Error::domain(format!(
            "`{exposure}` is not a term of the outcome equation"
        )));
    }
    Ok(coef.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1() -> DgmSpec {
        DgmSpec::new(
            vec![
                NodeSpec::exogenous("C", DistributionSpec::Normal { mean: 0.0, sd: 1.0 }),
                NodeSpec::structural(
                    "A",
                    -0.5,
                    vec![Term::new("C", 0.5)],
                    LinkFunction::Expit,
                    Noise::BernoulliDraw,
                ),
                NodeSpec::structural(
                    "Y",
                    -2.0,
                    vec![Term::new("A", 2f64.ln()), Term::new("C", 1.5f64.ln())],
                    LinkFunction::Expit,
                    Noise::BernoulliDraw,
                ),
            ],
            "Y",
        )
    }

    #[test]
    fn expit_reference_values() {
        assert_eq!(expit(0.0).unwrap(), 0.5);
        // 1 - expit(750) = exp(-750)/(1+exp(-750)) ~ 1e-326, below f64 resolution.
        let v = expit(750.0).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert!(v.is_finite());
        let w = expit(-750.0).unwrap();
        assert!((0.0..1e-300).contains(&w));
        assert!(expit(f64::NAN).is_err());
        assert!(expit(f64::INFINITY).is_err());
    }

    #[test]
    fn example1_is_valid() {
        assert!(validate(&example1()).is_empty());
    }

    #[test]
    fn undeclared_parent_is_named() {
        let mut d = example1();
        if let NodeKind::Structural { terms, .. } = &mut d.nodes[2].kind {
            terms.push(Term::new("Z", 1.0));
        }
        let v = validate(&d);
        assert_eq!(v.len(), 1);
        assert!(v[0].message.contains("Z"), "{}", v[0]);
    }

    #[test]
    fn zero_sd_is_one_violation() {
        let mut d = example1();
        d.nodes[0] = NodeSpec::exogenous("C", DistributionSpec::Normal { mean: 0.0, sd: 0.0 });
        assert_eq!(validate(&d).len(), 1);
    }

    #[test]
    fn validate_reports_every_violation() {
        let d = DgmSpec::new(
            vec![
                NodeSpec::exogenous("C", DistributionSpec::Uniform { low: 1.0, high: 0.0 }),
                NodeSpec::exogenous("C", DistributionSpec::Bernoulli { p: 1.5 }),
                NodeSpec::structural(
                    "Y",
                    0.0,
                    vec![Term::new("L", 1.0)],
                    LinkFunction::Identity,
                    Noise::BernoulliDraw,
                ),
                NodeSpec::structural("L", 0.0, vec![], LinkFunction::Identity, Noise::None),
            ],
            "Q",
        );
        let v = validate(&d);
        // bad uniform, duplicate, bad p, late parent, bernoulli/identity, missing outcome
        assert_eq!(v.len(), 6, "{v:?}");
        assert!(v.iter().any(|x| x.message.contains("declared after")));
    }

    #[test]
    fn readoff() {
        let d = example1();
        assert!((conditional_readoff(&d, "A").unwrap() - 2.0).abs() < 1e-15);
        assert!(conditional_readoff(&d, "Q").is_err());

        let mut d0 = example1();
        if let NodeKind::Structural { terms, .. } = &mut d0.nodes[2].kind {
            terms[0].coefficient = 0.0;
        }
        assert_eq!(conditional_readoff(&d0, "A").unwrap(), 1.0);
        if let NodeKind::Structural { terms, .. } = &mut d0.nodes[2].kind {
            terms[0].coefficient = 0.3;
        }
        // exp(0.3) to 17 digits
        assert!((conditional_readoff(&d0, "A").unwrap() - 1.3498588075760032).abs() < 1e-15);
    }

    #[test]
    fn intervention_label_is_sorted() {
        let i = Intervention::new().set("M", 0.0).set("A", 1.0);
        assert_eq!(i.label(), "A=1,M=0");
    }
}
