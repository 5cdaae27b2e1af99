//! Reproducible, chunk-parallel sampling of a DGM under interventions.
//!
//! Rows are split into chunks of `SeedSpec::chunk_size`. Within a chunk every
//! node that needs randomness reads its own stream, keyed by
//! `(master_seed, hash(node name), chunk index)`, and rows of an empirical
//! source are picked from a stream keyed by the source name. Results are
//! therefore independent of worker count, and adding or removing a node never
//! moves another node's draws.
//!
//! All branches of a counterfactual evaluation read the same streams: the
//! uniforms behind a node's noise are generated once per chunk and reused by
//! every branch that evaluates that node.

use std::fs::File;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgm::{validate, DgmSpec, DistributionSpec, Intervention, LinkFunction, NodeKind, Noise, Violation};
use crate::error::{Error, Result};
use crate::numeric::{normal_quantile, NeumaierSum};
use crate::rng::{derive_seed, label_hash, Stream};

pub const DEFAULT_CHUNK_SIZE: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub chunk_size: usize,
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        SeedSpec {
            master_seed,
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }

    pub fn with_chunk_size(mut self, chunk_size: usize) -> Self {
        self.chunk_size = chunk_size;
        self
    }

    /// Independent seed for the `index`-th run within `domain`, same chunking.
    pub fn derive(&self, domain: &str, index: u64) -> SeedSpec {
        SeedSpec {
            master_seed: derive_seed(self.master_seed, domain, index),
            chunk_size: self.chunk_size,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Apply the node's noise.
    Draw,
    /// Return the link-transformed linear predictor without drawing.
    Expectation,
}

/// Column-oriented simulated data. Columns follow declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    n: usize,
    random_draws: u64,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    /// Number of 64-bit random words consumed to produce this dataset.
    pub fn random_draws(&self) -> u64 {
        self.random_draws
    }
}

/// Jointly resampled rows ingested from a table.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSource {
    columns: Vec<String>,
    data: Vec<Vec<f64>>,
    rows: usize,
}

impl EmpiricalSource {
    /// `data` is column-major and must be rectangular.
    pub fn from_columns(columns: Vec<String>, data: Vec<Vec<f64>>) -> Result<Self> {
        if columns.len() != data.len() {
            return Err(Error::domain("column names and data disagree in length"));
        }
        let rows = data.first().map_or(0, Vec::len);
        if data.iter().any(|c| c.len() != rows) {
            return Err(Error::domain("empirical columns have unequal lengths"));
        }
        Ok(EmpiricalSource { columns, data, rows })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.column_index(name).map(|i| self.data[i].as_slice())
    }
}

/// Reads `columns` from a comma-separated file with a header row.
pub fn ingest_empirical(path: &Path, columns: &[&str]) -> Result<EmpiricalSource> {
    let fail = |reason: String| Error::Ingest {
        path: path.to_path_buf(),
        reason,
    };
    let file = File::open(path).map_err(|e| fail(e.to_string()))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers().map_err(|e| fail(e.to_string()))?.clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(fail("file is empty (no header row)".into()));
    }
    let mut index = Vec::with_capacity(columns.len());
    for c in columns {
        let i = headers
            .iter()
            .position(|h| h.trim() == *c)
            .ok_or_else(|| fail(format!("missing column `{c}`")))?;
        index.push(i);
    }
    let mut data = vec![Vec::new(); columns.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| fail(e.to_string()))?;
        for (k, &i) in index.iter().enumerate() {
            let cell = record.get(i).unwrap_or("").trim();
            let v: f64 = cell.parse().map_err(|_| {
                fail(format!(
                    "unparseable value `{cell}` in column `{}` at data row {}",
                    columns[k],
                    row + 1
                ))
            })?;
            data[k].push(v);
        }
    }
    if data.first().is_none_or(Vec::is_empty) {
        return Err(fail("no data rows".into()));
    }
    EmpiricalSource::from_columns(columns.iter().map(|c| c.to_string()).collect(), data)
}

enum PlanKind {
    Normal {
        mean: f64,
        sd: f64,
    },
    Bernoulli {
        p: f64,
    },
    Uniform {
        low: f64,
        width: f64,
    },
    Empirical {
        source: usize,
        column: usize,
    },
    Structural {
        intercept: f64,
        terms: Vec<(usize, f64)>,
        link: LinkFunction,
        noise: Noise,
    },
}

struct PlanNode {
    stream: u64,
    kind: PlanKind,
}

/// A validated DGM with names resolved to indices.
struct Plan {
    names: Vec<String>,
    nodes: Vec<PlanNode>,
    outcome: usize,
    sources: Vec<(u64, Arc<EmpiricalSource>)>,
}

impl Plan {
    fn compile(dgm: &DgmSpec) -> Result<Plan> {
        let violations = validate(dgm);
        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }
        let source_names: Vec<&String> = dgm.sources.keys().collect();
        let sources = dgm
            .sources
            .iter()
            .map(|(name, s)| (label_hash(&format!("source:{name}")), Arc::clone(s)))
            .collect();
        let index = |name: &str| dgm.node_index(name).expect("validated");
        let nodes = dgm
            .nodes
            .iter()
            .map(|node| {
                let kind = match &node.kind {
                    NodeKind::Exogenous { dist } => match dist {
                        DistributionSpec::Normal { mean, sd } => PlanKind::Normal { mean: *mean, sd: *sd },
                        DistributionSpec::Bernoulli { p } => PlanKind::Bernoulli { p: *p },
                        DistributionSpec::Uniform { low, high } => PlanKind::Uniform {
                            low: *low,
                            width: high - low,
                        },
                        DistributionSpec::Empirical { source, column } => {
                            let s = source_names.iter().position(|n| *n == source).expect("validated");
                            let c = dgm.sources[source].column_index(column).expect("validated");
                            PlanKind::Empirical { source: s, column: c }
                        }
                    },
                    NodeKind::Structural {
                        intercept,
                        terms,
                        link,
                        noise,
                    } => PlanKind::Structural {
                        intercept: *intercept,
                        terms: terms.iter().map(|t| (index(&t.parent), t.coefficient)).collect(),
                        link: *link,
                        noise: *noise,
                    },
                };
                PlanNode {
                    stream: label_hash(&format!("node:{}", node.name)),
                    kind,
                }
            })
            .collect();
        Ok(Plan {
            names: dgm.nodes.iter().map(|n| n.name.clone()).collect(),
            nodes,
            outcome: index(&dgm.outcome),
            sources,
        })
    }

    fn fixed_values(&self, dgm: &DgmSpec, intervention: &Intervention) -> Result<Vec<Option<f64>>> {
        let mut fixed = vec![None; self.nodes.len()];
        let mut bad = Vec::new();
        for (name, value) in intervention.iter() {
            match dgm.node_index(name) {
                Some(i) if value.is_finite() => fixed[i] = Some(value),
                Some(_) => bad.push(Violation {
                    node: Some(name.to_string()),
                    message: format!("intervention value {value} is not finite"),
                }),
                None => bad.push(Violation {
                    node: None,
                    message: format!("intervention on undeclared node `{name}`"),
                }),
            }
        }
        if bad.is_empty() {
            Ok(fixed)
        } else {
            Err(Error::Validation(bad))
        }
    }
}

struct ChunkOut {
    /// `[branch][node][row]`
    columns: Vec<Vec<Vec<f64>>>,
    draws: u64,
}

fn uniforms(master_seed: u64, stream: u64, chunk: u64, len: usize, draws: &mut u64) -> Vec<f64> {
    let mut s = Stream::for_chunk(master_seed, stream, chunk);
    let out = (0..len).map(|_| s.next_open01()).collect();
    *draws += s.consumed();
    out
}

fn eval_chunk(
    plan: &Plan,
    master_seed: u64,
    chunk: u64,
    len: usize,
    fixed: &[Vec<Option<f64>>],
    outcome_mode: EvalMode,
) -> ChunkOut {
    let n_nodes = plan.nodes.len();
    let mut draws = 0u64;
    let mut noise: Vec<Option<Vec<f64>>> = vec![None; n_nodes];
    let mut exogenous: Vec<Option<Vec<f64>>> = vec![None; n_nodes];
    let mut rows: Vec<Option<Vec<usize>>> = vec![None; plan.sources.len()];
    let mut columns: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(n_nodes); fixed.len()];

    for (i, node) in plan.nodes.iter().enumerate() {
        for (b, branch) in fixed.iter().enumerate() {
            let col = if let Some(v) = branch[i] {
                vec![v; len]
            } else {
                match &node.kind {
                    PlanKind::Structural {
                        intercept,
                        terms,
                        link,
                        noise: node_noise,
                    } => {
                        let cols = &columns[b];
                        let mut lp = vec![*intercept; len];
                        for &(p, coef) in terms {
                            for (acc, x) in lp.iter_mut().zip(&cols[p]) {
                                *acc += coef * x;
                            }
                        }
                        let mode = if i == plan.outcome {
                            outcome_mode
                        } else {
                            EvalMode::Draw
                        };
                        let draw_noise = mode == EvalMode::Draw && *node_noise != Noise::None;
                        let u: &[f64] = if draw_noise {
                            noise[i].get_or_insert_with(|| uniforms(master_seed, node.stream, chunk, len, &mut draws))
                        } else {
                            &[]
                        };
                        match (draw_noise, node_noise) {
                            (true, Noise::BernoulliDraw) => lp
                                .iter()
                                .zip(u)
                                .map(|(&x, &u)| if u < link.apply(x) { 1.0 } else { 0.0 })
                                .collect(),
                            (true, Noise::GaussianDraw { sd }) => lp
                                .iter()
                                .zip(u)
                                .map(|(&x, &u)| link.apply(x) + sd * normal_quantile(u))
                                .collect(),
                            _ => lp.into_iter().map(|x| link.apply(x)).collect(),
                        }
                    }
                    PlanKind::Empirical { source, column } => {
                        let (stream, src) = &plan.sources[*source];
                        let idx = rows[*source].get_or_insert_with(|| {
                            let mut s = Stream::for_chunk(master_seed, *stream, chunk);
                            let v = (0..len).map(|_| s.next_index(src.rows)).collect();
                            draws += s.consumed();
                            v
                        });
                        let data = &src.data[*column];
                        idx.iter().map(|&r| data[r]).collect()
                    }
                    exo => exogenous[i]
                        .get_or_insert_with(|| {
                            let u = uniforms(master_seed, node.stream, chunk, len, &mut draws);
                            match exo {
                                PlanKind::Normal { mean, sd } => {
                                    u.into_iter().map(|u| mean + sd * normal_quantile(u)).collect()
                                }
                                PlanKind::Bernoulli { p } => {
                                    u.into_iter().map(|u| if u < *p { 1.0 } else { 0.0 }).collect()
                                }
                                PlanKind::Uniform { low, width } => u.into_iter().map(|u| low + width * u).collect(),
                                _ => unreachable!(),
                            }
                        })
                        .clone(),
                }
            };
            columns[b].push(col);
        }
    }
    ChunkOut { columns, draws }
}

fn chunk_bounds(n: usize, chunk_size: usize) -> impl IndexedParallelIterator<Item = (u64, usize)> {
    let n_chunks = n.div_ceil(chunk_size);
    (0..n_chunks)
        .into_par_iter()
        .map(move |k| (k as u64, chunk_size.min(n - k * chunk_size)))
}

fn check_args(n: usize, seed: &SeedSpec) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("sample size n must be at least 1"));
    }
    if seed.chunk_size == 0 {
        return Err(Error::domain("chunk_size must be at least 1"));
    }
    Ok(())
}

/// Simulates every branch in `interventions` over shared streams.
pub fn simulate_branches(
    dgm: &DgmSpec,
    n: usize,
    seed: &SeedSpec,
    interventions: &[&Intervention],
    outcome_mode: EvalMode,
) -> Result<Vec<Dataset>> {
    check_args(n, seed)?;
    let plan = Plan::compile(dgm)?;
    let fixed = interventions
        .iter()
        .map(|iv| plan.fixed_values(dgm, iv))
        .collect::<Result<Vec<_>>>()?;
    let chunks: Vec<ChunkOut> = chunk_bounds(n, seed.chunk_size)
        .map(|(k, len)| eval_chunk(&plan, seed.master_seed, k, len, &fixed, outcome_mode))
        .collect();

    let draws = chunks.iter().map(|c| c.draws).sum();
    let mut out: Vec<Dataset> = (0..fixed.len())
        .map(|_| Dataset {
            names: plan.names.clone(),
            columns: vec![Vec::with_capacity(n); plan.nodes.len()],
            n,
            random_draws: draws,
        })
        .collect();
    for chunk in chunks {
        for (ds, branch) in out.iter_mut().zip(chunk.columns) {
            for (dst, src) in ds.columns.iter_mut().zip(branch) {
                dst.extend_from_slice(&src);
            }
        }
    }
    Ok(out)
}

/// Simulates `n` rows of `dgm` under `intervention`. Non-outcome structural
/// nodes are drawn; the outcome node follows `outcome_mode`.
pub fn simulate(
    dgm: &DgmSpec,
    n: usize,
    seed: &SeedSpec,
    intervention: &Intervention,
    outcome_mode: EvalMode,
) -> Result<Dataset> {
    let mut v = simulate_branches(dgm, n, seed, &[intervention], outcome_mode)?;
    Ok(v.pop().expect("one branch"))
}

/// Two counterfactual branches sharing every random stream, so exogenous
/// columns are bit-identical across the pair.
pub fn simulate_counterfactual_pair(
    dgm: &DgmSpec,
    n: usize,
    seed: &SeedSpec,
    intervention_a: &Intervention,
    intervention_b: &Intervention,
    outcome_mode: EvalMode,
) -> Result<(Dataset, Dataset)> {
    let mut v = simulate_branches(dgm, n, seed, &[intervention_a, intervention_b], outcome_mode)?;
    let b = v.pop().expect("two branches");
    let a = v.pop().expect("two branches");
    Ok((a, b))
}

/// Mean of the outcome column in each branch, reduced chunk by chunk without
/// materializing the full dataset. Sums are compensated and combined in chunk
/// order, so the result does not depend on the worker count.
pub fn outcome_means(
    dgm: &DgmSpec,
    n: usize,
    seed: &SeedSpec,
    interventions: &[&Intervention],
    outcome_mode: EvalMode,
) -> Result<Vec<f64>> {
    check_args(n, seed)?;
    let plan = Plan::compile(dgm)?;
    let fixed = interventions
        .iter()
        .map(|iv| plan.fixed_values(dgm, iv))
        .collect::<Result<Vec<_>>>()?;
    let partial: Vec<Vec<NeumaierSum>> = chunk_bounds(n, seed.chunk_size)
        .map(|(k, len)| {
            let out = eval_chunk(&plan, seed.master_seed, k, len, &fixed, outcome_mode);
            out.columns
                .into_iter()
                .map(|cols| cols[plan.outcome].iter().copied().collect::<NeumaierSum>())
                .collect()
        })
        .collect();
    let mut totals = vec![NeumaierSum::new(); fixed.len()];
    for chunk in &partial {
        for (t, s) in totals.iter_mut().zip(chunk) {
            t.merge(s);
        }
    }
    Ok(totals.iter().map(|t| t.value() / n as f64).collect())
}
