//! Graph-based aggregation of per-edge binary classifiers into a multiclass
//! classifier: each class scores the fraction of duels it wins against its
//! graph neighbors, and the best fraction is predicted.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, NeighborhoodGraph};
use crate::linalg::{argmax, dot};
use crate::teacher::{Dataset, LinearModel};

/// Score assigned to vertices without neighbors; below any win fraction.
pub const ISOLATED_SCORE: f64 = -1.0;

/// `h(x) = coef · x`; `h(x) >= 0` means the lower-indexed class of the edge wins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearDiscriminator(pub Vec<f64>);

impl LinearDiscriminator {
    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.0, x)
    }

    pub fn lower_wins(&self, x: &[f64]) -> bool {
        self.eval(x) >= 0.0
    }
}

/// One discriminator per canonical edge `(i, j)`, `i < j`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BinaryClassifierSet {
    map: BTreeMap<Edge, LinearDiscriminator>,
}

impl BinaryClassifierSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, edge: Edge, h: LinearDiscriminator) -> Result<()> {
        if edge.0 >= edge.1 {
            return Err(Error::invalid(format!("edge {edge:?} is not canonical")));
        }
        self.map.insert(edge, h);
        Ok(())
    }

    pub fn get(&self, edge: &Edge) -> Option<&LinearDiscriminator> {
        self.map.get(edge)
    }

    pub fn get_mut(&mut self, edge: &Edge) -> Option<&mut LinearDiscriminator> {
        self.map.get_mut(edge)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Edge, &LinearDiscriminator)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// The teacher's own pairwise discriminators `w_i − w_j` on every edge.
    pub fn exact(teacher: &LinearModel, graph: &NeighborhoodGraph) -> Result<Self> {
        if graph.k() != teacher.k() {
            return Err(Error::ClassifierMismatch(format!(
                "graph has {} classes, teacher {}",
                graph.k(),
                teacher.k()
            )));
        }
        let mut set = Self::new();
        for &(i, j) in graph.edges() {
            let coef = teacher
                .row(i)
                .iter()
                .zip(teacher.row(j))
                .map(|(a, b)| a - b)
                .collect();
            set.insert((i, j), LinearDiscriminator(coef))?;
        }
        Ok(set)
    }

    fn check_matches(&self, graph: &NeighborhoodGraph) -> Result<()> {
        if self.map.len() != graph.edge_count() || !self.map.keys().eq(graph.edges().iter()) {
            let missing: Vec<_> = graph
                .edges()
                .iter()
                .filter(|e| !self.map.contains_key(e))
                .collect();
            let extra: Vec<_> = self
                .map
                .keys()
                .filter(|e| !graph.edges().contains(e))
                .collect();
            return Err(Error::ClassifierMismatch(format!(
                "missing {missing:?}, extra {extra:?}"
            )));
        }
        Ok(())
    }
}

/// Per-class win fraction; isolated vertices get [`ISOLATED_SCORE`].
pub fn aggregate_scores(
    graph: &NeighborhoodGraph,
    classifiers: &BinaryClassifierSet,
    x: &[f64],
) -> Result<Vec<f64>> {
    classifiers.check_matches(graph)?;
    Ok(scores_unchecked(graph, classifiers, x))
}

fn scores_unchecked(
    graph: &NeighborhoodGraph,
    classifiers: &BinaryClassifierSet,
    x: &[f64],
) -> Vec<f64> {
    let k = graph.k();
    let mut wins = vec![0usize; k];
    let mut duels = vec![0usize; k];
    for (&(i, j), h) in classifiers.iter() {
        duels[i] += 1;
        duels[j] += 1;
        if h.lower_wins(x) {
            wins[i] += 1;
        } else {
            wins[j] += 1;
        }
    }
    (0..k)
        .map(|c| {
            if duels[c] == 0 {
                ISOLATED_SCORE
            } else {
                wins[c] as f64 / duels[c] as f64
            }
        })
        .collect()
}

/// Class with the largest win fraction, lowest index on ties.
pub fn aggregate_predict(
    graph: &NeighborhoodGraph,
    classifiers: &BinaryClassifierSet,
    x: &[f64],
) -> Result<usize> {
    if graph.is_empty() {
        return Err(Error::AllIsolated);
    }
    Ok(argmax(&aggregate_scores(graph, classifiers, x)?))
}

/// A graph together with its matching classifier set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphAggregate {
    graph: NeighborhoodGraph,
    classifiers: BinaryClassifierSet,
}

impl GraphAggregate {
    pub fn new(graph: NeighborhoodGraph, classifiers: BinaryClassifierSet) -> Result<Self> {
        classifiers.check_matches(&graph)?;
        if graph.is_empty() {
            return Err(Error::AllIsolated);
        }
        Ok(Self { graph, classifiers })
    }

    pub fn exact(teacher: &LinearModel, graph: NeighborhoodGraph) -> Result<Self> {
        let classifiers = BinaryClassifierSet::exact(teacher, &graph)?;
        Self::new(graph, classifiers)
    }

    pub fn graph(&self) -> &NeighborhoodGraph {
        &self.graph
    }

    pub fn classifiers(&self) -> &BinaryClassifierSet {
        &self.classifiers
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        scores_unchecked(&self.graph, &self.classifiers, x)
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.scores(x))
    }

    /// Text form: header `k d`, then one line `i j c_1 … c_d` per edge.
    pub fn to_text(&self) -> String {
        let d = self.classifiers.iter().next().map_or(0, |(_, h)| h.0.len());
        let mut out = format!("{} {}\n", self.graph.k(), d);
        for ((i, j), h) in self.classifiers.iter() {
            let coef: Vec<String> = h.0.iter().map(|c| format!("{c:e}")).collect();
            let _ = writeln!(out, "{i} {j} {}", coef.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (n, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing header"))?;
        let head: Vec<usize> = header
            .split_whitespace()
            .map(str::parse::<usize>)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::parse(n + 1, e.to_string()))?;
        let [k, d] = head[..] else {
            return Err(Error::parse(n + 1, "header must be `k d`"));
        };
        let mut graph = NeighborhoodGraph::empty(k);
        let mut set = BinaryClassifierSet::new();
        for (n, line) in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != d + 2 {
                return Err(Error::parse(n + 1, format!("expected {} fields", d + 2)));
            }
            let bad = |e: String| Error::parse(n + 1, e);
            let i: usize = fields[0].parse().map_err(|e| bad(format!("{e}")))?;
            let j: usize = fields[1].parse().map_err(|e| bad(format!("{e}")))?;
            let coef: Vec<f64> = fields[2..]
                .iter()
                .map(|f| f.parse::<f64>().map_err(|e| bad(format!("{e}"))))
                .collect::<Result<_>>()?;
            graph.insert(i, j).map_err(|e| bad(e.to_string()))?;
            set.insert((i.min(j), i.max(j)), LinearDiscriminator(coef))
                .map_err(|e| bad(e.to_string()))?;
        }
        Self::new(graph, set)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Measured premises and conclusion of the aggregation error bound on one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationReport {
    pub epsilon: f64,
    pub per_edge_budget: f64,
    pub per_edge_errors: Vec<(Edge, f64)>,
    pub premise_holds: bool,
    pub aggregate_error: f64,
    pub union_bound: f64,
    pub slack: f64,
    /// Aggregate error exceeds `epsilon + slack`.
    pub violation: bool,
    /// Aggregate error exceeds the sum of per-edge errors.
    pub union_bound_violated: bool,
}

/// Measures per-edge sign disagreement of `classifiers` with the teacher's
/// pairwise discriminators and the aggregate's disagreement with the teacher's
/// argmax on `sample`.
pub fn verify_aggregation_bound(
    teacher: &LinearModel,
    graph: &NeighborhoodGraph,
    classifiers: &BinaryClassifierSet,
    sample: &Dataset,
    epsilon: f64,
    slack: f64,
) -> Result<AggregationReport> {
    classifiers.check_matches(graph)?;
    if sample.is_empty() {
        return Err(Error::invalid("empty verification sample"));
    }
    let n = sample.len() as f64;
    let exact = BinaryClassifierSet::exact(teacher, graph)?;
    let per_edge_budget = epsilon / graph.edge_count().max(1) as f64;
    let per_edge_errors: Vec<(Edge, f64)> = classifiers
        .iter()
        .map(|(edge, h)| {
            let truth = exact.get(edge).expect("same edge set");
            let wrong = sample
                .iter()
                .filter(|x| h.lower_wins(x) != truth.lower_wins(x))
                .count();
            (*edge, wrong as f64 / n)
        })
        .collect();
    let union_bound: f64 = per_edge_errors.iter().map(|(_, e)| e).sum();
    let wrong = sample
        .iter()
        .filter(|x| {
            let pred = if graph.is_empty() {
                usize::MAX
            } else {
                argmax(&scores_unchecked(graph, classifiers, x))
            };
            pred != argmax(&teacher.scores_unchecked(x))
        })
        .count();
    let aggregate_error = wrong as f64 / n;
    Ok(AggregationReport {
        epsilon,
        per_edge_budget,
        premise_holds: per_edge_errors.iter().all(|(_, e)| *e <= per_edge_budget),
        per_edge_errors,
        aggregate_error,
        union_bound,
        slack,
        violation: aggregate_error > epsilon + slack,
        union_bound_violated: aggregate_error > union_bound + 1e-12,
    })
}
