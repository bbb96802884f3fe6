//! Label neighborhood graphs.
//!
//! Two classes are neighbors when they share a decision boundary: some point
//! scores them equal and at least as high as every other class. Graphs are
//! assumed to come from continuous score functions; only linear models are
//! supported here.

mod compute;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use compute::{
    empirical_graph, true_graph, true_graph_among, GraphMethod, DEFAULT_MC_SAMPLES, DEFAULT_MC_TOL,
};

pub type Edge = (usize, usize);

/// Undirected simple graph on `k` class labels, edges stored as `(i, j)` with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborhoodGraph {
    k: usize,
    edges: BTreeSet<Edge>,
}

impl NeighborhoodGraph {
    pub fn empty(k: usize) -> Self {
        Self {
            k,
            edges: BTreeSet::new(),
        }
    }

    pub fn complete(k: usize) -> Self {
        let mut g = Self::empty(k);
        for i in 0..k {
            for j in i + 1..k {
                g.edges.insert((i, j));
            }
        }
        g
    }

    pub fn from_edges(k: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let mut g = Self::empty(k);
        for (i, j) in edges {
            g.insert(i, j)?;
        }
        Ok(g)
    }

    /// Path linking consecutive classes of `order`, which must be a permutation of `[k]`.
    pub fn path_from_order(order: &[usize]) -> Result<Self> {
        let k = order.len();
        let mut seen = vec![false; k];
        for &c in order {
            if c >= k || std::mem::replace(&mut seen[c], true) {
                return Err(Error::invalid(format!("{order:?} is not a permutation")));
            }
        }
        let mut g = Self::empty(k);
        for w in order.windows(2) {
            g.insert(w[0], w[1])?;
        }
        Ok(g)
    }

    /// Path through `classes` in the given order on `k` vertices.
    pub fn path(k: usize, classes: &[usize]) -> Result<Self> {
        let mut g = Self::empty(k);
        for w in classes.windows(2) {
            g.insert(w[0], w[1])?;
        }
        Ok(g)
    }

    pub fn insert(&mut self, i: usize, j: usize) -> Result<bool> {
        for c in [i, j] {
            if c >= self.k {
                return Err(Error::ClassOutOfRange {
                    index: c,
                    k: self.k,
                });
            }
        }
        if i == j {
            return Err(Error::invalid(format!("self-loop on class {i}")));
        }
        Ok(self.edges.insert(canonical(i, j)))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    /// Total number of edges.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i != j && self.edges.contains(&canonical(i, j))
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter_map(move |&(a, b)| {
            if a == i {
                Some(b)
            } else if b == i {
                Some(a)
            } else {
                None
            }
        })
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.k];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).count()
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    /// Vertices with at least one incident edge.
    pub fn touched(&self) -> BTreeSet<usize> {
        self.edges.iter().flat_map(|&(a, b)| [a, b]).collect()
    }

    pub fn is_subgraph_of(&self, other: &Self) -> bool {
        self.k == other.k && self.edges.is_subset(&other.edges)
    }

    pub fn difference(&self, other: &Self) -> BTreeSet<Edge> {
        self.edges.difference(&other.edges).copied().collect()
    }

    /// Keeps only edges with both endpoints in `classes`; vertex labels are unchanged.
    pub fn restricted_to(&self, classes: &BTreeSet<usize>) -> Self {
        Self {
            k: self.k,
            edges: self
                .edges
                .iter()
                .filter(|(a, b)| classes.contains(a) && classes.contains(b))
                .copied()
                .collect(),
        }
    }

    /// Graph with class `i` renamed to `perm[i]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        Self::from_edges(self.k, self.edges.iter().map(|&(a, b)| (perm[a], perm[b])))
    }

    pub fn adjacency(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &(a, b) in &self.edges {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        adj
    }

    /// Edge list text: first line `k`, then one `i j` pair per line in lexicographic order.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.k);
        for (a, b) in &self.edges {
            let _ = writeln!(out, "{a} {b}");
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
        let k = header
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::parse(n + 1, format!("bad class count: {e}")))?;
        let mut g = Self::empty(k);
        for (n, line) in lines {
            let ends: Vec<usize> = line
                .split_whitespace()
                .map(str::parse::<usize>)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::parse(n + 1, e.to_string()))?;
            let [a, b] = ends[..] else {
                return Err(Error::parse(n + 1, "expected `i j`"));
            };
            g.insert(a, b)
                .map_err(|e| Error::parse(n + 1, e.to_string()))?;
        }
        Ok(g)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

pub fn canonical(i: usize, j: usize) -> Edge {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Edge count over `C(k, 2)`.
pub fn sparsity_level(graph: &NeighborhoodGraph) -> Result<f64> {
    sparsity_among(graph, graph.k())
}

/// Edge count over `C(k, 2)` for an explicit vertex count, e.g. the number of
/// effective classes of a restricted graph.
pub fn sparsity_among(graph: &NeighborhoodGraph, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::invalid(format!("sparsity needs k >= 2, got {k}")));
    }
    let pairs = (k * (k - 1) / 2) as f64;
    Ok(graph.edge_count() as f64 / pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparsity_examples() {
        assert_eq!(
            sparsity_level(&NeighborhoodGraph::complete(4)).unwrap(),
            1.0
        );
        let path = NeighborhoodGraph::path_from_order(&[0, 1, 2, 3]).unwrap();
        assert_eq!(sparsity_level(&path).unwrap(), 0.5);
        assert_eq!(sparsity_level(&NeighborhoodGraph::empty(5)).unwrap(), 0.0);
        assert!(sparsity_level(&NeighborhoodGraph::empty(1)).is_err());
    }

    #[test]
    fn path_examples() {
        let g = NeighborhoodGraph::path_from_order(&[2, 0, 1]).unwrap();
        assert_eq!(g.edges(), &BTreeSet::from([(0, 2), (0, 1)]));
        let g = NeighborhoodGraph::path_from_order(&[0, 1]).unwrap();
        assert_eq!(g.edges(), &BTreeSet::from([(0, 1)]));
        let g = NeighborhoodGraph::path_from_order(&[0, 1, 2, 3, 4]).unwrap();
        assert_eq!(g.edge_count(), 4);
        assert!((sparsity_level(&g).unwrap() - 0.4).abs() < 1e-15);
        assert!(NeighborhoodGraph::path_from_order(&[0, 0, 1]).is_err());
        assert!(NeighborhoodGraph::path_from_order(&[0, 3]).is_err());
    }

    #[test]
    fn edges_are_canonical_and_unique() {
        let mut g = NeighborhoodGraph::empty(3);
        assert!(g.insert(2, 1).unwrap());
        assert!(!g.insert(1, 2).unwrap());
        assert!(g.insert(1, 1).is_err());
        assert!(g.insert(0, 3).is_err());
        assert_eq!(g.edges(), &BTreeSet::from([(1, 2)]));
        assert!(g.contains(2, 1));
        assert_eq!(g.degree(1), 1);
        assert_eq!(g.degree(0), 0);
    }

    #[test]
    fn text_format_is_sorted() {
        let g = NeighborhoodGraph::from_edges(4, [(3, 1), (0, 2), (0, 1)]).unwrap();
        assert_eq!(g.to_text(), "4\n0 1\n0 2\n1 3\n");
        assert_eq!(NeighborhoodGraph::from_text(&g.to_text()).unwrap(), g);
        assert!(NeighborhoodGraph::from_text("3\n0 0\n").is_err());
    }

    #[test]
    fn sparsity_is_relabeling_invariant() {
        let g = NeighborhoodGraph::from_edges(5, [(0, 1), (1, 2), (3, 4), (0, 4)]).unwrap();
        let r = g.relabeled(&[4, 2, 0, 1, 3]).unwrap();
        assert_eq!(sparsity_level(&g).unwrap(), sparsity_level(&r).unwrap());
        assert_eq!(
            g.degrees().iter().sum::<usize>(),
            r.degrees().iter().sum::<usize>()
        );
    }
}
