//! Classes on a line: nearest-center models, learning the left-to-right class
//! order from comparisons at the two extreme samples, and per-edge threshold
//! search.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::aggregation::{BinaryClassifierSet, GraphAggregate, LinearDiscriminator};
use crate::error::{Error, Result};
use crate::graph::{canonical, Edge, NeighborhoodGraph};
use crate::rng::rng_from_seed;
use crate::teacher::{LabelOracle, LinearModel, QueryLedger};

/// Class `i` owns the points nearest to `centers[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentersModel {
    centers: Vec<f64>,
}

impl CentersModel {
    pub fn new(centers: Vec<f64>) -> Result<Self> {
        if centers.len() < 2 {
            return Err(Error::invalid("need at least two centers"));
        }
        if centers.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("centers"));
        }
        Ok(Self { centers })
    }

    /// `k` centers drawn uniformly from `[0, 1)`.
    pub fn random(k: usize, seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(seed);
        Self::new((0..k).map(|_| rng.random::<f64>()).collect())
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Nearest center, lowest index on ties.
    pub fn nearest(&self, t: f64) -> usize {
        total_order_at(self, t).ranking[0]
    }
}

/// Row `i` is `(2 c_i, −c_i²)`, so on `(t, 1)` class `i` outscores `j`
/// exactly when `|c_i − t| < |c_j − t|`.
pub fn centers_to_linear(centers: &CentersModel) -> LinearModel {
    let weights = centers
        .centers
        .iter()
        .flat_map(|&c| [2.0 * c, -c * c])
        .collect();
    LinearModel::new(centers.k(), 2, weights).expect("validated centers")
}

pub fn lift(t: f64) -> [f64; 2] {
    [t, 1.0]
}

/// Classes from most to least preferred.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TotalOrder {
    ranking: Vec<usize>,
}

impl TotalOrder {
    pub fn new(ranking: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; ranking.len()];
        for &c in &ranking {
            if c >= ranking.len() || std::mem::replace(&mut seen[c], true) {
                return Err(Error::invalid(format!("{ranking:?} is not a permutation")));
            }
        }
        Ok(Self { ranking })
    }

    pub fn ranking(&self) -> &[usize] {
        &self.ranking
    }

    pub fn first(&self) -> usize {
        self.ranking[0]
    }
}

/// Classes by distance of their center to `t`, lower index first on ties.
pub fn total_order_at(centers: &CentersModel, t: f64) -> TotalOrder {
    let mut ranking: Vec<usize> = (0..centers.k()).collect();
    ranking.sort_by(|&a, &b| {
        let da = (centers.centers[a] - t).abs();
        let db = (centers.centers[b] - t).abs();
        da.total_cmp(&db).then(a.cmp(&b))
    });
    TotalOrder { ranking }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SortMode {
    /// Query a pair only when the merge sort asks for it.
    #[default]
    LazySort,
    /// Query every pair up front.
    EagerPairs,
}

/// Relation of a canonical pair `(lo, hi)` read from both extremes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PairOutcome {
    LowFirst,
    HighFirst,
    /// `hi` loses at both extremes.
    HighLoses,
    /// `lo` loses at both extremes, or the pair is tied.
    LowLoses,
}

impl PairOutcome {
    fn from_answers(left: bool, right: bool) -> Self {
        match (left, right) {
            (true, false) => Self::LowFirst,
            (false, true) => Self::HighFirst,
            (true, true) => Self::HighLoses,
            (false, false) => Self::LowLoses,
        }
    }

    /// Whether `a` goes before `b`, given this outcome of `canonical(a, b)`.
    fn before(self, a: usize, b: usize) -> bool {
        let low_first = matches!(self, Self::LowFirst | Self::HighLoses);
        low_first == (a < b)
    }

    fn loser(self, edge: Edge) -> Option<usize> {
        match self {
            Self::HighLoses => Some(edge.1),
            Self::LowLoses => Some(edge.0),
            _ => None,
        }
    }
}

struct PairBook<'a, O: LabelOracle + ?Sized> {
    oracle: &'a O,
    left: [f64; 2],
    right: [f64; 2],
    memo: BTreeMap<Edge, PairOutcome>,
    losers: BTreeSet<usize>,
}

impl<O: LabelOracle + ?Sized> PairBook<'_, O> {
    fn outcome(&mut self, a: usize, b: usize, ledger: &mut QueryLedger) -> Result<PairOutcome> {
        let edge = canonical(a, b);
        if let Some(&o) = self.memo.get(&edge) {
            return Ok(o);
        }
        let l = self.oracle.compare(&self.left, edge.0, edge.1, ledger)?;
        let r = self.oracle.compare(&self.right, edge.0, edge.1, ledger)?;
        let o = PairOutcome::from_answers(l, r);
        if o == PairOutcome::LowLoses {
            log::debug!(
                "class {} never beats {} at the extremes (or they tie)",
                edge.0,
                edge.1
            );
        }
        if let Some(l) = o.loser(edge) {
            self.losers.insert(l);
        }
        self.memo.insert(edge, o);
        Ok(o)
    }

    fn before(&mut self, a: usize, b: usize, ledger: &mut QueryLedger) -> Result<bool> {
        Ok(self.outcome(a, b, ledger)?.before(a, b))
    }
}

/// Top-down merge sort; tolerates comparators that are not transitive.
fn merge_sort(
    items: &[usize],
    before: &mut impl FnMut(usize, usize) -> Result<bool>,
) -> Result<Vec<usize>> {
    if items.len() <= 1 {
        return Ok(items.to_vec());
    }
    let (a, b) = items.split_at(items.len() / 2);
    let a = merge_sort(a, before)?;
    let b = merge_sort(b, before)?;
    let mut out = Vec::with_capacity(items.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if before(b[j], a[i])? {
            out.push(b[j]);
            j += 1;
        } else {
            out.push(a[i]);
            i += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    Ok(out)
}

/// Result of ordering classes from comparisons at the two extreme samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnedOrder {
    /// Classes placed left to right, then the classes that lost at both extremes.
    pub order: TotalOrder,
    /// Path over the placed classes.
    pub graph: NeighborhoodGraph,
    /// Number of classes placed on the path.
    pub placed: usize,
}

impl LearnedOrder {
    pub fn placed_classes(&self) -> &[usize] {
        &self.order.ranking[..self.placed]
    }

    pub fn losers(&self) -> &[usize] {
        &self.order.ranking[self.placed..]
    }
}

/// Orders the classes of a lifted 1D teacher left to right using
/// comparisons at the smallest and largest sample.
pub fn learn_graph_1d<O: LabelOracle + ?Sized>(
    oracle: &O,
    samples: &[f64],
    mode: SortMode,
    ledger: &mut QueryLedger,
) -> Result<LearnedOrder> {
    if samples.is_empty() {
        return Err(Error::EmptyPool);
    }
    if samples.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("samples"));
    }
    if oracle.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: oracle.dim(),
        });
    }
    let k = oracle.num_classes();
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut book = PairBook {
        oracle,
        left: lift(lo),
        right: lift(hi),
        memo: BTreeMap::new(),
        losers: BTreeSet::new(),
    };
    if mode == SortMode::EagerPairs {
        for a in 0..k {
            for b in a + 1..k {
                book.outcome(a, b, ledger)?;
            }
        }
    }
    let classes: Vec<usize> = (0..k).collect();
    let sorted = merge_sort(&classes, &mut |a, b| book.before(a, b, ledger))?;

    // Walk the sorted classes into a chain whose neighbors are all confirmed.
    let mut pending: VecDeque<usize> = sorted.iter().copied().collect();
    let mut chain: Vec<usize> = Vec::with_capacity(k);
    let mut guard = 4 * k * k + 16;
    while let Some(c) = pending.pop_front() {
        guard = guard
            .checked_sub(1)
            .ok_or_else(|| Error::invalid("class ordering did not settle"))?;
        if book.losers.contains(&c) {
            continue;
        }
        let Some(&p) = chain.last() else {
            chain.push(c);
            continue;
        };
        let o = book.outcome(p, c, ledger)?;
        match o.loser(canonical(p, c)) {
            Some(l) if l == c => {}
            Some(_) => {
                chain.pop();
                pending.push_front(c);
            }
            None if o.before(p, c) => chain.push(c),
            None => {
                chain.pop();
                pending.push_front(p);
                pending.push_front(c);
            }
        }
    }
    chain.retain(|c| !book.losers.contains(c));
    let placed = chain.len();
    let mut ranking = chain;
    ranking.extend(sorted.iter().filter(|c| book.losers.contains(c)));
    let graph = NeighborhoodGraph::path(k, &ranking[..placed])?;
    Ok(LearnedOrder {
        order: TotalOrder::new(ranking)?,
        graph,
        placed,
    })
}

/// Threshold separating two adjacent classes on the line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub theta: f64,
    /// Class owning the points left of `theta`.
    pub left: usize,
    /// Class owning the points right of `theta`.
    pub right: usize,
}

impl Threshold {
    pub fn classify(&self, t: f64) -> usize {
        if t <= self.theta {
            self.left
        } else {
            self.right
        }
    }

    /// Discriminator on lifted points for the canonical edge of the pair;
    /// non-negative means the lower index wins.
    pub fn discriminator(&self) -> LinearDiscriminator {
        let s = if self.left < self.right { 1.0 } else { -1.0 };
        LinearDiscriminator(vec![-s, s * self.theta])
    }
}

/// Binary search over a sorted pool for the point where the comparison
/// between `i` and `j` flips. Fewer than `⌈γ·n⌉` pool points fall on the
/// wrong side of the returned threshold.
pub fn binary_search_learner<O: LabelOracle + ?Sized>(
    oracle: &O,
    i: usize,
    j: usize,
    pool: &[f64],
    gamma: f64,
    ledger: &mut QueryLedger,
) -> Result<Threshold> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::invalid(format!(
            "gamma must lie in (0, 1], got {gamma}"
        )));
    }
    if pool.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::invalid("pool must be sorted ascending and finite"));
    }
    let n = pool.len();
    let at = |idx: usize, ledger: &mut QueryLedger| oracle.compare(&lift(pool[idx]), i, j, ledger);
    let first = at(0, ledger)?;
    let (left, right) = if first { (i, j) } else { (j, i) };
    let slack = ((gamma * n as f64).ceil() as usize).max(1);
    // the first index whose answer differs from `first` lies in (lo, hi]
    let (mut lo, mut hi) = (0, n);
    while hi - lo > slack {
        let mid = lo + (hi - lo) / 2;
        if at(mid, ledger)? == first {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let right_edge = if hi < n {
        pool[hi]
    } else {
        pool[n - 1] + pool[n - 1].abs().max(1.0)
    };
    Ok(Threshold {
        theta: 0.5 * (pool[lo] + right_edge),
        left,
        right,
    })
}

/// Runs a threshold search on every edge of `graph` at `γ = ε / |E|` and
/// aggregates the thresholds.
pub fn nbr_graph_m2b<O: LabelOracle + ?Sized>(
    oracle: &O,
    graph: &NeighborhoodGraph,
    pool: &[f64],
    epsilon: f64,
    ledger: &mut QueryLedger,
) -> Result<GraphAggregate> {
    if graph.is_empty() {
        return Err(Error::EmptyGraph);
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::invalid(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    let mut sorted = pool.to_vec();
    sorted.sort_by(f64::total_cmp);
    let gamma = epsilon / graph.edge_count() as f64;
    let mut set = BinaryClassifierSet::new();
    for &(i, j) in graph.edges() {
        let th = binary_search_learner(oracle, i, j, &sorted, gamma, ledger)?;
        set.insert((i, j), th.discriminator())?;
    }
    GraphAggregate::new(graph.clone(), set)
}

/// A learned classifier on the line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Classifier1d {
    Constant(usize),
    Graph(GraphAggregate),
}

impl Classifier1d {
    pub fn predict(&self, t: f64) -> usize {
        match self {
            Self::Constant(c) => *c,
            Self::Graph(g) => g.predict(&lift(t)),
        }
    }
}

/// Full pipeline: learn the order on `samples`, then search thresholds on `pool`.
/// Returns the classifier and the comparisons spent.
pub fn end_to_end_1d_with_pool<O: LabelOracle + ?Sized>(
    oracle: &O,
    samples: &[f64],
    pool: &[f64],
    epsilon: f64,
    ledger: &mut QueryLedger,
) -> Result<(Classifier1d, u64)> {
    let start = ledger.comparisons();
    let learned = learn_graph_1d(oracle, samples, SortMode::LazySort, ledger)?;
    let classifier = if learned.placed < 2 {
        Classifier1d::Constant(learned.order.first())
    } else {
        Classifier1d::Graph(nbr_graph_m2b(
            oracle,
            &learned.graph,
            pool,
            epsilon,
            ledger,
        )?)
    };
    Ok((classifier, ledger.comparisons() - start))
}

/// [`end_to_end_1d_with_pool`] using the samples as the search pool.
pub fn end_to_end_1d<O: LabelOracle + ?Sized>(
    oracle: &O,
    samples: &[f64],
    epsilon: f64,
    ledger: &mut QueryLedger,
) -> Result<(Classifier1d, u64)> {
    end_to_end_1d_with_pool(oracle, samples, samples, epsilon, ledger)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{true_graph, GraphMethod};
    use proptest::prelude::*;
    use rand::Rng;

    fn centers(c: &[f64]) -> CentersModel {
        CentersModel::new(c.to_vec()).unwrap()
    }

    fn uniform(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        (0..n).map(|_| rng.random_range(lo..hi)).collect()
    }

    #[test]
    fn nearer_center_wins() {
        let m = centers_to_linear(&centers(&[0.0, 1.0]));
        assert_eq!(m.predict(&lift(0.4)).unwrap(), 0);
        let s = m.scores(&lift(0.5)).unwrap();
        assert_eq!(s[0], s[1]);
    }

    #[test]
    fn order_examples() {
        assert_eq!(
            total_order_at(&centers(&[0.0, 2.0, 4.0]), 0.0).ranking(),
            &[0, 1, 2]
        );
        assert_eq!(
            total_order_at(&centers(&[0.0, 2.0]), 1.0).ranking(),
            &[0, 1]
        );
        assert_eq!(
            total_order_at(&centers(&[5.0, 1.0, 3.0]), 2.0).ranking(),
            &[1, 2, 0]
        );
    }

    #[test]
    fn linear_scores_match_distance_sort() {
        let mut rng = rng_from_seed(5);
        for trial in 0..20 {
            let c = CentersModel::random(7, trial).unwrap();
            let m = centers_to_linear(&c);
            for _ in 0..1000 {
                let t = rng.random_range(-0.5..1.5);
                let s = m.scores(&lift(t)).unwrap();
                let mut by_score: Vec<usize> = (0..7).collect();
                by_score.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
                // oracle: plain squared distances
                let d: Vec<f64> = c.centers().iter().map(|x| (x - t) * (x - t)).collect();
                let near_tie = (0..7).any(|a| (0..a).any(|b| (d[a] - d[b]).abs() < 1e-12));
                if !near_tie {
                    assert_eq!(by_score, total_order_at(&c, t).ranking());
                }
            }
        }
    }

    #[test]
    fn interior_class_without_samples_keeps_its_place() {
        let m = centers_to_linear(&centers(&[0.0, 1.0, 2.0]));
        for mode in [SortMode::LazySort, SortMode::EagerPairs] {
            let mut ledger = QueryLedger::new();
            let r = learn_graph_1d(&m, &[-0.5, 2.5], mode, &mut ledger).unwrap();
            assert_eq!(r.order.ranking(), &[0, 1, 2]);
            assert_eq!(
                r.graph.edges().iter().copied().collect::<Vec<_>>(),
                vec![(0, 1), (1, 2)]
            );
        }
    }

    #[test]
    fn two_classes_cost_two_comparisons() {
        let m = centers_to_linear(&centers(&[0.3, 0.9]));
        let mut ledger = QueryLedger::new();
        let r = learn_graph_1d(
            &m,
            &uniform(50, 0.0, 1.0, 1),
            SortMode::LazySort,
            &mut ledger,
        )
        .unwrap();
        assert_eq!(ledger.comparisons(), 2);
        assert_eq!(r.graph.edge_count(), 1);
    }

    #[test]
    fn only_one_class_seen_gives_no_edge() {
        let m = centers_to_linear(&centers(&[0.0, 10.0]));
        let mut ledger = QueryLedger::new();
        let r = learn_graph_1d(&m, &[0.1, 0.2], SortMode::LazySort, &mut ledger).unwrap();
        assert_eq!(r.placed, 1);
        assert!(r.graph.is_empty());
        let (clf, _) = end_to_end_1d(&m, &[0.1, 0.2], 0.1, &mut ledger).unwrap();
        assert_eq!(clf, Classifier1d::Constant(0));
    }

    #[test]
    fn far_outside_class_is_ranked_last() {
        let m = centers_to_linear(&centers(&[0.0, 1.0, 100.0]));
        let samples = uniform(40, 0.0, 2.0, 3);
        for mode in [SortMode::LazySort, SortMode::EagerPairs] {
            let r = learn_graph_1d(&m, &samples, mode, &mut QueryLedger::new()).unwrap();
            assert_eq!(r.order.ranking(), &[0, 1, 2]);
            assert_eq!(r.losers(), &[2]);
            assert_eq!(r.graph.degree(2), 0);
            assert_eq!(r.graph.edge_count(), 1);
        }
    }

    #[test]
    fn far_left_class_is_ranked_last() {
        let m = centers_to_linear(&centers(&[-50.0, 1.0, 0.0]));
        let r = learn_graph_1d(
            &m,
            &[0.0, 0.4, 1.5],
            SortMode::LazySort,
            &mut QueryLedger::new(),
        )
        .unwrap();
        assert_eq!(r.order.ranking(), &[2, 1, 0]);
        assert_eq!(r.placed, 2);
    }

    #[test]
    fn tied_centers_fall_to_loser_rule() {
        let m = centers_to_linear(&centers(&[0.0, 0.0, 1.0]));
        let r = learn_graph_1d(
            &m,
            &[-1.0, 2.0],
            SortMode::LazySort,
            &mut QueryLedger::new(),
        )
        .unwrap();
        assert_eq!(r.losers(), &[0]);
        assert_eq!(r.placed_classes(), &[1, 2]);
    }

    /// Left-to-right order of the classes that win at some sample.
    fn region_order(c: &CentersModel, samples: &[f64]) -> Vec<usize> {
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut order: Vec<usize> = Vec::new();
        for t in sorted {
            let w = c.nearest(t);
            if order.last() != Some(&w) {
                order.push(w);
            }
        }
        order
    }

    #[test]
    fn order_matches_regions_on_random_instances() {
        for seed in 0..200 {
            let k = 2 + (seed as usize % 9);
            let c = CentersModel::random(k, seed).unwrap();
            let samples = uniform(3 + seed as usize % 40, -0.2, 1.2, 1000 + seed);
            let regions = region_order(&c, &samples);
            for mode in [SortMode::LazySort, SortMode::EagerPairs] {
                let r = learn_graph_1d(
                    &centers_to_linear(&c),
                    &samples,
                    mode,
                    &mut QueryLedger::new(),
                )
                .unwrap();
                let placed: Vec<usize> = r
                    .placed_classes()
                    .iter()
                    .copied()
                    .filter(|x| regions.contains(x))
                    .collect();
                assert_eq!(placed, regions, "seed {seed} {mode:?}");
                assert!(r.graph.max_degree() <= 2);
            }
        }
    }

    #[test]
    fn lazy_sort_is_cheaper_than_all_pairs() {
        let c = CentersModel::random(40, 9).unwrap();
        let m = centers_to_linear(&c);
        let samples = uniform(400, -0.1, 1.1, 2);
        let mut lazy = QueryLedger::new();
        let mut eager = QueryLedger::new();
        let a = learn_graph_1d(&m, &samples, SortMode::LazySort, &mut lazy).unwrap();
        let b = learn_graph_1d(&m, &samples, SortMode::EagerPairs, &mut eager).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(eager.comparisons(), 40 * 39);
        assert!(
            lazy.comparisons() < 2 * 40 * 6 + 2 * 40,
            "{}",
            lazy.comparisons()
        );
    }

    #[test]
    fn learned_path_is_true_graph_when_all_classes_seen() {
        let c = centers(&[0.1, 0.7, 0.4, 0.95]);
        let m = centers_to_linear(&c);
        let r = learn_graph_1d(
            &m,
            &uniform(500, 0.0, 1.0, 4),
            SortMode::LazySort,
            &mut QueryLedger::new(),
        )
        .unwrap();
        assert_eq!(r.graph, true_graph(&m, GraphMethod::Lifted1d).unwrap());
    }

    fn misclassified(m: &LinearModel, th: &Threshold, pool: &[f64]) -> usize {
        pool.iter()
            .filter(|&&t| {
                let s = m.scores(&lift(t)).unwrap();
                (s[th.left] >= s[th.right]) != (th.classify(t) == th.left)
            })
            .count()
    }

    #[test]
    fn median_boundary_one_query_at_coarse_gamma() {
        let m = centers_to_linear(&centers(&[0.0, 1.0]));
        let pool: Vec<f64> = (0..10).map(|i| -0.45 + 0.2 * i as f64).collect();
        let mut ledger = QueryLedger::new();
        let th = binary_search_learner(&m, 0, 1, &pool, 0.5, &mut ledger).unwrap();
        assert!(ledger.comparisons() <= 2);
        assert!(misclassified(&m, &th, &pool) <= 5);
    }

    #[test]
    fn finest_gamma_finds_exact_boundary() {
        let m = centers_to_linear(&centers(&[0.0, 1.0]));
        for n in [1usize, 2, 7, 64, 1000] {
            let pool: Vec<f64> = (0..n)
                .map(|i| -1.0 + 3.0 * i as f64 / n as f64 + 1e-3)
                .collect();
            let mut ledger = QueryLedger::new();
            let th = binary_search_learner(&m, 0, 1, &pool, 1.0 / n as f64, &mut ledger).unwrap();
            assert_eq!(misclassified(&m, &th, &pool), 0, "n={n}");
            let bound = (n as f64).log2().ceil() as u64 + 1;
            assert!(
                ledger.comparisons() <= bound,
                "n={n} used {}",
                ledger.comparisons()
            );
        }
    }

    #[test]
    fn sixty_four_points_at_one_sixteenth() {
        let m = centers_to_linear(&centers(&[0.0, 1.0]));
        let pool: Vec<f64> = (0..64).map(|i| -1.0 + 3.0 * i as f64 / 63.0).collect();
        let mut ledger = QueryLedger::new();
        let th = binary_search_learner(&m, 0, 1, &pool, 1.0 / 16.0, &mut ledger).unwrap();
        assert!(ledger.comparisons() <= 5);
        assert!(misclassified(&m, &th, &pool) <= 3);
        assert_eq!((th.left, th.right), (0, 1));
    }

    #[test]
    fn reversed_pair_orientation() {
        let m = centers_to_linear(&centers(&[1.0, 0.0]));
        let pool: Vec<f64> = (0..100).map(|i| i as f64 / 50.0 - 0.5).collect();
        let th = binary_search_learner(&m, 0, 1, &pool, 0.01, &mut QueryLedger::new()).unwrap();
        assert_eq!((th.left, th.right), (1, 0));
        let h = th.discriminator();
        assert!(h.lower_wins(&lift(1.5)));
        assert!(!h.lower_wins(&lift(-0.5)));
    }

    #[test]
    fn search_rejects_bad_input() {
        let m = centers_to_linear(&centers(&[0.0, 1.0]));
        let mut l = QueryLedger::new();
        assert!(matches!(
            binary_search_learner(&m, 0, 1, &[], 0.1, &mut l),
            Err(Error::EmptyPool)
        ));
        assert!(binary_search_learner(&m, 0, 1, &[1.0, 0.0], 0.1, &mut l).is_err());
        assert!(binary_search_learner(&m, 0, 1, &[1.0], 0.0, &mut l).is_err());
    }

    #[test]
    fn single_edge_aggregate_is_the_threshold() {
        let m = centers_to_linear(&centers(&[0.2, 0.6]));
        let pool = uniform(500, 0.0, 1.0, 8);
        let g = NeighborhoodGraph::complete(2);
        let mut ledger = QueryLedger::new();
        let agg = nbr_graph_m2b(&m, &g, &pool, 0.05, &mut ledger).unwrap();
        let mut sorted = pool.clone();
        sorted.sort_by(f64::total_cmp);
        let th = binary_search_learner(&m, 0, 1, &sorted, 0.05, &mut QueryLedger::new()).unwrap();
        for &t in &pool {
            assert_eq!(agg.predict(&lift(t)), th.classify(t));
        }
    }

    #[test]
    fn path_of_three_runs_two_searches() {
        let m = centers_to_linear(&centers(&[0.0, 1.0, 2.0]));
        let g = NeighborhoodGraph::path_from_order(&[0, 1, 2]).unwrap();
        let pool: Vec<f64> = (0..1000).map(|i| -0.5 + 3.0 * i as f64 / 1000.0).collect();
        let mut ledger = QueryLedger::new();
        let agg = nbr_graph_m2b(&m, &g, &pool, 0.1, &mut ledger).unwrap();
        assert_eq!(agg.classifiers().len(), 2);
        let per_search = (1.0f64 / 0.05).log2().ceil() as u64 + 1;
        assert!(ledger.comparisons() <= 2 * per_search);
    }

    fn disagreement(c: &CentersModel, clf: &Classifier1d, test: &[f64]) -> f64 {
        test.iter()
            .filter(|&&t| clf.predict(t) != c.nearest(t))
            .count() as f64
            / test.len() as f64
    }

    #[test]
    fn twenty_classes_end_to_end() {
        let eps = 0.05;
        let c = CentersModel::random(20, 77).unwrap();
        let m = centers_to_linear(&c);
        let samples = uniform(200, 0.0, 1.0, 1);
        let pool = uniform(20_000, 0.0, 1.0, 2);
        let mut ledger = QueryLedger::new();
        let (clf, q) = end_to_end_1d_with_pool(&m, &samples, &pool, eps, &mut ledger).unwrap();
        let test = uniform(10_000, 0.0, 1.0, 3);
        assert!(disagreement(&c, &clf, &test) <= eps);
        let bound = 10.0 * 20.0 * (20.0 / eps).log2();
        assert!((q as f64) <= bound, "{q} > {bound}");
    }

    #[test]
    fn two_classes_end_to_end_cost() {
        let eps = 0.01;
        let c = centers(&[0.25, 0.5]);
        let samples = uniform(1000, 0.0, 1.0, 6);
        let (clf, q) = end_to_end_1d(
            &centers_to_linear(&c),
            &samples,
            eps,
            &mut QueryLedger::new(),
        )
        .unwrap();
        assert!(q <= 2 + (2.0f64 / eps).log2().ceil() as u64 + 1);
        assert!(disagreement(&c, &clf, &samples) <= eps);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn learned_graph_is_a_path(seed in 0u64..10_000, k in 2usize..15, n in 1usize..60) {
            let c = CentersModel::random(k, seed).unwrap();
            let samples = uniform(n, -0.3, 1.3, seed ^ 0xabc);
            let r = learn_graph_1d(&centers_to_linear(&c), &samples, SortMode::LazySort, &mut QueryLedger::new())
                .unwrap();
            prop_assert!(r.graph.max_degree() <= 2);
            prop_assert_eq!(r.graph.edge_count(), r.placed.saturating_sub(1));
            prop_assert!(r.placed >= 1);
        }
    }
}
