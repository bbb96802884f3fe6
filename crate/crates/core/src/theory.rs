//! Exhaustive checks of small combinatorial constructions: a shattered
//! family of nearest-center models on the line, a counting bound on argmax
//! queries, and a support on which the empirical neighborhood graph misses
//! an edge that matters.

use std::fmt;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregation::GraphAggregate;
use crate::error::{Error, Result};
use crate::graph::{empirical_graph, true_graph, Edge, GraphMethod};
use crate::one_dim::{centers_to_linear, lift, total_order_at, CentersModel};
use crate::teacher::Dataset;

pub const MAX_FAMILY_K: usize = 8;

/// Nearest-center models on `2k` classes built from `k` triplets of
/// positions `{3i+1, 3i+2, 3i+3}` (`i` from 0). Class `2i + b` belongs to
/// triplet `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsFamily {
    pub k: usize,
    pub members: Vec<CentersModel>,
    /// Middle position of each triplet.
    pub points: Vec<f64>,
}

/// Every placement with one class of each triplet at the middle and the other
/// on a side. `delta > 0` pulls the side positions to `middle ± (1 − δ)`.
pub fn build_ds_family_perturbed(k: usize, delta: f64) -> Result<DsFamily> {
    if k == 0 || k > MAX_FAMILY_K {
        return Err(Error::invalid(format!(
            "family size k must lie in 1..={MAX_FAMILY_K}"
        )));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::invalid("delta must lie in [0, 1)"));
    }
    let side = 1.0 - delta;
    let points: Vec<f64> = (0..k).map(|i| (3 * i + 2) as f64).collect();
    let members = (0..1usize << (2 * k))
        .map(|code| {
            let mut centers = vec![0.0; 2 * k];
            for (i, &mid) in points.iter().enumerate() {
                let bits = (code >> (2 * i)) & 3;
                let middle_class = bits & 1;
                let offset = if bits & 2 == 0 { -side } else { side };
                centers[2 * i + middle_class] = mid;
                centers[2 * i + (1 - middle_class)] = mid + offset;
            }
            CentersModel::new(centers)
        })
        .collect::<Result<_>>()?;
    Ok(DsFamily { k, members, points })
}

pub fn build_ds_family(k: usize) -> Result<DsFamily> {
    build_ds_family_perturbed(k, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosenessMode {
    /// Full orders agree away from point `i`; argmaxes differ at `i`.
    Strict,
    /// Argmaxes agree away from point `i` and differ at `i`.
    ArgmaxOnly,
}

/// Whether `f` and `g` differ at `points[i]` and nowhere else, in the given mode.
pub fn is_xi_close(
    f: &CentersModel,
    g: &CentersModel,
    points: &[f64],
    i: usize,
    mode: ClosenessMode,
) -> bool {
    if f.nearest(points[i]) == g.nearest(points[i]) {
        return false;
    }
    points
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .all(|(_, &t)| match mode {
            ClosenessMode::Strict => total_order_at(f, t) == total_order_at(g, t),
            ClosenessMode::ArgmaxOnly => f.nearest(t) == g.nearest(t),
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShatteringReport {
    pub k: usize,
    pub mode: ClosenessMode,
    pub members: usize,
    pub checked: usize,
    pub passes: bool,
    /// `(f, i, g)`: member `g` is a partner of `f` at point `i`.
    pub witnesses: Vec<(usize, usize, usize)>,
    /// `(f, i)` without a partner; at most the first 20.
    pub failures: Vec<(usize, usize)>,
    pub failure_count: usize,
}

impl fmt::Display for ShatteringReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "shattering k={} mode={:?}: {} ({} members, {} of {} (member, point) pairs lack a partner)",
            self.k,
            self.mode,
            if self.passes { "PASS" } else { "FAIL" },
            self.members,
            self.failure_count,
            self.checked
        )?;
        for (m, i) in &self.failures {
            writeln!(f, "  no partner for member {m} at point {i}")?;
        }
        Ok(())
    }
}

pub fn verify_shattering(family: &DsFamily, mode: ClosenessMode) -> ShatteringReport {
    // per-member signature at every point, so the pairwise search only compares vectors
    let sig: Vec<Vec<Vec<usize>>> = family
        .members
        .par_iter()
        .map(|m| {
            family
                .points
                .iter()
                .map(|&t| match mode {
                    ClosenessMode::Strict => total_order_at(m, t).ranking().to_vec(),
                    ClosenessMode::ArgmaxOnly => vec![m.nearest(t)],
                })
                .collect()
        })
        .collect();
    let n = family.points.len();
    let results: Vec<(usize, usize, Option<usize>)> = (0..family.members.len())
        .into_par_iter()
        .flat_map_iter(|f| {
            let sig = &sig;
            (0..n).map(move |i| {
                let partner = (0..sig.len()).find(|&g| {
                    sig[f][i][0] != sig[g][i][0] && (0..n).all(|j| j == i || sig[f][j] == sig[g][j])
                });
                (f, i, partner)
            })
        })
        .collect();
    let witnesses: Vec<_> = results
        .iter()
        .filter_map(|&(f, i, g)| g.map(|g| (f, i, g)))
        .collect();
    let all_failures: Vec<_> = results
        .iter()
        .filter(|r| r.2.is_none())
        .map(|&(f, i, _)| (f, i))
        .collect();
    ShatteringReport {
        k: family.k,
        mode,
        members: family.members.len(),
        checked: results.len(),
        passes: all_failures.is_empty(),
        failure_count: all_failures.len(),
        failures: all_failures.into_iter().take(20).collect(),
        witnesses,
    }
}

/// Smallest `q` with `k^q ≥ k!·C(n, k−1)`.
pub fn argmax_query_lower_bound(n: u64, k: u64) -> Result<u64> {
    if k < 2 || n < k - 1 {
        return Err(Error::invalid(format!(
            "need n ≥ k − 1 ≥ 1, got n={n}, k={k}"
        )));
    }
    let mut count = BigUint::from(1u32);
    for f in 2..=k {
        count *= f;
    }
    // C(n, k−1) built incrementally; each partial product is an exact binomial
    let mut binom = BigUint::from(1u32);
    for r in 0..k - 1 {
        binom = binom * (n - r) / (r + 1);
    }
    count *= binom;
    let base = BigUint::from(k);
    let mut power = BigUint::from(1u32);
    let mut q = 0;
    while power < count {
        power *= &base;
        q += 1;
    }
    Ok(q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub centers: Vec<f64>,
    pub support: Vec<f64>,
    pub probe: f64,
    pub empirical_edges: Vec<Edge>,
    pub true_edges: Vec<Edge>,
    pub teacher_label: usize,
    pub empirical_label: usize,
    pub true_graph_label: usize,
    pub empirical_scores: Vec<f64>,
    /// Empirical-graph aggregate is wrong at the probe while the true-graph one is right.
    pub reproduced: bool,
}

impl fmt::Display for CounterexampleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "centers {:?}, support {:?}, probe {}",
            self.centers, self.support, self.probe
        )?;
        writeln!(f, "empirical graph {:?}", self.empirical_edges)?;
        writeln!(f, "true graph      {:?}", self.true_edges)?;
        writeln!(
            f,
            "teacher {} | empirical aggregate {} | true aggregate {} => {}",
            self.teacher_label,
            self.empirical_label,
            self.true_graph_label,
            if self.reproduced {
                "REPRODUCED"
            } else {
                "NOT REPRODUCED"
            }
        )
    }
}

/// Six classes on a line with one support point inside the left half of
/// every other pair; the probe falls between the second and third region.
pub fn empirical_graph_counterexample() -> Result<CounterexampleReport> {
    let centers = CentersModel::new((1..=6).map(f64::from).collect())?;
    let teacher = centers_to_linear(&centers);
    let support = vec![1.4, 3.4, 5.4];
    let probe = 2.6;
    let data = Dataset::new(2, support.iter().map(|&t| lift(t).to_vec()).collect())?;
    let g_emp = empirical_graph(&teacher, &data)?;
    let g_true = true_graph(&teacher, GraphMethod::Lifted1d)?;
    let x = lift(probe);
    let emp = GraphAggregate::exact(&teacher, g_emp.clone())?;
    let full = GraphAggregate::exact(&teacher, g_true.clone())?;
    let teacher_label = teacher.predict(&x)?;
    let empirical_label = emp.predict(&x);
    let true_graph_label = full.predict(&x);
    Ok(CounterexampleReport {
        centers: centers.centers().to_vec(),
        support,
        probe,
        empirical_edges: g_emp.edges().iter().copied().collect(),
        true_edges: g_true.edges().iter().copied().collect(),
        teacher_label,
        empirical_label,
        true_graph_label,
        empirical_scores: emp.scores(&x),
        reproduced: empirical_label != teacher_label && true_graph_label == teacher_label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_sizes() {
        for k in 1..=5 {
            let fam = build_ds_family(k).unwrap();
            assert_eq!(fam.members.len(), 1 << (2 * k));
            for m in &fam.members {
                let on_middle = m
                    .centers()
                    .iter()
                    .filter(|c| fam.points.contains(c))
                    .count();
                assert_eq!(on_middle, k);
            }
        }
        let fam = build_ds_family(1).unwrap();
        let mut all: Vec<Vec<f64>> = fam.members.iter().map(|m| m.centers().to_vec()).collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(
            all,
            vec![
                vec![1.0, 2.0],
                vec![2.0, 1.0],
                vec![2.0, 3.0],
                vec![3.0, 2.0]
            ]
        );
        assert!(build_ds_family(0).is_err());
        assert!(build_ds_family(MAX_FAMILY_K + 1).is_err());
    }

    #[test]
    fn closeness_examples() {
        let pts = [2.0];
        let a = CentersModel::new(vec![2.0, 3.0]).unwrap();
        let b = CentersModel::new(vec![1.0, 2.0]).unwrap();
        for mode in [ClosenessMode::Strict, ClosenessMode::ArgmaxOnly] {
            assert!(!is_xi_close(&a, &a, &pts, 0, mode));
            assert!(is_xi_close(&a, &b, &pts, 0, mode));
        }
        // moving triplet 1 leaves the argmax at point 0 alone
        let pts = [2.0, 5.0];
        let f = CentersModel::new(vec![2.0, 1.0, 5.0, 4.0]).unwrap();
        let g = CentersModel::new(vec![2.0, 1.0, 6.0, 5.0]).unwrap();
        assert!(!is_xi_close(&f, &g, &pts, 0, ClosenessMode::ArgmaxOnly));
        assert!(is_xi_close(&f, &g, &pts, 1, ClosenessMode::ArgmaxOnly));
    }

    #[test]
    fn argmax_only_shattering_holds() {
        for k in 1..=3 {
            let r = verify_shattering(&build_ds_family(k).unwrap(), ClosenessMode::ArgmaxOnly);
            assert!(r.passes, "{r}");
            assert_eq!(r.witnesses.len(), r.checked);
        }
    }

    #[test]
    fn strict_shattering_is_reported() {
        for k in 1..=2 {
            let r = verify_shattering(&build_ds_family(k).unwrap(), ClosenessMode::Strict);
            assert_eq!(r.checked, r.members * k);
            assert_eq!(r.failure_count + r.witnesses.len(), r.checked);
            let p = verify_shattering(
                &build_ds_family_perturbed(k, 0.1).unwrap(),
                ClosenessMode::Strict,
            );
            assert_eq!(p.checked, r.checked);
        }
    }

    /// Smallest `q` with `k^q ≥ k!·C(n, k−1)` in plain integers.
    fn naive_bound(n: u64, k: u64) -> u64 {
        let fact: u128 = (1..=k as u128).product();
        let mut binom: u128 = 1;
        for r in 0..k as u128 - 1 {
            binom = binom * (n as u128 - r) / (r + 1);
        }
        let target = fact * binom;
        (0..).find(|&q| (k as u128).pow(q) >= target).unwrap() as u64
    }

    #[test]
    fn lower_bound_examples_and_naive_agreement() {
        assert_eq!(argmax_query_lower_bound(2, 2).unwrap(), 2);
        assert_eq!(argmax_query_lower_bound(1, 2).unwrap(), 1);
        for k in 2..=5 {
            let mut prev = 0;
            for n in k - 1..=12 {
                let b = argmax_query_lower_bound(n, k).unwrap();
                assert_eq!(b, naive_bound(n, k), "n={n} k={k}");
                assert!(b >= prev);
                prev = b;
            }
        }
        assert!(argmax_query_lower_bound(0, 2).is_err());
        assert!(argmax_query_lower_bound(5, 1).is_err());
        // large inputs stay exact
        assert!(argmax_query_lower_bound(1_000_000, 60).unwrap() > 0);
    }

    #[test]
    fn counterexample_reproduces() {
        let r = empirical_graph_counterexample().unwrap();
        assert_eq!(r.empirical_edges, vec![(0, 1), (2, 3), (4, 5)]);
        assert_eq!(r.true_edges, vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]);
        assert_eq!(r.teacher_label, 2);
        assert_eq!(r.true_graph_label, 2);
        assert_ne!(r.empirical_label, 2);
        assert!(r.reproduced);
        assert_eq!(r, empirical_graph_counterexample().unwrap());
    }
}
