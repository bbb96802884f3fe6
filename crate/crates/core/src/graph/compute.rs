use std::collections::BTreeSet;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Edge, NeighborhoodGraph};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, sub, top_two};
use crate::rng::{derive_seed, gaussian_vec, rng_from_seed};
use crate::teacher::{Dataset, LinearModel};

pub const DEFAULT_MC_SAMPLES: usize = 2048;
pub const DEFAULT_MC_TOL: f64 = 1e-9;

/// How boundary witnesses are searched for.
///
/// Witnesses live on the unit sphere since homogeneous scores all tie at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphMethod {
    /// `d = 2`: the boundary of a pair meets the circle in two antipodal
    /// points, both tested exactly.
    Exact2d,
    /// `d = 2` models acting on lifted scalars `(t, 1)`: the boundary of a pair
    /// is a single point of the line, tested exactly. This is the graph of a
    /// 1D classifier; on the full circle the antipodal half reverses every
    /// order and adds spurious edges.
    Lifted1d,
    /// Uniform directions inside the nullspace of `w_i − w_j`, accepted when
    /// no other class beats the pair by more than `tol`. Edges whose witness
    /// set is tiny can be missed.
    MonteCarlo { samples: usize, tol: f64, seed: u64 },
    /// Linear program maximizing the pair's lead over every other class
    /// inside the tie hyperplane (coordinates boxed to `[−1, 1]`). An edge
    /// needs a lead above `tol`, so contacts of lower dimension are dropped.
    Lp { tol: f64 },
}

impl GraphMethod {
    pub fn monte_carlo(seed: u64) -> Self {
        GraphMethod::MonteCarlo {
            samples: DEFAULT_MC_SAMPLES,
            tol: DEFAULT_MC_TOL,
            seed,
        }
    }
}

/// Neighborhood graph of `model` over all classes.
pub fn true_graph(model: &LinearModel, method: GraphMethod) -> Result<NeighborhoodGraph> {
    let all: BTreeSet<usize> = (0..model.k()).collect();
    true_graph_among(model, method, &all)
}

/// Neighborhood graph restricted to pairs inside `classes`. Every class still
/// competes as a potential blocker of a witness.
pub fn true_graph_among(
    model: &LinearModel,
    method: GraphMethod,
    classes: &BTreeSet<usize>,
) -> Result<NeighborhoodGraph> {
    match method {
        GraphMethod::Exact2d | GraphMethod::Lifted1d if model.d() != 2 => {
            return Err(Error::invalid(format!(
                "exact graph needs d = 2, model has d = {}",
                model.d()
            )))
        }
        GraphMethod::MonteCarlo { samples, tol, .. } if samples == 0 || !(tol > 0.0) => {
            return Err(Error::invalid("monte carlo needs samples >= 1 and tol > 0"))
        }
        GraphMethod::Lp { tol } if !(tol >= 0.0) => {
            return Err(Error::invalid("lp tolerance must be non-negative"))
        }
        _ => {}
    }
    if let Some(&c) = classes.iter().find(|&&c| c >= model.k()) {
        return Err(Error::ClassOutOfRange {
            index: c,
            k: model.k(),
        });
    }
    let list: Vec<usize> = classes.iter().copied().collect();
    let pairs: Vec<Edge> = list
        .iter()
        .enumerate()
        .flat_map(|(a, &i)| list[a + 1..].iter().map(move |&j| (i, j)))
        .collect();
    let found: Vec<Edge> = pairs
        .par_iter()
        .map(|&(i, j)| Ok(shares_boundary(model, method, i, j)?.then_some((i, j))))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    NeighborhoodGraph::from_edges(model.k(), found)
}

fn shares_boundary(model: &LinearModel, method: GraphMethod, i: usize, j: usize) -> Result<bool> {
    let diff = sub(model.row(i), model.row(j));
    if diff.iter().all(|&v| v == 0.0) {
        warn!("classes {i} and {j} have identical rows; their boundary is everywhere");
        return Ok(true);
    }
    if let GraphMethod::Lp { tol } = method {
        return Ok(pair_lead(model, &diff, i, j)? > tol);
    }
    Ok(match method {
        GraphMethod::Exact2d => {
            let u = [-diff[1], diff[0]];
            let back = [diff[1], -diff[0]];
            dominates(model, &u, i, j, 0.0) || dominates(model, &back, i, j, 0.0)
        }
        GraphMethod::Lifted1d => {
            if diff[0] == 0.0 {
                // parallel boundary: one class wins on the whole line
                return Ok(false);
            }
            let t = -diff[1] / diff[0];
            dominates(model, &[t, 1.0], i, j, 0.0)
        }
        GraphMethod::MonteCarlo { samples, tol, seed } => {
            let pair_seed = derive_seed(seed, (i * model.k() + j) as u64);
            let mut rng = rng_from_seed(pair_seed);
            let vv = dot(&diff, &diff);
            for _ in 0..samples {
                let mut x = gaussian_vec(&mut rng, model.d());
                let proj = dot(&x, &diff) / vv;
                x.iter_mut()
                    .zip(&diff)
                    .for_each(|(xv, dv)| *xv -= proj * dv);
                let n = norm(&x);
                if n < 1e-12 {
                    continue;
                }
                x.iter_mut().for_each(|v| *v /= n);
                if dominates(model, &x, i, j, tol) {
                    return Ok(true);
                }
            }
            false
        }
        GraphMethod::Lp { .. } => unreachable!("handled above"),
    })
}

/// Largest `t` such that some boxed `x` with `(w_i − w_j)·x = 0` has
/// `(w_i − w_r)·x ≥ t` for every other class `r`; capped at 1.
fn pair_lead(model: &LinearModel, diff: &[f64], i: usize, j: usize) -> Result<f64> {
    use microlp::{ComparisonOp, OptimizationDirection, Problem};
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let x: Vec<_> = (0..model.d())
        .map(|_| lp.add_var(0.0, (-1.0, 1.0)))
        .collect();
    let t = lp.add_var(1.0, (f64::NEG_INFINITY, 1.0));
    let tie: Vec<_> = x.iter().copied().zip(diff.iter().copied()).collect();
    lp.add_constraint(&tie, ComparisonOp::Eq, 0.0);
    for r in (0..model.k()).filter(|&r| r != i && r != j) {
        let mut row: Vec<_> = x
            .iter()
            .zip(model.row(i).iter().zip(model.row(r)))
            .map(|(&v, (a, b))| (v, a - b))
            .collect();
        row.push((t, -1.0));
        lp.add_constraint(&row, ComparisonOp::Ge, 0.0);
    }
    let solution = lp
        .solve()
        .map_err(|e| Error::invalid(format!("lp for pair ({i}, {j}) failed: {e}")))?;
    Ok(solution.objective())
}

/// The tied pair `(i, j)` scores at least as high as every other class at `x`, up to `tol`.
fn dominates(model: &LinearModel, x: &[f64], i: usize, j: usize, tol: f64) -> bool {
    let level = 0.5 * (model.score_unchecked(i, x) + model.score_unchecked(j, x));
    (0..model.k())
        .filter(|&r| r != i && r != j)
        .all(|r| model.score_unchecked(r, x) <= level + tol)
}

/// Runner-up graph: edge `(i, j)` when some point has argmax `i` and
/// second-highest score `j` (or vice versa), ties broken by index at both ranks.
///
/// A class that never wins on the data can still appear as a runner-up, so the
/// graph may touch classes with no decision region of their own; restrict to
/// the effective classes before comparing with the true graph.
pub fn empirical_graph(model: &LinearModel, dataset: &Dataset) -> Result<NeighborhoodGraph> {
    if dataset.is_empty() {
        return Err(Error::invalid("empirical graph needs a nonempty dataset"));
    }
    if dataset.dim() != model.d() {
        return Err(Error::DimensionMismatch {
            expected: model.d(),
            actual: dataset.dim(),
        });
    }
    let edges: BTreeSet<Edge> = dataset
        .points()
        .par_iter()
        .map(|x| {
            let (a, b) = top_two(&model.scores_unchecked(x));
            super::canonical(a, b)
        })
        .collect();
    NeighborhoodGraph::from_edges(model.k(), edges)
}
