use serde::{Deserialize, Serialize};

use super::LinearModel;
use crate::error::{Error, Result};
use crate::linalg::argmax;

/// Running totals of oracle calls made during one learner run.
///
/// Counters only move forward; there is no reset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    comparisons: u64,
    argmaxes: u64,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn comparisons(&self) -> u64 {
        self.comparisons
    }

    pub fn argmaxes(&self) -> u64 {
        self.argmaxes
    }

    pub fn total(&self) -> u64 {
        self.comparisons + self.argmaxes
    }

    fn record_comparison(&mut self) {
        self.comparisons += 1;
    }

    fn record_argmax(&mut self) {
        self.argmaxes += 1;
    }
}

/// Supervision source answering argmax and label-comparison queries.
///
/// Every answered query is charged to the caller's ledger.
pub trait LabelOracle {
    fn num_classes(&self) -> usize;

    fn dim(&self) -> usize;

    /// Top-scoring class at `x`, lowest index on ties.
    fn argmax(&self, x: &[f64], ledger: &mut QueryLedger) -> Result<usize>;

    /// `true` iff class `j1` scores strictly higher than `j2` at `x`.
    fn compare(&self, x: &[f64], j1: usize, j2: usize, ledger: &mut QueryLedger) -> Result<bool>;
}

impl LabelOracle for LinearModel {
    fn num_classes(&self) -> usize {
        self.k()
    }

    fn dim(&self) -> usize {
        self.d()
    }

    fn argmax(&self, x: &[f64], ledger: &mut QueryLedger) -> Result<usize> {
        argmax_query(self, x, ledger)
    }

    fn compare(&self, x: &[f64], j1: usize, j2: usize, ledger: &mut QueryLedger) -> Result<bool> {
        comparison_query(self, x, j1, j2, ledger)
    }
}

pub fn argmax_query(model: &LinearModel, x: &[f64], ledger: &mut QueryLedger) -> Result<usize> {
    let scores = model.scores(x)?;
    ledger.record_argmax();
    Ok(argmax(&scores))
}

/// Strict indicator `f_{j1}(x) > f_{j2}(x)`; exact ties answer `false`.
pub fn comparison_query(
    model: &LinearModel,
    x: &[f64],
    j1: usize,
    j2: usize,
    ledger: &mut QueryLedger,
) -> Result<bool> {
    model.check_dim(x)?;
    model.check_class(j1)?;
    model.check_class(j2)?;
    if j1 == j2 {
        return Err(Error::SelfComparison(j1));
    }
    ledger.record_comparison();
    Ok(model.score_unchecked(j1, x) > model.score_unchecked(j2, x))
}
