//! Tournament baselines: recover the argmax label with `k − 1` comparisons,
//! optionally letting a confident student settle some duels, and train on the
//! recovered labels with a softmax cross-entropy buffer.

use serde::{Deserialize, Serialize};

use crate::algd::StreamLearner;
use crate::error::{Error, Result};
use crate::linalg::top_two;
use crate::teacher::{Dataset, LabelOracle, LinearModel, QueryLedger};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Answerer {
    Oracle,
    Model,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Duel {
    /// Current champion.
    pub champion: usize,
    pub challenger: usize,
    pub winner: usize,
    pub answered_by: Answerer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TournamentResult {
    pub winner: usize,
    pub duels: Vec<Duel>,
    pub oracle_queries: u64,
}

fn scan(
    k: usize,
    mut duel: impl FnMut(usize, usize) -> Result<(bool, Answerer)>,
) -> Result<TournamentResult> {
    let mut champion = 0;
    let mut duels = Vec::with_capacity(k.saturating_sub(1));
    let mut oracle_queries = 0;
    for challenger in 1..k {
        let (challenger_wins, answered_by) = duel(champion, challenger)?;
        if answered_by == Answerer::Oracle {
            oracle_queries += 1;
        }
        let winner = if challenger_wins {
            challenger
        } else {
            champion
        };
        duels.push(Duel {
            champion,
            challenger,
            winner,
            answered_by,
        });
        champion = winner;
    }
    Ok(TournamentResult {
        winner: champion,
        duels,
        oracle_queries,
    })
}

/// Champion scan over labels in ascending order; a challenger must score
/// strictly higher to take over, so the earlier label survives ties.
pub fn champion_tournament(
    oracle: &dyn LabelOracle,
    x: &[f64],
    ledger: &mut QueryLedger,
) -> Result<TournamentResult> {
    scan(oracle.num_classes(), |champ, chal| {
        Ok((oracle.compare(x, chal, champ, ledger)?, Answerer::Oracle))
    })
}

/// Champion scan where the student settles any duel whose margin is at
/// least `tau`; the oracle answers the rest.
pub fn active_tournament(
    student: &LinearModel,
    oracle: &dyn LabelOracle,
    x: &[f64],
    tau: f64,
    ledger: &mut QueryLedger,
) -> Result<TournamentResult> {
    if student.k() != oracle.num_classes() {
        return Err(Error::invalid(
            "student and oracle disagree on the class count",
        ));
    }
    let scores = student.scores(x)?;
    scan(oracle.num_classes(), |champ, chal| {
        let margin = scores[chal] - scores[champ];
        if margin.abs() >= tau {
            Ok((margin > 0.0, Answerer::Model))
        } else {
            Ok((oracle.compare(x, chal, champ, ledger)?, Answerer::Oracle))
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TournamentParams {
    /// Reveal a label when the student's top-two logit gap is below this.
    pub margin: f64,
    /// Student settles duels whose margin is at least this (active variant).
    pub duel_margin: f64,
    pub buffer_size: usize,
    pub steps: usize,
    pub learning_rate: f64,
}

impl Default for TournamentParams {
    fn default() -> Self {
        Self {
            margin: 1.0,
            duel_margin: 1.0,
            buffer_size: 32,
            steps: 2000,
            learning_rate: 0.1,
        }
    }
}

impl TournamentParams {
    pub fn validate(&self) -> Result<()> {
        if self.buffer_size == 0 {
            return Err(Error::invalid("buffer_size must be at least 1"));
        }
        if self.margin.is_nan() || self.duel_margin.is_nan() {
            return Err(Error::invalid("margins must not be NaN"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate must be positive and finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TournamentKind {
    Passive,
    Active,
}

/// Gradient of `Σ −log softmax_y(W x)` over buffered `(x, y)` pairs.
pub fn softmax_xent_gradient(w: &LinearModel, terms: &[(Vec<f64>, usize)]) -> Vec<f64> {
    let d = w.d();
    let mut grad = vec![0.0; w.weights().len()];
    for (x, y) in terms {
        let s = w.scores_unchecked(x);
        let top = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = s.iter().map(|v| (v - top).exp()).collect();
        let z: f64 = e.iter().sum();
        for (r, er) in e.iter().enumerate() {
            let coef = er / z - if r == *y { 1.0 } else { 0.0 };
            for (a, xv) in x.iter().enumerate() {
                grad[r * d + a] += coef * xv;
            }
        }
    }
    grad
}

/// `−log softmax_y(W x)`.
pub fn softmax_xent_loss(w: &LinearModel, x: &[f64], y: usize) -> f64 {
    let s = w.scores_unchecked(x);
    let top = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = top + s.iter().map(|v| (v - top).exp()).sum::<f64>().ln();
    lse - s[y]
}

/// Uncertainty-sampling learner fed by tournament-revealed labels.
pub struct TournamentLearner {
    kind: TournamentKind,
    params: TournamentParams,
    weights: LinearModel,
    pending: Vec<(Vec<f64>, usize)>,
    queries: u64,
    updates: u64,
}

impl TournamentLearner {
    pub fn new(
        kind: TournamentKind,
        params: &TournamentParams,
        k: usize,
        d: usize,
    ) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            kind,
            params: params.clone(),
            weights: LinearModel::zeros(k, d)?,
            pending: Vec::new(),
            queries: 0,
            updates: 0,
        })
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn into_model(self) -> LinearModel {
        self.weights
    }

    fn flush(&mut self) -> Result<()> {
        let grad = softmax_xent_gradient(&self.weights, &self.pending);
        let eta = self.params.learning_rate;
        let weights = self
            .weights
            .weights()
            .iter()
            .zip(&grad)
            .map(|(w, g)| w - eta * g)
            .collect();
        self.weights = LinearModel::new(self.weights.k(), self.weights.d(), weights)
            .map_err(|_| Error::NonFinite("weights"))?;
        self.pending.clear();
        self.updates += 1;
        Ok(())
    }
}

impl StreamLearner for TournamentLearner {
    fn observe(
        &mut self,
        oracle: &dyn LabelOracle,
        x: &[f64],
        ledger: &mut QueryLedger,
    ) -> Result<()> {
        let scores = self.weights.scores(x)?;
        let (a, b) = top_two(&scores);
        if scores[a] - scores[b] < self.params.margin {
            let result = match self.kind {
                TournamentKind::Passive => champion_tournament(oracle, x, ledger)?,
                TournamentKind::Active => {
                    active_tournament(&self.weights, oracle, x, self.params.duel_margin, ledger)?
                }
            };
            self.queries += result.oracle_queries;
            self.pending.push((x.to_vec(), result.winner));
            if self.pending.len() >= self.params.buffer_size {
                self.flush()?;
            }
        }
        Ok(())
    }

    fn model(&self) -> &LinearModel {
        &self.weights
    }

    fn queries(&self) -> u64 {
        self.queries
    }
}

fn train(
    kind: TournamentKind,
    params: &TournamentParams,
    oracle: &dyn LabelOracle,
    stream: &Dataset,
    ledger: &mut QueryLedger,
) -> Result<(LinearModel, u64)> {
    if stream.len() < params.steps {
        return Err(Error::StreamExhausted {
            got: stream.len(),
            needed: params.steps,
        });
    }
    let mut learner = TournamentLearner::new(kind, params, oracle.num_classes(), stream.dim())?;
    for x in stream.iter().take(params.steps) {
        learner.observe(oracle, x, ledger)?;
    }
    let q = learner.queries;
    Ok((learner.into_model(), q))
}

pub fn passive_tournament_learner(
    params: &TournamentParams,
    oracle: &dyn LabelOracle,
    stream: &Dataset,
    ledger: &mut QueryLedger,
) -> Result<(LinearModel, u64)> {
    train(TournamentKind::Passive, params, oracle, stream, ledger)
}

pub fn active_tournament_learner(
    params: &TournamentParams,
    oracle: &dyn LabelOracle,
    stream: &Dataset,
    ledger: &mut QueryLedger,
) -> Result<(LinearModel, u64)> {
    train(TournamentKind::Active, params, oracle, stream, ledger)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_vec, rng_from_seed};
    use crate::teacher::{argmax_query, sample_sphere};
    use proptest::prelude::*;

    fn diag(values: &[f64]) -> LinearModel {
        LinearModel::new(values.len(), 1, values.to_vec()).unwrap()
    }

    fn random_teacher(k: usize, d: usize, seed: u64) -> LinearModel {
        LinearModel::new(k, d, gaussian_vec(&mut rng_from_seed(seed), k * d)).unwrap()
    }

    #[test]
    fn scan_examples() {
        let mut l = QueryLedger::new();
        let r = champion_tournament(&diag(&[3.0, 1.0, 2.0]), &[1.0], &mut l).unwrap();
        assert_eq!((r.winner, r.oracle_queries, l.comparisons()), (0, 2, 2));
        let inc: Vec<f64> = (0..7).map(|i| i as f64).collect();
        let r = champion_tournament(&diag(&inc), &[1.0], &mut l).unwrap();
        assert_eq!((r.winner, r.oracle_queries), (6, 6));
        assert!(r.duels.iter().all(|d| d.winner == d.challenger));
    }

    #[test]
    fn earlier_champion_survives_ties() {
        let r = champion_tournament(
            &diag(&[1.0, 2.0, 2.0, 0.0]),
            &[1.0],
            &mut QueryLedger::new(),
        )
        .unwrap();
        assert_eq!(r.winner, 1);
    }

    #[test]
    fn scan_agrees_with_argmax() {
        let teacher = random_teacher(12, 4, 3);
        let mut l = QueryLedger::new();
        for x in sample_sphere(4, 10_000, 1).unwrap().iter() {
            let r = champion_tournament(&teacher, x, &mut l).unwrap();
            assert_eq!(r.winner, argmax_query(&teacher, x, &mut l).unwrap());
            assert_eq!(r.oracle_queries, 11);
        }
        assert_eq!(l.comparisons(), 11 * 10_000);
    }

    #[test]
    fn gate_extremes() {
        let teacher = random_teacher(6, 3, 5);
        let student = random_teacher(6, 3, 6);
        let x = [0.3, -0.2, 0.9];
        let mut l = QueryLedger::new();
        let zero = active_tournament(&student, &teacher, &x, 0.0, &mut l).unwrap();
        assert_eq!(zero.oracle_queries, 0);
        assert_eq!(zero.winner, student.predict(&x).unwrap());
        let inf = active_tournament(&student, &teacher, &x, f64::INFINITY, &mut l).unwrap();
        assert_eq!(
            inf,
            champion_tournament(&teacher, &x, &mut QueryLedger::new()).unwrap()
        );
        assert_eq!(l.comparisons(), 5);
    }

    #[test]
    fn teacher_as_student_needs_no_queries_away_from_ties() {
        let teacher = random_teacher(8, 3, 7);
        let tau = 0.05;
        for x in sample_sphere(3, 1000, 2).unwrap().iter() {
            let s = teacher.scores(x).unwrap();
            let clear = (0..8).all(|a| (0..a).all(|b| (s[a] - s[b]).abs() >= tau));
            let mut l = QueryLedger::new();
            let r = active_tournament(&teacher, &teacher, x, tau, &mut l).unwrap();
            assert_eq!(r.winner, teacher.predict(x).unwrap());
            if clear {
                assert_eq!(l.comparisons(), 0);
            }
        }
    }

    #[test]
    fn xent_gradient_matches_finite_differences() {
        let mut rng = rng_from_seed(2);
        for _ in 0..50 {
            let w = LinearModel::new(4, 3, gaussian_vec(&mut rng, 12)).unwrap();
            let terms = vec![
                (gaussian_vec(&mut rng, 3), 2),
                (gaussian_vec(&mut rng, 3), 0),
            ];
            let g = softmax_xent_gradient(&w, &terms);
            for p in 0..12 {
                let shifted = |h: f64| {
                    let mut v = w.weights().to_vec();
                    v[p] += h;
                    let m = LinearModel::new(4, 3, v).unwrap();
                    terms
                        .iter()
                        .map(|(x, y)| softmax_xent_loss(&m, x, *y))
                        .sum::<f64>()
                };
                let num = (shifted(1e-5) - shifted(-1e-5)) / 2e-5;
                assert!((num - g[p]).abs() <= 1e-6 * g[p].abs().max(1.0));
            }
        }
    }

    #[test]
    fn margin_extremes() {
        let teacher = random_teacher(5, 3, 8);
        let stream = sample_sphere(3, 200, 3).unwrap();
        let base = TournamentParams {
            steps: 200,
            ..Default::default()
        };
        let none = TournamentParams {
            margin: 0.0,
            ..base.clone()
        };
        let (w, q) =
            passive_tournament_learner(&none, &teacher, &stream, &mut QueryLedger::new()).unwrap();
        assert_eq!(q, 0);
        assert!(w.weights().iter().all(|&v| v == 0.0));
        let all = TournamentParams {
            margin: f64::INFINITY,
            ..base
        };
        let mut l = QueryLedger::new();
        let (_, q) = passive_tournament_learner(&all, &teacher, &stream, &mut l).unwrap();
        assert_eq!(q, 4 * 200);
        assert_eq!(l.comparisons(), q);
    }

    fn agreement(a: &LinearModel, b: &LinearModel, test: &Dataset) -> f64 {
        test.iter()
            .filter(|x| a.predict(x).unwrap() == b.predict(x).unwrap())
            .count() as f64
            / test.len() as f64
    }

    #[test]
    fn passive_learner_fits_small_teacher() {
        let teacher = random_teacher(5, 3, 21);
        let stream = sample_sphere(3, 2000, 4).unwrap();
        let params = TournamentParams {
            margin: f64::INFINITY,
            buffer_size: 1,
            steps: 2000,
            learning_rate: 0.5,
            ..Default::default()
        };
        let (w, _) =
            passive_tournament_learner(&params, &teacher, &stream, &mut QueryLedger::new())
                .unwrap();
        let test = sample_sphere(3, 5000, 5).unwrap();
        let acc = agreement(&w, &teacher, &test);
        assert!(acc >= 0.9, "agreement {acc}");
    }

    #[test]
    fn infinite_duel_margin_matches_passive() {
        let teacher = random_teacher(6, 3, 9);
        let stream = sample_sphere(3, 500, 6).unwrap();
        let params = TournamentParams {
            steps: 500,
            duel_margin: f64::INFINITY,
            ..Default::default()
        };
        let p = passive_tournament_learner(&params, &teacher, &stream, &mut QueryLedger::new())
            .unwrap();
        let a =
            active_tournament_learner(&params, &teacher, &stream, &mut QueryLedger::new()).unwrap();
        assert_eq!(p, a);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn active_never_queries_more_per_step(seed in 0u64..5000, tau in 0.0f64..2.0) {
            let teacher = random_teacher(6, 3, seed);
            let stream = sample_sphere(3, 300, seed + 1).unwrap();
            let params = TournamentParams { steps: 300, duel_margin: tau, margin: f64::INFINITY, ..Default::default() };
            let mut passive = TournamentLearner::new(TournamentKind::Passive, &params, 6, 3).unwrap();
            let mut active = TournamentLearner::new(TournamentKind::Active, &params, 6, 3).unwrap();
            let (mut lp, mut la) = (QueryLedger::new(), QueryLedger::new());
            for x in stream.iter() {
                passive.observe(&teacher, x, &mut lp).unwrap();
                active.observe(&teacher, x, &mut la).unwrap();
                prop_assert!(active.queries() <= passive.queries());
                prop_assert_eq!(la.comparisons(), active.queries());
            }
        }
    }
}
