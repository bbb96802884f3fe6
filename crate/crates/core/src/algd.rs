//! Margin-gated comparison learning on graph edges with buffered logistic
//! gradient steps.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, NeighborhoodGraph};
use crate::linalg::{sigmoid, softplus};
use crate::rng::{rng_from_seed, SimRng};
use crate::teacher::{Dataset, LabelOracle, LinearModel, QueryLedger};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeMode {
    /// One uniformly drawn edge per point.
    SampleOne,
    /// Every edge of the graph at every point.
    #[default]
    IterateAll,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgdParams {
    pub buffer_size: usize,
    pub steps: usize,
    /// Query only when the student's margin on the edge is below this.
    pub confidence: f64,
    pub learning_rate: f64,
    pub edge_mode: EdgeMode,
    pub seed: u64,
}

impl Default for AlgdParams {
    fn default() -> Self {
        Self {
            buffer_size: 32,
            steps: 2000,
            confidence: 1.0,
            learning_rate: 0.1,
            edge_mode: EdgeMode::IterateAll,
            seed: 0,
        }
    }
}

impl AlgdParams {
    pub fn validate(&self) -> Result<()> {
        if self.buffer_size == 0 {
            return Err(Error::invalid("buffer_size must be at least 1"));
        }
        if self.confidence.is_nan() || self.confidence < 0.0 {
            return Err(Error::invalid("confidence must be non-negative"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate must be positive and finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgdConfig {
    pub graph: NeighborhoodGraph,
    pub params: AlgdParams,
}

/// One buffered term `log(1 + exp(−c·(h_i − h_j)))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTerm {
    pub x: Vec<f64>,
    pub i: usize,
    pub j: usize,
    pub c: f64,
}

pub fn loss_value(w: &LinearModel, x: &[f64], i: usize, j: usize, c: f64) -> f64 {
    softplus(-c * w.margin_unchecked(x, i, j))
}

/// Gradient of the summed buffered loss, laid out like the weights.
pub fn loss_gradient(w: &LinearModel, terms: &[LossTerm]) -> Vec<f64> {
    let d = w.d();
    let mut grad = vec![0.0; w.weights().len()];
    for t in terms {
        let g = -t.c * sigmoid(-t.c * w.margin_unchecked(&t.x, t.i, t.j));
        for (a, &xv) in t.x.iter().enumerate() {
            grad[t.i * d + a] += g * xv;
            grad[t.j * d + a] -= g * xv;
        }
    }
    grad
}

/// Anything trained one streamed point at a time against a comparison oracle.
pub trait StreamLearner {
    fn observe(
        &mut self,
        oracle: &dyn LabelOracle,
        x: &[f64],
        ledger: &mut QueryLedger,
    ) -> Result<()>;

    fn model(&self) -> &LinearModel;

    /// Comparisons this learner has issued.
    fn queries(&self) -> u64;
}

pub struct AlgdTrainer {
    edges: Vec<Edge>,
    params: AlgdParams,
    weights: LinearModel,
    pending: Vec<LossTerm>,
    queries: u64,
    updates: u64,
    rng: SimRng,
}

impl AlgdTrainer {
    /// Starts from the zero matrix.
    pub fn new(config: &AlgdConfig, d: usize) -> Result<Self> {
        config.params.validate()?;
        if config.graph.is_empty() {
            return Err(Error::EmptyGraph);
        }
        Ok(Self {
            edges: config.graph.edges().iter().copied().collect(),
            params: config.params.clone(),
            weights: LinearModel::zeros(config.graph.k(), d)?,
            pending: Vec::new(),
            queries: 0,
            updates: 0,
            rng: rng_from_seed(config.params.seed),
        })
    }

    pub fn buffered(&self) -> usize {
        self.pending.len()
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn into_model(self) -> LinearModel {
        self.weights
    }

    fn consider(
        &mut self,
        oracle: &dyn LabelOracle,
        x: &[f64],
        (i, j): Edge,
        ledger: &mut QueryLedger,
    ) -> Result<()> {
        if self.weights.margin_unchecked(x, i, j).abs() < self.params.confidence {
            let c = if oracle.compare(x, i, j, ledger)? {
                1.0
            } else {
                -1.0
            };
            let loss = loss_value(&self.weights, x, i, j, c);
            if !loss.is_finite() {
                return Err(Error::NonFinite("loss"));
            }
            self.pending.push(LossTerm {
                x: x.to_vec(),
                i,
                j,
                c,
            });
            self.queries += 1;
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        let grad = loss_gradient(&self.weights, &self.pending);
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

impl StreamLearner for AlgdTrainer {
    fn observe(
        &mut self,
        oracle: &dyn LabelOracle,
        x: &[f64],
        ledger: &mut QueryLedger,
    ) -> Result<()> {
        self.weights.check_dim(x)?;
        match self.params.edge_mode {
            EdgeMode::SampleOne => {
                let e = self.edges[self.rng.random_range(0..self.edges.len())];
                self.consider(oracle, x, e, ledger)?;
            }
            EdgeMode::IterateAll => {
                for idx in 0..self.edges.len() {
                    self.consider(oracle, x, self.edges[idx], ledger)?;
                }
            }
        }
        if self.pending.len() >= self.params.buffer_size {
            self.flush()?;
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

/// One line of a training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRow {
    pub step: usize,
    pub queries: u64,
    pub updates: u64,
}

pub fn write_train_log(rows: &[TrainLogRow], out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("train log", e))
}

/// Trains on the first `steps` points of `stream`; returns the model and the
/// comparisons spent. Pass `log` to record one row per step.
pub fn algd_train(
    config: &AlgdConfig,
    oracle: &dyn LabelOracle,
    stream: &Dataset,
    ledger: &mut QueryLedger,
    mut log: Option<&mut Vec<TrainLogRow>>,
) -> Result<(LinearModel, u64)> {
    let steps = config.params.steps;
    if stream.len() < steps {
        return Err(Error::StreamExhausted {
            got: stream.len(),
            needed: steps,
        });
    }
    let mut trainer = AlgdTrainer::new(config, stream.dim())?;
    for (step, x) in stream.iter().take(steps).enumerate() {
        trainer.observe(oracle, x, ledger)?;
        if let Some(log) = log.as_deref_mut() {
            log.push(TrainLogRow {
                step: step + 1,
                queries: trainer.queries,
                updates: trainer.updates,
            });
        }
    }
    let q = trainer.queries;
    Ok((trainer.into_model(), q))
}
