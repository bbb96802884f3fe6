//! Seeded experiment harness: synthetic teachers, graph sparsity sweeps,
//! accuracy-versus-comparisons trajectories, the 1D pipeline sweep and
//! ingestion of external feature files.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algd::{AlgdConfig, AlgdParams, AlgdTrainer, StreamLearner};
use crate::baselines::{
    softmax_xent_gradient, TournamentKind, TournamentLearner, TournamentParams,
};
use crate::error::{Error, Result};
use crate::graph::{
    empirical_graph, sparsity_among, true_graph, true_graph_among, GraphMethod, NeighborhoodGraph,
    DEFAULT_MC_TOL,
};
use crate::linalg::{norm, ranking};
use crate::one_dim::{centers_to_linear, end_to_end_1d_with_pool, CentersModel};
use crate::rng::{derive_seed, gaussian_vec, rng_from_seed, unit_vector};
use crate::teacher::{effective_classes, sample_sphere, Dataset, LinearModel, QueryLedger};

/// Rows are i.i.d. Gaussian directions scaled to unit length.
pub fn random_teacher(d: usize, k_hat: usize, seed: u64) -> Result<LinearModel> {
    let mut rng = rng_from_seed(seed);
    let weights = (0..k_hat).flat_map(|_| unit_vector(&mut rng, d)).collect();
    LinearModel::new(k_hat, d, weights)
}

/// `K = max(1, ⌈fraction·k⌉)`.
pub fn topk_size(k: usize, fraction: f64) -> usize {
    ((fraction * k as f64).ceil() as usize).clamp(1, k)
}

/// Fraction of test points whose teacher argmax is among the student's `K`
/// best logits.
pub fn topk_accuracy(
    student: &LinearModel,
    teacher: &LinearModel,
    test: &Dataset,
    fraction: f64,
) -> Result<f64> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "top-k fraction must lie in (0, 1], got {fraction}"
        )));
    }
    if student.k() != teacher.k() {
        return Err(Error::invalid("student and teacher class counts differ"));
    }
    if test.is_empty() {
        return Err(Error::invalid("empty test set"));
    }
    let kk = topk_size(student.k(), fraction);
    let mut hits = 0usize;
    for x in test.iter() {
        let truth = teacher.predict(x)?;
        if ranking(&student.scores(x)?)[..kk].contains(&truth) {
            hits += 1;
        }
    }
    Ok(hits as f64 / test.len() as f64)
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn write_csv<T: Serialize>(rows: &[T], out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("csv output", e))
}

pub fn write_csv_file<T: Serialize>(rows: &[T], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(rows, std::io::BufWriter::new(file))
}

// ---------------------------------------------------------------------------
// sparsity

/// How the experiments compute true graphs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrueGraphSearch {
    #[default]
    MonteCarlo,
    Lp,
}

impl TrueGraphSearch {
    pub fn method(self, mc_samples: usize, seed: u64) -> GraphMethod {
        match self {
            TrueGraphSearch::MonteCarlo => GraphMethod::MonteCarlo {
                samples: mc_samples,
                tol: DEFAULT_MC_TOL,
                seed,
            },
            TrueGraphSearch::Lp => GraphMethod::Lp {
                tol: DEFAULT_MC_TOL,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SparsityConfig {
    pub dims: Vec<usize>,
    pub k_hats: Vec<usize>,
    pub trials: usize,
    pub n_train: usize,
    pub mc_samples: usize,
    pub true_graph: TrueGraphSearch,
}

impl Default for SparsityConfig {
    fn default() -> Self {
        Self {
            dims: vec![5],
            k_hats: vec![10, 20, 40, 80],
            trials: 25,
            n_train: 10_000,
            mc_samples: 2048,
            true_graph: TrueGraphSearch::MonteCarlo,
        }
    }
}

/// One teacher of the sweep. Sparsities are over the effective classes of the
/// training sample; `None` when fewer than two classes are effective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityTrial {
    pub d: usize,
    pub k_hat: usize,
    pub trial: usize,
    pub effective_k: usize,
    pub true_edges: usize,
    pub empirical_edges: usize,
    pub true_sparsity: Option<f64>,
    pub empirical_sparsity: Option<f64>,
    /// Empirical edge absent from the computed true graph.
    pub mc_miss: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityCell {
    pub d: usize,
    pub k_hat: usize,
    pub trials: usize,
    pub used_trials: usize,
    pub mean_effective_k: f64,
    pub true_mean: f64,
    pub true_stderr: f64,
    pub empirical_mean: f64,
    pub empirical_stderr: f64,
    pub mc_misses: usize,
}

pub fn sparsity_trial(
    d: usize,
    k_hat: usize,
    trial: usize,
    n_train: usize,
    search: GraphMethod,
    seed: u64,
) -> Result<SparsityTrial> {
    let cell_seed = derive_seed(derive_seed(seed, d as u64), k_hat as u64);
    let trial_seed = derive_seed(cell_seed, trial as u64);
    let teacher = random_teacher(d, k_hat, derive_seed(trial_seed, 0))?;
    let train = sample_sphere(d, n_train, derive_seed(trial_seed, 1))?;
    let eff = effective_classes(&teacher, &train)?;
    let method = match search {
        GraphMethod::MonteCarlo { samples, tol, .. } => GraphMethod::MonteCarlo {
            samples,
            tol,
            seed: derive_seed(trial_seed, 2),
        },
        other => other,
    };
    let truth = true_graph_among(&teacher, method, &eff)?;
    let emp = empirical_graph(&teacher, &train)?.restricted_to(&eff);
    let k = eff.len();
    let sparsity = |g: &NeighborhoodGraph| (k >= 2).then(|| sparsity_among(g, k)).transpose();
    Ok(SparsityTrial {
        d,
        k_hat,
        trial,
        effective_k: k,
        true_edges: truth.edge_count(),
        empirical_edges: emp.edge_count(),
        true_sparsity: sparsity(&truth)?,
        empirical_sparsity: sparsity(&emp)?,
        mc_miss: !emp.is_subgraph_of(&truth),
    })
}

/// Every trial of every `(d, k̂)` cell plus the per-cell summaries.
pub fn sparsity_experiment(
    config: &SparsityConfig,
    seed: u64,
) -> Result<(Vec<SparsityTrial>, Vec<SparsityCell>)> {
    if config.trials == 0 || config.n_train == 0 || config.mc_samples == 0 {
        return Err(Error::invalid(
            "trials, n_train and mc_samples must be positive",
        ));
    }
    let jobs: Vec<(usize, usize, usize)> = config
        .dims
        .iter()
        .flat_map(|&d| {
            config
                .k_hats
                .iter()
                .flat_map(move |&k| (0..config.trials).map(move |t| (d, k, t)))
        })
        .collect();
    let trials: Vec<SparsityTrial> = jobs
        .par_iter()
        .map(|&(d, k, t)| {
            let search = config.true_graph.method(config.mc_samples, 0);
            sparsity_trial(d, k, t, config.n_train, search, seed)
        })
        .collect::<Result<_>>()?;
    let cells = trials
        .chunks(config.trials)
        .map(|chunk| {
            let used: Vec<&SparsityTrial> =
                chunk.iter().filter(|t| t.true_sparsity.is_some()).collect();
            let ts: Vec<f64> = used.iter().filter_map(|t| t.true_sparsity).collect();
            let es: Vec<f64> = used.iter().filter_map(|t| t.empirical_sparsity).collect();
            let (true_mean, true_stderr) = mean_stderr(&ts);
            let (empirical_mean, empirical_stderr) = mean_stderr(&es);
            SparsityCell {
                d: chunk[0].d,
                k_hat: chunk[0].k_hat,
                trials: chunk.len(),
                used_trials: used.len(),
                mean_effective_k: chunk.iter().map(|t| t.effective_k as f64).sum::<f64>()
                    / chunk.len() as f64,
                true_mean,
                true_stderr,
                empirical_mean,
                empirical_stderr,
                mc_misses: chunk.iter().filter(|t| t.mc_miss).count(),
            }
        })
        .collect();
    Ok((trials, cells))
}

// ---------------------------------------------------------------------------
// comparison suite

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Pairwise learner on the sampled true neighborhood graph.
    AlgdTrue,
    /// Pairwise learner on the runner-up graph of the training sample.
    AlgdEmpirical,
    /// Pairwise learner on all pairs.
    AlgdComplete,
    PassiveTournament,
    ActiveTournament,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::AlgdTrue,
        Method::AlgdEmpirical,
        Method::AlgdComplete,
        Method::PassiveTournament,
        Method::ActiveTournament,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::AlgdTrue => "algd-true",
            Method::AlgdEmpirical => "algd-empirical",
            Method::AlgdComplete => "algd-complete",
            Method::PassiveTournament => "passive-tournament",
            Method::ActiveTournament => "active-tournament",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OneDimConfig {
    pub ks: Vec<usize>,
    pub epsilon: f64,
    pub seeds: Vec<u64>,
    /// Order-learning samples per class.
    pub samples_per_class: usize,
    /// Threshold-search pool size is `pool_factor · k / ε`.
    pub pool_factor: f64,
    pub n_test: usize,
}

impl Default for OneDimConfig {
    fn default() -> Self {
        Self {
            ks: vec![5, 10, 20, 40],
            epsilon: 0.05,
            seeds: (0..10).collect(),
            samples_per_class: 10,
            pool_factor: 20.0,
            n_test: 10_000,
        }
    }
}

/// Suite settings. `steps` overrides the per-learner step counts so every
/// method sees the same stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: usize,
    pub k_hat: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub steps: usize,
    pub eval_every: usize,
    pub topk_fraction: f64,
    pub targets: Vec<f64>,
    pub mc_samples: usize,
    pub true_graph: TrueGraphSearch,
    pub algd: AlgdParams,
    pub tournament: TournamentParams,
    pub sparsity: SparsityConfig,
    pub oned: OneDimConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: 5,
            k_hat: 30,
            n_train: 10_000,
            n_test: 2000,
            seeds: (0..5).collect(),
            methods: Method::ALL.to_vec(),
            steps: 4000,
            eval_every: 100,
            topk_fraction: 0.1,
            targets: vec![0.5, 0.7, 0.8, 0.9],
            mc_samples: 2048,
            true_graph: TrueGraphSearch::MonteCarlo,
            algd: AlgdParams {
                buffer_size: 32,
                confidence: 1.0,
                learning_rate: 0.1,
                ..AlgdParams::default()
            },
            tournament: TournamentParams {
                margin: 1.0,
                duel_margin: 1.0,
                buffer_size: 32,
                learning_rate: 0.1,
                ..TournamentParams::default()
            },
            sparsity: SparsityConfig::default(),
            oned: OneDimConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(0, |s| {
                text[..s.start.min(text.len())].matches('\n').count() + 1
            });
            Error::parse(line, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d", self.d),
            ("n_train", self.n_train),
            ("n_test", self.n_test),
            ("steps", self.steps),
            ("eval_every", self.eval_every),
            ("mc_samples", self.mc_samples),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::invalid(format!("{name} must be positive")));
        }
        if self.k_hat < 2 {
            return Err(Error::invalid("k_hat must be at least 2"));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("methods must not be empty"));
        }
        let distinct: BTreeSet<u64> = self.seeds.iter().copied().collect();
        if self.seeds.is_empty() || distinct.len() != self.seeds.len() {
            return Err(Error::invalid("seeds must be nonempty and distinct"));
        }
        if !(self.topk_fraction > 0.0 && self.topk_fraction <= 1.0) {
            return Err(Error::invalid("topk_fraction must lie in (0, 1]"));
        }
        self.algd.validate()?;
        self.tournament.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub round: usize,
    pub queries: u64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRun {
    pub seed: u64,
    pub method: Method,
    pub trajectory: Vec<TrajectoryPoint>,
}

impl ExperimentRun {
    /// First evaluation reaching `target` accuracy.
    pub fn first_reaching(&self, target: f64) -> Option<TrajectoryPoint> {
        self.trajectory
            .iter()
            .copied()
            .find(|p| p.accuracy >= target)
    }

    pub fn at_round(&self, round: usize) -> Option<TrajectoryPoint> {
        self.trajectory.iter().copied().find(|p| p.round == round)
    }

    /// Last evaluation whose cumulative comparisons do not exceed `budget`.
    pub fn within_budget(&self, budget: u64) -> Option<TrajectoryPoint> {
        self.trajectory
            .iter()
            .copied()
            .take_while(|p| p.queries <= budget)
            .last()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub seed: u64,
    pub effective_k: usize,
    pub true_edges: usize,
    pub empirical_edges: usize,
    pub mc_miss: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub seed: u64,
    pub method: Method,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub runs: Vec<ExperimentRun>,
    pub graphs: Vec<GraphStats>,
    pub failures: Vec<CellFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub method: Method,
    pub seed: u64,
    pub round: usize,
    pub queries: u64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub round: usize,
    pub seeds: usize,
    pub mean_queries: f64,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedRow {
    pub method: Method,
    pub seed: u64,
    pub target: f64,
    pub round: Option<usize>,
    pub queries: Option<u64>,
}

impl SuiteResult {
    pub fn run(&self, seed: u64, method: Method) -> Option<&ExperimentRun> {
        self.runs
            .iter()
            .find(|r| r.seed == seed && r.method == method)
    }

    pub fn trajectory_rows(&self) -> Vec<TrajectoryRow> {
        self.runs
            .iter()
            .flat_map(|r| {
                r.trajectory.iter().map(move |p| TrajectoryRow {
                    method: r.method,
                    seed: r.seed,
                    round: p.round,
                    queries: p.queries,
                    accuracy: p.accuracy,
                })
            })
            .collect()
    }

    /// Per-method mean trajectory across seeds.
    pub fn summary_rows(&self) -> Vec<SummaryRow> {
        let methods: BTreeSet<Method> = self.runs.iter().map(|r| r.method).collect();
        let mut out = Vec::new();
        for m in methods {
            let runs: Vec<&ExperimentRun> = self.runs.iter().filter(|r| r.method == m).collect();
            let len = runs.iter().map(|r| r.trajectory.len()).min().unwrap_or(0);
            for idx in 0..len {
                let n = runs.len() as f64;
                out.push(SummaryRow {
                    method: m,
                    round: runs[0].trajectory[idx].round,
                    seeds: runs.len(),
                    mean_queries: runs
                        .iter()
                        .map(|r| r.trajectory[idx].queries as f64)
                        .sum::<f64>()
                        / n,
                    mean_accuracy: runs.iter().map(|r| r.trajectory[idx].accuracy).sum::<f64>() / n,
                });
            }
        }
        out
    }

    /// First round and cumulative comparisons at which each run reaches each target.
    pub fn matched_rows(&self, targets: &[f64]) -> Vec<MatchedRow> {
        self.runs
            .iter()
            .flat_map(|r| {
                targets.iter().map(move |&target| {
                    let hit = r.first_reaching(target);
                    MatchedRow {
                        method: r.method,
                        seed: r.seed,
                        target,
                        round: hit.map(|p| p.round),
                        queries: hit.map(|p| p.queries),
                    }
                })
            })
            .collect()
    }
}

struct SeedSetup {
    teacher: LinearModel,
    test: Dataset,
    stream: Dataset,
    true_graph: NeighborhoodGraph,
    empirical_graph: NeighborhoodGraph,
    stats: GraphStats,
}

fn seed_setup(config: &ExperimentConfig, seed: u64) -> Result<SeedSetup> {
    let (d, k) = (config.d, config.k_hat);
    let teacher = random_teacher(d, k, derive_seed(seed, 0))?;
    let train = sample_sphere(d, config.n_train, derive_seed(seed, 1))?;
    let test = sample_sphere(d, config.n_test, derive_seed(seed, 2))?;
    let stream = sample_sphere(d, config.steps, derive_seed(seed, 3))?;
    let method = config
        .true_graph
        .method(config.mc_samples, derive_seed(seed, 4));
    let true_graph = true_graph(&teacher, method)?;
    let empirical_graph = empirical_graph(&teacher, &train)?;
    let eff = effective_classes(&teacher, &train)?;
    let stats = GraphStats {
        seed,
        effective_k: eff.len(),
        true_edges: true_graph.edge_count(),
        empirical_edges: empirical_graph.edge_count(),
        mc_miss: !empirical_graph
            .restricted_to(&eff)
            .is_subgraph_of(&true_graph),
    };
    Ok(SeedSetup {
        teacher,
        test,
        stream,
        true_graph,
        empirical_graph,
        stats,
    })
}

fn learner_for(
    config: &ExperimentConfig,
    setup: &SeedSetup,
    seed: u64,
    method: Method,
) -> Result<Box<dyn StreamLearner>> {
    let (k, d) = (config.k_hat, config.d);
    let algd = |graph: &NeighborhoodGraph| -> Result<Box<dyn StreamLearner>> {
        let params = AlgdParams {
            steps: config.steps,
            seed: derive_seed(seed, 5),
            ..config.algd.clone()
        };
        let cfg = AlgdConfig {
            graph: graph.clone(),
            params,
        };
        Ok(Box::new(AlgdTrainer::new(&cfg, d)?))
    };
    let tournament = |kind| -> Result<Box<dyn StreamLearner>> {
        let params = TournamentParams {
            steps: config.steps,
            ..config.tournament.clone()
        };
        Ok(Box::new(TournamentLearner::new(kind, &params, k, d)?))
    };
    match method {
        Method::AlgdTrue => algd(&setup.true_graph),
        Method::AlgdEmpirical => algd(&setup.empirical_graph),
        Method::AlgdComplete => algd(&NeighborhoodGraph::complete(k)),
        Method::PassiveTournament => tournament(TournamentKind::Passive),
        Method::ActiveTournament => tournament(TournamentKind::Active),
    }
}

fn run_cell(
    config: &ExperimentConfig,
    setup: &SeedSetup,
    seed: u64,
    method: Method,
) -> Result<ExperimentRun> {
    let mut learner = learner_for(config, setup, seed, method)?;
    let mut ledger = QueryLedger::new();
    let mut trajectory = Vec::with_capacity(config.steps / config.eval_every);
    for (idx, x) in setup.stream.iter().enumerate() {
        learner.observe(&setup.teacher, x, &mut ledger)?;
        let round = idx + 1;
        if round % config.eval_every == 0 {
            if learner.queries() != ledger.comparisons() || ledger.argmaxes() != 0 {
                return Err(Error::invalid(
                    "learner query count disagrees with the ledger",
                ));
            }
            let accuracy = topk_accuracy(
                learner.model(),
                &setup.teacher,
                &setup.test,
                config.topk_fraction,
            )?;
            trajectory.push(TrajectoryPoint {
                round,
                queries: ledger.comparisons(),
                accuracy,
            });
        }
    }
    Ok(ExperimentRun {
        seed,
        method,
        trajectory,
    })
}

/// Runs every `(seed, method)` cell. A failing cell is recorded and skipped.
pub fn run_comparison_suite(config: &ExperimentConfig) -> Result<SuiteResult> {
    config.validate()?;
    let setups: Vec<(u64, Result<SeedSetup>)> = config
        .seeds
        .par_iter()
        .map(|&s| (s, seed_setup(config, s)))
        .collect();
    let cells: Vec<(u64, Method)> = config
        .seeds
        .iter()
        .flat_map(|&s| config.methods.iter().map(move |&m| (s, m)))
        .collect();
    let outcomes: Vec<std::result::Result<ExperimentRun, CellFailure>> = cells
        .par_iter()
        .map(|&(seed, method)| {
            let (_, setup) = setups
                .iter()
                .find(|(s, _)| *s == seed)
                .expect("seed set up");
            let fail = |message: String| CellFailure {
                seed,
                method,
                message,
            };
            match setup {
                Ok(setup) => run_cell(config, setup, seed, method).map_err(|e| fail(e.to_string())),
                Err(e) => Err(fail(format!("setup: {e}"))),
            }
        })
        .collect();
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => runs.push(r),
            Err(f) => {
                log::warn!(
                    "cell seed={} method={} failed: {}",
                    f.seed,
                    f.method,
                    f.message
                );
                failures.push(f);
            }
        }
    }
    let graphs = setups
        .iter()
        .filter_map(|(_, s)| s.as_ref().ok().map(|s| s.stats.clone()))
        .collect();
    Ok(SuiteResult {
        runs,
        graphs,
        failures,
    })
}

// ---------------------------------------------------------------------------
// 1D pipeline sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneDimRow {
    pub k: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub comparisons: u64,
    pub disagreement: f64,
    pub placed: usize,
    pub max_degree: usize,
    pub query_bound: f64,
}

/// Centers uniform on `[0, 1)`, data uniform on `[0, 1]`.
pub fn one_dim_trial(
    k: usize,
    epsilon: f64,
    seed: u64,
    config: &OneDimConfig,
) -> Result<OneDimRow> {
    use rand::Rng;
    let centers = CentersModel::random(k, derive_seed(seed, k as u64))?;
    let teacher = centers_to_linear(&centers);
    let mut rng = rng_from_seed(derive_seed(seed, 1_000 + k as u64));
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random::<f64>()).collect() };
    let samples = draw(config.samples_per_class * k);
    let pool = draw((config.pool_factor * k as f64 / epsilon).ceil() as usize);
    let test = draw(config.n_test);
    let mut ledger = QueryLedger::new();
    let learned = crate::one_dim::learn_graph_1d(
        &teacher,
        &samples,
        crate::one_dim::SortMode::LazySort,
        &mut QueryLedger::new(),
    )?;
    let (clf, comparisons) =
        end_to_end_1d_with_pool(&teacher, &samples, &pool, epsilon, &mut ledger)?;
    let wrong = test
        .iter()
        .filter(|&&t| clf.predict(t) != centers.nearest(t))
        .count();
    Ok(OneDimRow {
        k,
        seed,
        epsilon,
        comparisons,
        disagreement: wrong as f64 / test.len().max(1) as f64,
        placed: learned.placed,
        max_degree: learned.graph.max_degree(),
        query_bound: 10.0 * k as f64 * (k as f64 / epsilon).log2(),
    })
}

pub fn one_dim_experiment(config: &OneDimConfig) -> Result<Vec<OneDimRow>> {
    let jobs: Vec<(usize, u64)> = config
        .ks
        .iter()
        .flat_map(|&k| config.seeds.iter().map(move |&s| (k, s)))
        .collect();
    jobs.par_iter()
        .map(|&(k, s)| one_dim_trial(k, config.epsilon, s, config))
        .collect()
}

/// Least-squares `c` in `mean(q_k) ≈ c·k·ln(k/ε)` and each k's ratio to the fit.
pub fn fit_k_log_k(rows: &[OneDimRow]) -> (f64, Vec<(usize, f64)>) {
    let ks: BTreeSet<usize> = rows.iter().map(|r| r.k).collect();
    let points: Vec<(usize, f64, f64)> = ks
        .iter()
        .map(|&k| {
            let sel: Vec<&OneDimRow> = rows.iter().filter(|r| r.k == k).collect();
            let mean = sel.iter().map(|r| r.comparisons as f64).sum::<f64>() / sel.len() as f64;
            let x = k as f64 * (k as f64 / sel[0].epsilon).ln();
            (k, x, mean)
        })
        .collect();
    let c = points.iter().map(|(_, x, y)| x * y).sum::<f64>()
        / points.iter().map(|(_, x, _)| x * x).sum::<f64>();
    let ratios = points.iter().map(|&(k, x, y)| (k, y / (c * x))).collect();
    (c, ratios)
}

// ---------------------------------------------------------------------------
// external data

/// Linear map `R^input → R^output`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub input: usize,
    pub output: usize,
    /// Row-major `output × input`.
    pub matrix: Vec<f64>,
}

impl Projection {
    /// Gaussian entries scaled by `1/√output`.
    pub fn gaussian(input: usize, output: usize, seed: u64) -> Result<Self> {
        if input == 0 || output == 0 {
            return Err(Error::invalid("projection dimensions must be positive"));
        }
        let mut rng = rng_from_seed(seed);
        let scale = 1.0 / (output as f64).sqrt();
        let matrix = gaussian_vec(&mut rng, input * output)
            .into_iter()
            .map(|v| v * scale)
            .collect();
        Ok(Self {
            input,
            output,
            matrix,
        })
    }

    pub fn identity(dim: usize) -> Self {
        let mut matrix = vec![0.0; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = 1.0;
        }
        Self {
            input: dim,
            output: dim,
            matrix,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .chunks_exact(self.input)
            .map(|row| crate::linalg::dot(row, x))
            .collect()
    }
}

/// Reads a numeric CSV (optionally with a trailing label column, which is
/// kept) and projects it to `d` dimensions. `identity` skips the random
/// projection and requires `d` to equal the input width.
pub fn ingest_and_project(
    path: impl AsRef<Path>,
    label_column: bool,
    d: usize,
    seed: u64,
    identity: bool,
) -> Result<(Dataset, Projection)> {
    let raw = Dataset::from_csv(path, label_column)?;
    let proj = if identity {
        if d != raw.dim() {
            return Err(Error::DimensionMismatch {
                expected: raw.dim(),
                actual: d,
            });
        }
        Projection::identity(d)
    } else {
        Projection::gaussian(raw.dim(), d, seed)?
    };
    Ok((project(&raw, &proj)?, proj))
}

pub fn project(data: &Dataset, proj: &Projection) -> Result<Dataset> {
    if data.dim() != proj.input {
        return Err(Error::DimensionMismatch {
            expected: proj.input,
            actual: data.dim(),
        });
    }
    let projected = Dataset::new(proj.output, data.iter().map(|x| proj.apply(x)).collect())?;
    match data.labels() {
        Some(labels) => {
            let k = labels.iter().max().map_or(0, |m| m + 1);
            projected.with_labels(labels.to_vec(), k)
        }
        None => Ok(projected),
    }
}

/// Multinomial logistic regression by per-example gradient steps over
/// shuffled epochs, starting from zero.
pub fn fit_linear_teacher(
    data: &Dataset,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<LinearModel> {
    let labels = data
        .labels()
        .ok_or_else(|| Error::invalid("dataset has no labels"))?;
    let classes: BTreeSet<usize> = labels.iter().copied().collect();
    if classes.len() < 2 {
        return Err(Error::invalid("need at least two distinct labels"));
    }
    if !(learning_rate.is_finite() && learning_rate > 0.0) {
        return Err(Error::invalid("learning rate must be positive and finite"));
    }
    let k = classes.last().copied().expect("nonempty") + 1;
    let d = data.dim();
    let mut weights = vec![0.0; k * d];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = rng_from_seed(seed);
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &idx in &order {
            let model = LinearModel::new(k, d, weights.clone())?;
            let g = softmax_xent_gradient(&model, &[(data.point(idx).to_vec(), labels[idx])]);
            weights
                .iter_mut()
                .zip(&g)
                .for_each(|(w, gv)| *w -= learning_rate * gv);
        }
    }
    LinearModel::new(k, d, weights).map_err(|_| Error::NonFinite("teacher weights"))
}

/// Mean squared norm ratio `‖Px‖² / ‖x‖²` over the dataset.
pub fn norm_ratio(data: &Dataset, proj: &Projection) -> f64 {
    let ratios: Vec<f64> = data
        .iter()
        .filter(|x| norm(x) > 0.0)
        .map(|x| (norm(&proj.apply(x)) / norm(x)).powi(2))
        .collect();
    ratios.iter().sum::<f64>() / ratios.len().max(1) as f64
}
