use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use duelgraph::experiments::{
    fit_k_log_k, fit_linear_teacher, ingest_and_project, one_dim_experiment, random_teacher,
    run_comparison_suite, sparsity_experiment, write_csv_file, ExperimentConfig, Method,
};
use duelgraph::graph::{
    empirical_graph, sparsity_among, true_graph_among, GraphMethod, DEFAULT_MC_SAMPLES,
    DEFAULT_MC_TOL,
};
use duelgraph::teacher::{effective_classes, sample_sphere, Dataset, LinearModel};
use duelgraph::theory::{
    argmax_query_lower_bound, build_ds_family, build_ds_family_perturbed,
    empirical_graph_counterexample, verify_shattering, ClosenessMode,
};

#[derive(Parser)]
#[command(
    name = "duelgraph",
    version,
    about = "Comparison-query active learning simulator"
)]
struct Cli {
    /// TOML experiment configuration; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sparsity of true and empirical neighborhood graphs of random teachers.
    Sparsity,
    /// Accuracy-versus-comparisons trajectories for every configured method.
    Suite,
    /// Exhaustive checks: shattering, argmax query bound, graph counterexample.
    Verify {
        /// Largest family size checked for shattering.
        #[arg(long, default_value_t = 3)]
        max_k: usize,
        /// Side-position pull for the perturbed family.
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
    },
    /// Fit a linear teacher on a labeled CSV after random projection.
    Teach {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        d: usize,
        /// Keep the input features unprojected (requires `d` = input width).
        #[arg(long)]
        identity: bool,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 0.05)]
        learning_rate: f64,
    },
    /// Compute and save neighborhood graphs of a teacher.
    Graph {
        /// Teacher matrix file; a random teacher of the config's size otherwise.
        #[arg(long)]
        teacher: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = MethodArg::MonteCarlo)]
        method: MethodArg,
        #[arg(long, default_value_t = DEFAULT_MC_SAMPLES)]
        samples: usize,
        /// Sample size for the empirical graph.
        #[arg(long, default_value_t = 10_000)]
        n: usize,
    },
    /// 1D order learning plus threshold search across class counts.
    Oned,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    MonteCarlo,
    Exact2d,
    Lifted1d,
    Lp,
}

#[derive(Serialize)]
struct Check {
    name: String,
    passed: bool,
    detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    command: &'a str,
    seed: u64,
    config: C,
    outputs: Vec<String>,
    checks: Vec<Check>,
}

fn write_manifest<C: Serialize>(out: &Path, manifest: &Manifest<'_, C>) -> Result<()> {
    let path = out.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(manifest)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

fn finish(checks: &[Check]) -> Result<()> {
    for c in checks {
        println!(
            "[{}] {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    if !failed.is_empty() {
        bail!("failed checks: {}", failed.join(", "));
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let config = match &cli.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    match cli.command {
        Command::Sparsity => sparsity(&config, cli.seed, &cli.out),
        Command::Suite => suite(&config, cli.seed, &cli.out),
        Command::Verify { max_k, delta } => verify(max_k, delta, cli.seed, &cli.out),
        Command::Teach {
            data,
            d,
            identity,
            epochs,
            learning_rate,
        } => teach(
            &data,
            d,
            identity,
            epochs,
            learning_rate,
            cli.seed,
            &cli.out,
        ),
        Command::Graph {
            teacher,
            method,
            samples,
            n,
        } => graph(
            &config,
            teacher.as_deref(),
            method,
            samples,
            n,
            cli.seed,
            &cli.out,
        ),
        Command::Oned => oned(&config, cli.seed, &cli.out),
    }
}

fn sparsity(config: &ExperimentConfig, seed: u64, out: &Path) -> Result<()> {
    let (trials, cells) = sparsity_experiment(&config.sparsity, seed)?;
    write_csv_file(&trials, out.join("sparsity_trials.csv"))?;
    write_csv_file(&cells, out.join("sparsity_cells.csv"))?;
    let mut checks = Vec::new();
    for c in &cells {
        checks.push(Check::new(
            format!("empirical<=true d={} k_hat={}", c.d, c.k_hat),
            !(c.empirical_mean > c.true_mean),
            format!(
                "true {:.4} ± {:.4}, empirical {:.4} ± {:.4}, mean k {:.2}, mc misses {}",
                c.true_mean,
                c.true_stderr,
                c.empirical_mean,
                c.empirical_stderr,
                c.mean_effective_k,
                c.mc_misses
            ),
        ));
    }
    write_manifest(
        out,
        &Manifest {
            command: "sparsity",
            seed,
            config: &config.sparsity,
            outputs: vec!["sparsity_trials.csv".into(), "sparsity_cells.csv".into()],
            checks: checks
                .iter()
                .map(|c| Check::new(&c.name, c.passed, &c.detail))
                .collect(),
        },
    )?;
    finish(&checks)
}

fn suite(config: &ExperimentConfig, seed: u64, out: &Path) -> Result<()> {
    // `--seed` shifts every configured seed so reruns stay comparable
    let mut config = config.clone();
    config.seeds = config.seeds.iter().map(|s| s.wrapping_add(seed)).collect();
    let res = run_comparison_suite(&config)?;
    write_csv_file(&res.trajectory_rows(), out.join("trajectories.csv"))?;
    write_csv_file(&res.summary_rows(), out.join("summary.csv"))?;
    write_csv_file(&res.matched_rows(&config.targets), out.join("matched.csv"))?;
    write_csv_file(&res.graphs, out.join("graphs.csv"))?;
    let mut checks = vec![Check::new(
        "cells",
        res.failures.is_empty(),
        format!(
            "{} runs, {} failed cells",
            res.runs.len(),
            res.failures.len()
        ),
    )];
    for f in &res.failures {
        println!(
            "cell seed={} method={} failed: {}",
            f.seed, f.method, f.message
        );
    }
    for &s in &config.seeds {
        if let (Some(a), Some(p)) = (
            res.run(s, Method::ActiveTournament),
            res.run(s, Method::PassiveTournament),
        ) {
            let ok = a
                .trajectory
                .iter()
                .zip(&p.trajectory)
                .all(|(x, y)| x.queries <= y.queries);
            checks.push(Check::new(
                format!("active<=passive queries seed={s}"),
                ok,
                format!(
                    "final {} vs {}",
                    a.trajectory.last().map_or(0, |t| t.queries),
                    p.trajectory.last().map_or(0, |t| t.queries)
                ),
            ));
        }
    }
    write_manifest(
        out,
        &Manifest {
            command: "suite",
            seed,
            config: &config,
            outputs: [
                "trajectories.csv",
                "summary.csv",
                "matched.csv",
                "graphs.csv",
            ]
            .map(String::from)
            .to_vec(),
            checks: checks
                .iter()
                .map(|c| Check::new(&c.name, c.passed, &c.detail))
                .collect(),
        },
    )?;
    finish(&checks)
}

#[derive(Serialize)]
struct BoundRow {
    n: u64,
    k: u64,
    bound: u64,
}

fn verify(max_k: usize, delta: f64, seed: u64, out: &Path) -> Result<()> {
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    let mut text = String::new();
    for k in 1..=max_k {
        let fam = build_ds_family(k)?;
        checks.push(Check::new(
            format!("family size k={k}"),
            fam.members.len() == 1 << (2 * k),
            format!("{} members", fam.members.len()),
        ));
        let argmax = verify_shattering(&fam, ClosenessMode::ArgmaxOnly);
        checks.push(Check::new(
            format!("argmax-only shattering k={k}"),
            argmax.passes,
            format!(
                "{} of {} pairs without partner",
                argmax.failure_count, argmax.checked
            ),
        ));
        text += &argmax.to_string();
        // strict mode is informational
        let strict = verify_shattering(&fam, ClosenessMode::Strict);
        text += &strict.to_string();
        let perturbed =
            verify_shattering(&build_ds_family_perturbed(k, delta)?, ClosenessMode::Strict);
        text += &format!("(perturbed, delta={delta}) {perturbed}");
        reports.push(serde_json::json!({
            "k": k,
            "argmax_only": { "passes": argmax.passes, "failures": argmax.failure_count, "checked": argmax.checked },
            "strict": { "passes": strict.passes, "failures": strict.failure_count, "checked": strict.checked, "first_failures": strict.failures },
            "strict_perturbed": { "delta": delta, "passes": perturbed.passes, "failures": perturbed.failure_count, "checked": perturbed.checked },
        }));
    }
    let mut bounds = Vec::new();
    for k in 2..=5u64 {
        for n in k - 1..=12 {
            bounds.push(BoundRow {
                n,
                k,
                bound: argmax_query_lower_bound(n, k)?,
            });
        }
    }
    write_csv_file(&bounds, out.join("lower_bounds.csv"))?;
    let cx = empirical_graph_counterexample()?;
    text += &cx.to_string();
    checks.push(Check::new(
        "empirical graph counterexample",
        cx.reproduced,
        format!(
            "teacher {}, empirical-graph aggregate {}, true-graph aggregate {}",
            cx.teacher_label, cx.empirical_label, cx.true_graph_label
        ),
    ));
    fs::write(out.join("verify.txt"), &text)?;
    fs::write(
        out.join("verify.json"),
        serde_json::to_string_pretty(&serde_json::json!({
            "shattering": reports,
            "counterexample": cx,
        }))? + "\n",
    )?;
    print!("{text}");
    write_manifest(
        out,
        &Manifest {
            command: "verify",
            seed,
            config: serde_json::json!({ "max_k": max_k, "delta": delta }),
            outputs: ["verify.txt", "verify.json", "lower_bounds.csv"]
                .map(String::from)
                .to_vec(),
            checks: checks
                .iter()
                .map(|c| Check::new(&c.name, c.passed, &c.detail))
                .collect(),
        },
    )?;
    finish(&checks)
}

fn teach(
    data: &Path,
    d: usize,
    identity: bool,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let (projected, proj) = ingest_and_project(data, true, d, seed, identity)
        .with_context(|| format!("reading {}", data.display()))?;
    let teacher = fit_linear_teacher(&projected, epochs, learning_rate, seed)?;
    let labels = projected.labels().expect("labeled input");
    let correct = projected
        .iter()
        .zip(labels)
        .filter(|(x, &y)| teacher.predict(x).map(|p| p == y).unwrap_or(false))
        .count();
    let accuracy = correct as f64 / projected.len() as f64;
    teacher.save(out.join("teacher.txt"))?;
    fs::write(out.join("projected.csv"), projected.to_csv())?;
    fs::write(
        out.join("projection.json"),
        serde_json::to_string(&proj)? + "\n",
    )?;
    let checks = vec![Check::new(
        "teacher fitted",
        true,
        format!(
            "k={} d={} training accuracy {accuracy:.4}",
            teacher.k(),
            teacher.d()
        ),
    )];
    write_manifest(
        out,
        &Manifest {
            command: "teach",
            seed,
            config: serde_json::json!({
                "data": data.display().to_string(), "d": d, "identity": identity,
                "epochs": epochs, "learning_rate": learning_rate,
            }),
            outputs: ["teacher.txt", "projected.csv", "projection.json"]
                .map(String::from)
                .to_vec(),
            checks: checks
                .iter()
                .map(|c| Check::new(&c.name, c.passed, &c.detail))
                .collect(),
        },
    )?;
    finish(&checks)
}

fn graph(
    config: &ExperimentConfig,
    teacher_path: Option<&Path>,
    method: MethodArg,
    samples: usize,
    n: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let teacher = match teacher_path {
        Some(p) => LinearModel::load(p)?,
        None => random_teacher(config.d, config.k_hat, seed)?,
    };
    let gm = match method {
        MethodArg::MonteCarlo => GraphMethod::MonteCarlo {
            samples,
            tol: DEFAULT_MC_TOL,
            seed,
        },
        MethodArg::Exact2d => GraphMethod::Exact2d,
        MethodArg::Lifted1d => GraphMethod::Lifted1d,
        MethodArg::Lp => GraphMethod::Lp { tol: 1e-9 },
    };
    let data: Dataset = match method {
        MethodArg::Lifted1d => {
            use rand::Rng;
            let mut rng = duelgraph::rng::rng_from_seed(seed ^ 0x5eed);
            let lo = -1.0;
            let pts = (0..n)
                .map(|_| vec![rng.random_range(lo..1.0 - lo), 1.0])
                .collect();
            Dataset::new(2, pts)?
        }
        _ => sample_sphere(teacher.d(), n, seed ^ 0x5eed)?,
    };
    let eff: BTreeSet<usize> = effective_classes(&teacher, &data)?;
    let all: BTreeSet<usize> = (0..teacher.k()).collect();
    let truth = true_graph_among(&teacher, gm, &all)?;
    let emp = empirical_graph(&teacher, &data)?;
    let truth_eff = truth.restricted_to(&eff);
    let emp_eff = emp.restricted_to(&eff);
    truth.save(out.join("true_graph.txt"))?;
    emp.save(out.join("empirical_graph.txt"))?;
    if teacher_path.is_none() {
        teacher.save(out.join("teacher.txt"))?;
    }
    let sp = |g| {
        if eff.len() >= 2 {
            sparsity_among(g, eff.len()).ok()
        } else {
            None
        }
    };
    let stats = serde_json::json!({
        "k": teacher.k(), "d": teacher.d(), "effective_k": eff.len(),
        "true_edges": truth.edge_count(), "empirical_edges": emp.edge_count(),
        "true_sparsity_effective": sp(&truth_eff), "empirical_sparsity_effective": sp(&emp_eff),
        "true_max_degree": truth.max_degree(),
    });
    fs::write(
        out.join("graph_stats.json"),
        serde_json::to_string_pretty(&stats)? + "\n",
    )?;
    let checks = vec![Check::new(
        "empirical subset of true (effective classes)",
        emp_eff.is_subgraph_of(&truth_eff),
        format!(
            "missing from true graph: {:?}",
            emp_eff.difference(&truth_eff)
        ),
    )];
    write_manifest(
        out,
        &Manifest {
            command: "graph",
            seed,
            config: serde_json::json!({ "samples": samples, "n": n, "stats": stats }),
            outputs: ["true_graph.txt", "empirical_graph.txt", "graph_stats.json"]
                .map(String::from)
                .to_vec(),
            checks: checks
                .iter()
                .map(|c| Check::new(&c.name, c.passed, &c.detail))
                .collect(),
        },
    )?;
    finish(&checks)
}

fn oned(config: &ExperimentConfig, seed: u64, out: &Path) -> Result<()> {
    let mut cfg = config.oned.clone();
    cfg.seeds = cfg.seeds.iter().map(|s| s.wrapping_add(seed)).collect();
    let rows = one_dim_experiment(&cfg)?;
    write_csv_file(&rows, out.join("oned.csv"))?;
    let (c, ratios) = fit_k_log_k(&rows);
    let mut checks = Vec::new();
    for &k in &cfg.ks {
        let sel: Vec<_> = rows.iter().filter(|r| r.k == k).collect();
        let worst = sel.iter().map(|r| r.disagreement).fold(0.0, f64::max);
        let over = sel
            .iter()
            .filter(|r| r.comparisons as f64 > r.query_bound)
            .count();
        let deg = sel.iter().map(|r| r.max_degree).max().unwrap_or(0);
        checks.push(Check::new(
            format!("k={k}"),
            worst <= cfg.epsilon && over == 0 && deg <= 2,
            format!("max disagreement {worst:.4}, runs over query bound {over}, max degree {deg}"),
        ));
    }
    let ratio_ok = ratios.iter().all(|&(_, r)| (0.5..=2.0).contains(&r));
    checks.push(Check::new(
        "k log(k/eps) fit",
        ratio_ok,
        format!("c = {c:.4}, per-k ratios {ratios:?}"),
    ));
    write_manifest(
        out,
        &Manifest {
            command: "oned",
            seed,
            config: &cfg,
            outputs: vec!["oned.csv".into()],
            checks: checks
                .iter()
                .map(|c| Check::new(&c.name, c.passed, &c.detail))
                .collect(),
        },
    )?;
    finish(&checks)
}
