//! Experiment driver: repeated iterations, M-scaling studies and the
//! ambiguous-rate solves, with their on-disk artifacts.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use sigbsde_core::bsde::{BackwardSolver, BsdeSolution, Driver};
use sigbsde_core::metrics::{self, ErrorReport, ExperimentConfig, SlopeFit};
use sigbsde_core::risk::{self, RiskMeasurePath};
use sigbsde_core::simulate::{self, PathBatch};
use sigbsde_core::stats::Estimate;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::io;

/// Everything one `run` produces in memory.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: ErrorReport,
    /// Solution of iteration 0 when it succeeded.
    pub first: Option<BsdeSolution>,
    pub runtime: Duration,
}

/// Errors of one iteration; the full solution is kept for iteration 0 only.
struct Done {
    erl2_y: Option<f64>,
    erl2_z: Option<f64>,
    solution: Option<BsdeSolution>,
}

type Slim = (usize, std::result::Result<Done, sigbsde_core::Error>);

fn slim(cfg: &ExperimentConfig, i: usize) -> Slim {
    let res = metrics::run_iteration(cfg, i).map(|r| Done {
        erl2_y: r.erl2_y,
        erl2_z: r.erl2_z,
        solution: (i == 0).then_some(r.solution),
    });
    (i, res)
}

/// Runs every iteration, `threads` at a time, and merges the results in
/// iteration order. Failed iterations are recorded and skipped.
pub fn run_iterations(cfg: &ExperimentConfig, threads: usize) -> Outcome {
    let start = Instant::now();
    let threads = threads.clamp(1, cfg.iterations.max(1));
    let mut results: Vec<Slim> = if threads == 1 {
        (0..cfg.iterations).map(|i| slim(cfg, i)).collect()
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|w| {
                    s.spawn(move || {
                        (w..cfg.iterations)
                            .step_by(threads)
                            .map(|i| slim(cfg, i))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("iteration worker panicked"))
                .collect()
        })
    };
    results.sort_by_key(|(i, _)| *i);

    let mut report = ErrorReport::default();
    let mut first = None;
    for (i, res) in results {
        match res {
            Ok(d) => {
                report.record(i, d.erl2_y, d.erl2_z);
                if d.solution.is_some() {
                    first = d.solution;
                }
            }
            Err(e) => report.push_failure(i, &e),
        }
    }
    Outcome {
        report,
        first,
        runtime: start.elapsed(),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "n/a".into())
}

/// Human-readable summary; the only artifact carrying wall-clock time.
pub fn summary_text(cfg: &RunConfig, outcome: &Outcome) -> String {
    let r = &outcome.report;
    let mut s = format!(
        "benchmark: {}\niterations: {} ok, {} failed\nmean_erl2_y: {}\nstd_erl2_y: {}\nmean_erl2_z: {}\nstd_erl2_z: {}\nruntime_s: {:.3}\n",
        cfg.benchmark,
        r.iterations.len(),
        r.failures.len(),
        fmt_opt(r.mean_y()),
        fmt_opt(r.std_y()),
        fmt_opt(r.mean_z()),
        fmt_opt(r.std_z()),
        outcome.runtime.as_secs_f64(),
    );
    for (i, msg) in &r.failures {
        s.push_str(&format!("failure {i}: {msg}\n"));
    }
    s
}

pub fn output_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out.join(&cfg.benchmark)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs the configured experiment and writes `report.csv`, `config.txt`,
/// `summary.txt` and, for iteration 0, `paths.csv` and `solution.csv` under
/// `<out>/<benchmark>/`.
pub fn run_experiment(cfg: &RunConfig) -> Result<Outcome> {
    let exp = cfg.experiment()?;
    let outcome = run_iterations(&exp, cfg.threads);
    let dir = output_dir(cfg);
    write_text(&dir.join("config.txt"), &cfg.to_text())?;
    io::write_report(&dir.join("report.csv"), &outcome.report)?;
    if let Some(sol) = &outcome.first {
        io::write_paths(&dir.join("paths.csv"), &sol.forward, cfg.dump_samples)?;
        io::write_solution(&dir.join("solution.csv"), sol, cfg.dump_samples)?;
    }
    write_text(&dir.join("summary.txt"), &summary_text(cfg, &outcome))?;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub samples: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
    pub fit: SlopeFit,
}

/// Mean Y-error per sample size with the same seed for each size, and the
/// log-log slope through the means.
pub fn scaling_table(cfg: &RunConfig, sizes: &[usize]) -> Result<ScalingTable> {
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::usage("sample sizes must be ascending"));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for &m in sizes {
        let mut exp = cfg.experiment()?;
        exp.samples = m;
        exp.validate()?;
        let outcome = run_iterations(&exp, cfg.threads);
        let mean = outcome.report.mean_y().ok_or_else(|| {
            Error::usage(format!(
                "benchmark {} has no closed form or every iteration failed at M = {m}",
                cfg.benchmark
            ))
        })?;
        rows.push(ScalingRow {
            samples: m,
            mean,
            std: outcome.report.std_y().unwrap_or(0.0),
        });
    }
    let means: Vec<f64> = rows.iter().map(|r| r.mean).collect();
    let fit = metrics::loglog_slope(sizes, &means)?;
    Ok(ScalingTable { rows, fit })
}

/// [`scaling_table`] plus `scaling.csv` and `scaling.txt` under
/// `<out>/<benchmark>/`.
pub fn scaling_study(cfg: &RunConfig, sizes: &[usize]) -> Result<ScalingTable> {
    let table = scaling_table(cfg, sizes)?;
    let dir = output_dir(cfg);
    let rows: Vec<(usize, f64, f64)> = table.rows.iter().map(|r| (r.samples, r.mean, r.std)).collect();
    io::write_scaling(&dir.join("scaling.csv"), &rows)?;
    let slope = match table.fit.slope {
        Some(s) => format!("slope: {s:.6}\n"),
        None => "slope: degenerate (zero or non-finite error)\n".into(),
    };
    write_text(&dir.join("scaling.txt"), &slope)?;
    write_text(&dir.join("config.txt"), &cfg.to_text())?;
    Ok(table)
}

/// The ambiguous-rate problem `X = B_T` solved with a given driver.
#[derive(Debug, Clone)]
pub struct AmbiguousSolve {
    pub brownian: PathBatch,
    pub rho: RiskMeasurePath,
}

impl AmbiguousSolve {
    /// `ρ_{t_k}(X) - ρ_{t_k}(X, β)` averaged over samples, for every `k`.
    pub fn gap(&self, beta: f64) -> Vec<Estimate> {
        risk::dominance_gap(&self.rho, &self.brownian, beta)
    }
}

/// Simulates the Brownian batch of iteration 0 for `cfg`.
pub fn brownian_for(cfg: &RunConfig) -> Result<PathBatch> {
    let exp = cfg.experiment()?;
    Ok(simulate::sample_brownian(exp.samples, exp.grid()?, exp.iteration_seed(0))?)
}

/// `ρ(B_T)` on `brownian` with `driver`.
pub fn solve_ambiguous_on(
    cfg: &RunConfig,
    brownian: &PathBatch,
    driver: &dyn Driver,
) -> Result<AmbiguousSolve> {
    let exp = cfg.experiment()?;
    let solver = BackwardSolver::new(brownian, exp.ce())?;
    let rho = risk::risk_measure_with(&solver, &brownian.terminal(), driver, brownian)?;
    Ok(AmbiguousSolve {
        brownian: brownian.clone(),
        rho,
    })
}

/// Solves, then writes `rho.csv` (`k,t,beta,mean_gap,se_gap`) and
/// `solution.csv` under `<out>/ambiguous/`.
pub fn solve_air(cfg: &RunConfig, driver: &dyn Driver, betas: &[f64]) -> Result<AmbiguousSolve> {
    let brownian = brownian_for(cfg)?;
    let solve = solve_ambiguous_on(cfg, &brownian, driver)?;
    let dir = cfg.out.join("ambiguous");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let path = dir.join("rho.csv");
    let mut text = String::from("k,t,beta,mean_gap,se_gap\n");
    for &beta in betas {
        for (k, est) in solve.gap(beta).iter().enumerate() {
            text.push_str(&format!(
                "{k},{},{beta},{},{}\n",
                brownian.grid.time(k),
                est.mean,
                est.std_error
            ));
        }
    }
    write_text(&path, &text)?;
    io::write_solution(&dir.join("solution.csv"), &solve.rho.solution, cfg.dump_samples)?;
    write_text(&dir.join("config.txt"), &cfg.to_text())?;
    Ok(solve)
}
