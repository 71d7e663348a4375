//! Path error metric, experiment configuration and the per-iteration kernel.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::bsde::{BackwardSolver, BsdeSolution, Scheme};
use crate::ce::CeConfig;
use crate::matrix::SampleMatrix;
use crate::risk::Benchmark;
use crate::signature::TimeScaling;
use crate::simulate::{self, TimeGrid};
use crate::stats;
use crate::{Error, Result};

/// `sqrt((1/M) Σ_j Σ_k |â_k^j - a_k^j|² Δt)` over every column of the inputs.
pub fn erl2(approx: &SampleMatrix, exact: &SampleMatrix, dt: f64) -> Result<f64> {
    approx.same_shape(exact)?;
    if approx.samples() == 0 {
        return Err(Error::precondition("no samples"));
    }
    let ss: f64 = approx
        .as_slice()
        .iter()
        .zip(exact.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(libm::sqrt(ss * dt / approx.samples() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    pub benchmark: Benchmark,
    pub samples: usize,
    pub steps: usize,
    pub horizon: f64,
    pub depth: usize,
    pub lambda: f64,
    pub iterations: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub scaling: TimeScaling,
}

impl ExperimentConfig {
    /// Defaults: `M = 2^13`, `N = 500`, `T = 1`, depth 3, `λ = 0.3`, 50 iterations.
    pub fn new(benchmark: Benchmark) -> Self {
        ExperimentConfig {
            benchmark,
            samples: 1 << 13,
            steps: 500,
            horizon: 1.0,
            depth: 3,
            lambda: 0.3,
            iterations: 50,
            seed: 0,
            scheme: Scheme::Explicit,
            scaling: TimeScaling::Raw,
        }
    }

    pub fn ce(&self) -> CeConfig {
        CeConfig {
            depth: self.depth,
            lambda: self.lambda,
            scaling: self.scaling,
        }
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.horizon, self.steps)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::precondition("need at least two samples"));
        }
        if self.iterations == 0 {
            return Err(Error::precondition("need at least one iteration"));
        }
        self.grid()?;
        self.ce().validate()
    }

    /// Seed of iteration `i`.
    pub fn iteration_seed(&self, i: usize) -> u64 {
        simulate::derive_seed(self.seed, i as u64)
    }
}

/// Outcome of one simulate-solve-compare pass.
#[derive(Debug, Clone)]
pub struct IterationResult {
    pub iteration: usize,
    /// `None` when the benchmark has no closed form.
    pub erl2_y: Option<f64>,
    pub erl2_z: Option<f64>,
    pub solution: BsdeSolution,
}

/// Simulates fresh paths for iteration `i`, solves, and measures the error
/// against the closed form when there is one.
pub fn run_iteration(cfg: &ExperimentConfig, i: usize) -> Result<IterationResult> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let brownian = simulate::sample_brownian(cfg.samples, grid, cfg.iteration_seed(i))?;
    let forward = cfg.benchmark.forward(&brownian)?;
    let solver = BackwardSolver::new(&brownian, cfg.ce())?;
    let terminal: Vec<f64> = forward
        .terminal()
        .iter()
        .map(|&x| cfg.benchmark.terminal(x, cfg.horizon))
        .collect();
    let driver = cfg.benchmark.driver();
    let solution = solver.solve(&terminal, &*driver, &forward, cfg.scheme)?;
    let (erl2_y, erl2_z) = path_errors(&cfg.benchmark, &solution)?;
    Ok(IterationResult {
        iteration: i,
        erl2_y,
        erl2_z,
        solution,
    })
}

/// ERL² of `Y` and of `Z` against the benchmark's closed form.
pub fn path_errors(bench: &Benchmark, sol: &BsdeSolution) -> Result<(Option<f64>, Option<f64>)> {
    let dt = sol.grid.dt();
    let ey = match bench.exact_y_paths(&sol.forward) {
        Some(exact) => Some(erl2(&sol.y, &exact, dt)?),
        None => None,
    };
    let ez = match bench.exact_z_paths(&sol.forward) {
        Some(exact) => Some(erl2(&sol.z, &exact, dt)?),
        None => None,
    };
    Ok((ey, ez))
}

/// Per-iteration errors of one experiment, in iteration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorReport {
    pub iterations: Vec<usize>,
    pub erl2_y: Vec<Option<f64>>,
    pub erl2_z: Vec<Option<f64>>,
    /// Iterations whose solve failed, with the error message.
    pub failures: Vec<(usize, String)>,
}

impl ErrorReport {
    pub fn push(&mut self, r: &IterationResult) {
        self.record(r.iteration, r.erl2_y, r.erl2_z);
    }

    pub fn record(&mut self, iteration: usize, erl2_y: Option<f64>, erl2_z: Option<f64>) {
        self.iterations.push(iteration);
        self.erl2_y.push(erl2_y);
        self.erl2_z.push(erl2_z);
    }

    pub fn push_failure(&mut self, iteration: usize, err: &Error) {
        self.failures.push((iteration, format!("{err}")));
    }

    pub fn y_values(&self) -> Vec<f64> {
        self.erl2_y.iter().flatten().copied().collect()
    }

    pub fn z_values(&self) -> Vec<f64> {
        self.erl2_z.iter().flatten().copied().collect()
    }

    pub fn mean_y(&self) -> Option<f64> {
        let v = self.y_values();
        (!v.is_empty()).then(|| stats::mean(&v))
    }

    pub fn std_y(&self) -> Option<f64> {
        let v = self.y_values();
        (v.len() > 1).then(|| stats::std_dev(&v))
    }

    pub fn mean_z(&self) -> Option<f64> {
        let v = self.z_values();
        (!v.is_empty()).then(|| stats::mean(&v))
    }

    pub fn std_z(&self) -> Option<f64> {
        let v = self.z_values();
        (v.len() > 1).then(|| stats::std_dev(&v))
    }
}

/// Least-squares line through `(log M, log err)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    /// `None` when some error is zero or not finite.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
}

impl SlopeFit {
    pub fn degenerate(&self) -> bool {
        self.slope.is_none()
    }
}

pub fn loglog_slope(sizes: &[usize], errors: &[f64]) -> Result<SlopeFit> {
    if sizes.len() != errors.len() {
        return Err(Error::shape(format!("{} errors", sizes.len()), errors.len()));
    }
    if sizes.len() < 2 {
        return Err(Error::precondition("need at least two sample sizes"));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) || sizes[0] == 0 {
        return Err(Error::precondition("sample sizes must be positive and ascending"));
    }
    if errors.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Ok(SlopeFit {
            slope: None,
            intercept: None,
        });
    }
    let lx: Vec<f64> = sizes.iter().map(|&m| libm::log(m as f64)).collect();
    let ly: Vec<f64> = errors.iter().map(|&e| libm::log(e)).collect();
    let (slope, intercept) = stats::linear_fit(&lx, &ly);
    Ok(SlopeFit {
        slope: Some(slope),
        intercept: Some(intercept),
    })
}
