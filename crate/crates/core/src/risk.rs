//! Benchmark BSDEs, BSDE-induced dynamic risk measures and their reference
//! solutions.
//!
//! A risk measure is read off a BSDE with terminal condition `-X`:
//! `ρ_t(X) = Y_t`. The four benchmarks:
//!
//! | name        | forward `X`      | driver `f`                  | terminal        |
//! |-------------|------------------|-----------------------------|-----------------|
//! | `linear`    | `B`              | `β² exp(2βB_t - β²t)`       | `exp(βB_T - β²T/2)` |
//! | `entropic`  | `B`              | `(θ/2) z²`                  | `-B_T`          |
//! | `cir`       | CIR short rate   | `-x·y`                      | `1`             |
//! | `ambiguous` | `B`              | `sup_{r≤β≤R} (-β y)`        | `-B_T`          |
//!
//! The linear source term is the one that makes `E[X + ∫_t^T φ_s ds | F_t]`
//! equal the three-term closed form; [`linear_oracle_adjoint`] checks that
//! independently by simulation.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bsde::{BackwardSolver, BsdeSolution, Driver};
use crate::ce::CeConfig;
use crate::matrix::SampleMatrix;
use crate::simulate::{self, PathBatch};
use crate::stats::Estimate;
use crate::{Error, Result};

/// `f(z) = (θ/2) z²`, inducing the entropic risk measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropicDriver {
    pub theta: f64,
}

impl Driver for EntropicDriver {
    fn eval(&self, _: f64, _: f64, _: f64, z: f64) -> f64 {
        0.5 * self.theta * z * z
    }
    fn name(&self) -> &str {
        "entropic"
    }
    fn lipschitz(&self) -> bool {
        false
    }
}

/// Source term `φ_t = β² exp(2βx - β²t)` evaluated at `x = B_t`; independent
/// of `y` and `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSourceDriver {
    pub beta: f64,
}

impl Driver for LinearSourceDriver {
    fn eval(&self, t: f64, x: f64, _: f64, _: f64) -> f64 {
        let b = self.beta;
        b * b * libm::exp(2.0 * b * x - b * b * t)
    }
    fn name(&self) -> &str {
        "linear"
    }
}

/// Stochastic discounting `f(t, x, y) = -x·y` at the short rate `x`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiscountDriver;

impl Driver for DiscountDriver {
    fn eval(&self, _: f64, x: f64, y: f64, _: f64) -> f64 {
        -x * y
    }
    fn name(&self) -> &str {
        "discount"
    }
    fn lipschitz(&self) -> bool {
        false
    }
}

/// The rate maximizing `-β y` over `r ≤ β ≤ R`.
pub fn optimal_rate(y: f64, lower: f64, upper: f64) -> f64 {
    if y < 0.0 {
        upper
    } else {
        lower
    }
}

/// `f(y) = sup_{r ≤ β ≤ R} (-β y)` for constant rate bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmbiguousDriver {
    lower: f64,
    upper: f64,
}

impl AmbiguousDriver {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower <= upper) || lower < 0.0 {
            return Err(Error::precondition("need 0 <= r <= R for the rate bounds"));
        }
        Ok(AmbiguousDriver { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }
}

impl Driver for AmbiguousDriver {
    fn eval(&self, _: f64, _: f64, y: f64, _: f64) -> f64 {
        -optimal_rate(y, self.lower, self.upper) * y
    }
    fn name(&self) -> &str {
        "ambiguous"
    }
}

/// Analytic driver for the ambiguous-rate problem.
pub fn ambiguous_driver(lower: f64, upper: f64) -> Result<AmbiguousDriver> {
    AmbiguousDriver::new(lower, upper)
}

/// `ρ_t(B_T) = -B_t + θ(T - t)/2`.
pub fn entropic_closed_form(theta: f64, t: f64, b_t: f64, horizon: f64) -> f64 {
    -b_t + 0.5 * theta * (horizon - t)
}

/// `Y_t = e^{βB_t - β²t/2} + e^{β²T} e^{2βB_t - 2β²t} - e^{2βB_t - β²t}`.
pub fn linear_closed_form(beta: f64, t: f64, b_t: f64, horizon: f64) -> f64 {
    let b2 = beta * beta;
    libm::exp(beta * b_t - 0.5 * b2 * t) + libm::exp(b2 * horizon + 2.0 * beta * b_t - 2.0 * b2 * t)
        - libm::exp(2.0 * beta * b_t - b2 * t)
}

/// `Z_t = ∂_x Y_t` for the linear benchmark.
pub fn linear_closed_form_z(beta: f64, t: f64, b_t: f64, horizon: f64) -> f64 {
    let b2 = beta * beta;
    beta * libm::exp(beta * b_t - 0.5 * b2 * t)
        + 2.0 * beta * libm::exp(b2 * horizon + 2.0 * beta * b_t - 2.0 * b2 * t)
        - 2.0 * beta * libm::exp(2.0 * beta * b_t - b2 * t)
}

/// `ρ_t(B_T, β) = -e^{-β(T-t)} B_t` for a constant deterministic rate.
pub fn constant_beta_reference(beta: f64, t: f64, b_t: f64, horizon: f64) -> f64 {
    -libm::exp(-beta * (horizon - t)) * b_t
}

/// CIR short-rate parameters for `dβ = a(b - β)dt + σ√β dB`, `β_0 = x0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirParams {
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
    pub x0: f64,
}

impl Default for CirParams {
    fn default() -> Self {
        CirParams {
            a: 1.0,
            b: 1.0,
            sigma: 1.0,
            x0: 1.0,
        }
    }
}

impl CirParams {
    fn gamma(&self) -> f64 {
        libm::sqrt(self.a * self.a + 2.0 * self.sigma * self.sigma)
    }

    /// `(A(τ), B(τ))` of the zero-coupon price `A(τ) exp(-B(τ) β_t)`.
    pub fn bond_factors(&self, tau: f64) -> (f64, f64) {
        let g = self.gamma();
        let em1 = libm::expm1(g * tau);
        let denom = (g + self.a) * em1 + 2.0 * g;
        let a_base = 2.0 * g * libm::exp(0.5 * (g + self.a) * tau) / denom;
        let a_tau = libm::pow(a_base, 2.0 * self.a * self.b / (self.sigma * self.sigma));
        let b_tau = 2.0 * em1 / denom;
        (a_tau, b_tau)
    }

    /// `E[exp(-∫_t^T β_s ds) | β_t = rate]` with `τ = T - t`.
    pub fn bond_price(&self, tau: f64, rate: f64) -> f64 {
        let (a, b) = self.bond_factors(tau);
        a * libm::exp(-b * rate)
    }

    /// `Z_t = -B(τ) Y_t σ √β_t`.
    pub fn bond_z(&self, tau: f64, rate: f64) -> f64 {
        let (_, b) = self.bond_factors(tau);
        -b * self.bond_price(tau, rate) * self.sigma * libm::sqrt(rate.max(0.0))
    }
}

/// One of the registered benchmark problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Benchmark {
    Linear { beta: f64 },
    Entropic { theta: f64 },
    Cir(CirParams),
    Ambiguous { lower: f64, upper: f64 },
}

pub const BENCHMARK_NAMES: [&str; 4] = ["linear", "entropic", "cir", "ambiguous"];

impl Benchmark {
    pub fn linear(beta: f64) -> Result<Self> {
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::precondition("linear benchmark needs a finite beta != 0"));
        }
        Ok(Benchmark::Linear { beta })
    }

    pub fn entropic(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::precondition("entropic benchmark needs theta > 0"));
        }
        Ok(Benchmark::Entropic { theta })
    }

    pub fn cir(params: CirParams) -> Result<Self> {
        let CirParams { a, b, sigma, x0 } = params;
        if !(a > 0.0 && b > 0.0 && sigma > 0.0 && x0 > 0.0) {
            return Err(Error::precondition("CIR parameters must be positive"));
        }
        Ok(Benchmark::Cir(params))
    }

    pub fn ambiguous(lower: f64, upper: f64) -> Result<Self> {
        AmbiguousDriver::new(lower, upper)?;
        Ok(Benchmark::Ambiguous { lower, upper })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Benchmark::Linear { .. } => "linear",
            Benchmark::Entropic { .. } => "entropic",
            Benchmark::Cir(_) => "cir",
            Benchmark::Ambiguous { .. } => "ambiguous",
        }
    }

    pub fn driver(&self) -> Box<dyn Driver> {
        match *self {
            Benchmark::Linear { beta } => Box::new(LinearSourceDriver { beta }),
            Benchmark::Entropic { theta } => Box::new(EntropicDriver { theta }),
            Benchmark::Cir(_) => Box::new(DiscountDriver),
            Benchmark::Ambiguous { lower, upper } => Box::new(AmbiguousDriver { lower, upper }),
        }
    }

    /// The forward process driven by `brownian`.
    pub fn forward(&self, brownian: &PathBatch) -> Result<PathBatch> {
        match self {
            Benchmark::Cir(p) => simulate::cir_full_truncation(p.a, p.b, p.sigma, p.x0, brownian),
            _ => Ok(brownian.clone()),
        }
    }

    /// Terminal condition `g(X_T)`.
    pub fn terminal(&self, x_t: f64, horizon: f64) -> f64 {
        match *self {
            Benchmark::Linear { beta } => libm::exp(beta * x_t - 0.5 * beta * beta * horizon),
            Benchmark::Entropic { .. } | Benchmark::Ambiguous { .. } => -x_t,
            Benchmark::Cir(_) => 1.0,
        }
    }

    /// Closed-form `Y_t` given the forward state, or `None` when only
    /// oracle comparisons exist.
    pub fn exact_y(&self, t: f64, x: f64, horizon: f64) -> Option<f64> {
        match *self {
            Benchmark::Linear { beta } => Some(linear_closed_form(beta, t, x, horizon)),
            Benchmark::Entropic { theta } => Some(entropic_closed_form(theta, t, x, horizon)),
            Benchmark::Cir(p) => Some(p.bond_price(horizon - t, x)),
            Benchmark::Ambiguous { .. } => None,
        }
    }

    pub fn exact_z(&self, t: f64, x: f64, horizon: f64) -> Option<f64> {
        match *self {
            Benchmark::Linear { beta } => Some(linear_closed_form_z(beta, t, x, horizon)),
            Benchmark::Entropic { .. } => Some(-1.0),
            Benchmark::Cir(p) => Some(p.bond_z(horizon - t, x)),
            Benchmark::Ambiguous { .. } => None,
        }
    }

    pub fn has_exact_solution(&self) -> bool {
        !matches!(self, Benchmark::Ambiguous { .. })
    }

    /// `M × (N+1)` matrix of exact `Y` along the forward paths.
    pub fn exact_y_paths(&self, forward: &PathBatch) -> Option<SampleMatrix> {
        self.exact_matrix(forward, forward.grid.steps() + 1, |t, x, h| self.exact_y(t, x, h))
    }

    /// `M × N` matrix of exact `Z` along the forward paths.
    pub fn exact_z_paths(&self, forward: &PathBatch) -> Option<SampleMatrix> {
        self.exact_matrix(forward, forward.grid.steps(), |t, x, h| self.exact_z(t, x, h))
    }

    fn exact_matrix(
        &self,
        forward: &PathBatch,
        points: usize,
        f: impl Fn(f64, f64, f64) -> Option<f64>,
    ) -> Option<SampleMatrix> {
        if !self.has_exact_solution() {
            return None;
        }
        let grid = forward.grid;
        let h = grid.horizon();
        Some(SampleMatrix::from_fn(forward.samples(), points, |j, k| {
            f(grid.time(k), forward.values.get(j, k), h).unwrap_or(f64::NAN)
        }))
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Benchmark::Linear { beta } => write!(f, "linear(beta={beta})"),
            Benchmark::Entropic { theta } => write!(f, "entropic(theta={theta})"),
            Benchmark::Cir(p) => write!(
                f,
                "cir(a={}, b={}, sigma={}, x0={})",
                p.a, p.b, p.sigma, p.x0
            ),
            Benchmark::Ambiguous { lower, upper } => write!(f, "ambiguous(r={lower}, R={upper})"),
        }
    }
}

pub fn entropic_benchmark(theta: f64) -> Result<Benchmark> {
    Benchmark::entropic(theta)
}

pub fn linear_benchmark(beta: f64) -> Result<Benchmark> {
    Benchmark::linear(beta)
}

pub fn cir_benchmark(a: f64, b: f64, sigma: f64, x0: f64) -> Result<Benchmark> {
    Benchmark::cir(CirParams { a, b, sigma, x0 })
}

/// `ρ_t(X) := Y_t` of the BSDE with terminal condition `-X`.
#[derive(Debug, Clone)]
pub struct RiskMeasurePath {
    pub solution: BsdeSolution,
}

impl RiskMeasurePath {
    pub fn rho(&self) -> &SampleMatrix {
        &self.solution.y
    }

    /// `ρ_{t_k}` for all samples.
    pub fn at(&self, k: usize) -> Vec<f64> {
        self.solution.y.column(k)
    }
}

/// Sample mean and standard error of `ρ_{t_k}(B_T) - ρ_{t_k}(B_T, β)` at each
/// `k`, where the second term is the constant-rate reference along `brownian`.
pub fn dominance_gap(rho: &RiskMeasurePath, brownian: &PathBatch, beta: f64) -> Vec<Estimate> {
    let grid = brownian.grid;
    (0..=grid.steps())
        .map(|k| {
            let t = grid.time(k);
            let diffs: Vec<f64> = (0..brownian.samples())
                .map(|j| {
                    rho.solution.y.get(j, k)
                        - constant_beta_reference(beta, t, brownian.values.get(j, k), grid.horizon())
                })
                .collect();
            Estimate::from_samples(&diffs)
        })
        .collect()
}

/// Risk measure of the payoff `x` (one value per sample) on an existing solver.
pub fn risk_measure_with(
    solver: &BackwardSolver<'_>,
    payoff: &[f64],
    driver: &dyn Driver,
    forward: &PathBatch,
) -> Result<RiskMeasurePath> {
    let terminal: Vec<f64> = payoff.iter().map(|x| -x).collect();
    let solution = solver.explicit(&terminal, driver, forward)?;
    Ok(RiskMeasurePath { solution })
}

pub fn risk_measure_path(
    payoff: &[f64],
    driver: &dyn Driver,
    forward: &PathBatch,
    brownian: &PathBatch,
    cfg: &CeConfig,
) -> Result<RiskMeasurePath> {
    let solver = BackwardSolver::new(brownian, *cfg)?;
    risk_measure_with(&solver, payoff, driver, forward)
}

/// Size of a Monte Carlo oracle run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McPlan {
    pub samples: usize,
    pub steps: usize,
    pub seed: u64,
}

/// Monte Carlo estimate of
/// `Y_t = E[Γ_{t,T} X + ∫_t^T Γ_{t,s} φ_s ds | B_t = b_t]` for the linear BSDE
/// `dY = -(φ + αY + βZ)dt + Z dB`, with `dΓ = Γ(α ds + β dB)`, `Γ_{t,t} = 1`.
///
/// Coefficients are Markov rules `(s, B_s) ↦ value`. `Γ` is advanced with the
/// log-Euler step, which is exact for constant coefficients, and the source
/// integral uses the trapezoidal rule.
pub fn linear_oracle_adjoint(
    alpha: impl Fn(f64, f64) -> f64,
    beta_coef: impl Fn(f64, f64) -> f64,
    source: impl Fn(f64, f64) -> f64,
    terminal: impl Fn(f64) -> f64,
    t: f64,
    b_t: f64,
    horizon: f64,
    plan: McPlan,
) -> Estimate {
    let ds = (horizon - t) / plan.steps as f64;
    let sd = libm::sqrt(ds);
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let values: Vec<f64> = (0..plan.samples)
        .map(|_| {
            let mut b = b_t;
            let mut log_gamma = 0.0;
            let mut s = t;
            let mut integral = 0.0;
            let mut prev = source(s, b);
            for i in 0..plan.steps {
                let a = alpha(s, b);
                let bc = beta_coef(s, b);
                let db = sd * rng.sample::<f64, _>(StandardNormal);
                log_gamma += (a - 0.5 * bc * bc) * ds + bc * db;
                b += db;
                s = if i + 1 == plan.steps { horizon } else { t + (i + 1) as f64 * ds };
                let cur = libm::exp(log_gamma) * source(s, b);
                integral += 0.5 * (prev + cur) * ds;
                prev = cur;
            }
            libm::exp(log_gamma) * terminal(b) + integral
        })
        .collect();
    Estimate::from_samples(&values)
}

/// Monte Carlo estimate of `(1/θ) log E[e^{-θ B_T} | B_t = b_t]`; the
/// standard error comes from the delta method.
pub fn entropic_oracle(theta: f64, t: f64, b_t: f64, horizon: f64, samples: usize, seed: u64) -> Estimate {
    let sd = libm::sqrt(horizon - t);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..samples)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            libm::exp(-theta * (b_t + sd * z))
        })
        .collect();
    let e = Estimate::from_samples(&w);
    Estimate {
        mean: libm::log(e.mean) / theta,
        std_error: e.std_error / (theta * e.mean),
    }
}

/// Feynman–Kac estimate of `E[exp(-∫_0^T β_s ds)]` for the CIR rate, using
/// the full-truncation scheme on a fine grid and trapezoidal integration.
pub fn cir_discount_oracle(params: CirParams, horizon: f64, plan: McPlan) -> Result<Estimate> {
    let grid = simulate::TimeGrid::new(horizon, plan.steps)?;
    let dt = grid.dt();
    let mut values = Vec::with_capacity(plan.samples);
    // Chunked so the fine-grid batch stays small.
    let chunk = 2048;
    let mut done = 0;
    let mut stream = 0;
    while done < plan.samples {
        let m = chunk.min(plan.samples - done);
        let bm = simulate::sample_brownian(m, grid, simulate::derive_seed(plan.seed, stream))?;
        let rates = simulate::cir_full_truncation(params.a, params.b, params.sigma, params.x0, &bm)?;
        for j in 0..m {
            let row = rates.values.row(j);
            let inner: f64 = row.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dt).sum();
            values.push(libm::exp(-inner));
        }
        done += m;
        stream += 1;
    }
    Ok(Estimate::from_samples(&values))
}
