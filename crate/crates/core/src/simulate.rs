//! Seeded path generation on an equidistant grid.
//!
//! Every sample `j` draws its increments from its own ChaCha8 stream
//! (`seed`, stream `j`), so a batch is a deterministic function of
//! `(seed, samples, grid)` and any sample can be regenerated on its own.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix::SampleMatrix;
use crate::{Error, Result};

/// Equidistant partition `0 = t_0 < ... < t_N = T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::precondition("terminal time must be positive"));
        }
        if steps == 0 {
            return Err(Error::precondition("grid needs at least one step"));
        }
        Ok(TimeGrid { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// `t_k`; the last point is exactly `T`.
    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            self.horizon * k as f64 / self.steps as f64
        }
    }
}

/// `M` sampled trajectories together with the Brownian increments that
/// drove them.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    pub grid: TimeGrid,
    /// `M × (N+1)` path values.
    pub values: SampleMatrix,
    /// `M × N` driving increments, `ΔB_{k+1} = B_{k+1} - B_k`.
    pub increments: SampleMatrix,
    pub seed: u64,
}

impl PathBatch {
    pub fn samples(&self) -> usize {
        self.values.samples()
    }

    /// Values at the terminal time, one per sample.
    pub fn terminal(&self) -> alloc::vec::Vec<f64> {
        self.values.column(self.grid.steps())
    }
}

/// Standard Brownian motion started at 0.
pub fn sample_brownian(samples: usize, grid: TimeGrid, seed: u64) -> Result<PathBatch> {
    if samples == 0 {
        return Err(Error::precondition("need at least one sample"));
    }
    let n = grid.steps();
    let sd = libm::sqrt(grid.dt());
    let mut values = SampleMatrix::zeros(samples, n + 1);
    let mut increments = SampleMatrix::zeros(samples, n);
    for j in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(j as u64);
        let inc = increments.row_mut(j);
        for dbk in inc.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *dbk = sd * z;
        }
        let path = values.row_mut(j);
        let mut b = 0.0;
        for (k, &db) in increments.row(j).iter().enumerate() {
            b += db;
            path[k + 1] = b;
        }
    }
    Ok(PathBatch {
        grid,
        values,
        increments,
        seed,
    })
}

/// Forward Euler–Maruyama `X_{k+1} = X_k + b(t_k, X_k) Δt + σ(t_k, X_k) ΔB_{k+1}`
/// on the increments of `driving`.
pub fn euler_maruyama(
    drift: impl Fn(f64, f64) -> f64,
    diffusion: impl Fn(f64, f64) -> f64,
    x0: f64,
    driving: &PathBatch,
) -> Result<PathBatch> {
    let grid = driving.grid;
    let dt = grid.dt();
    let mut values = SampleMatrix::zeros(driving.samples(), grid.steps() + 1);
    for j in 0..driving.samples() {
        let inc = driving.increments.row(j);
        let path = values.row_mut(j);
        path[0] = x0;
        for k in 0..grid.steps() {
            let t = grid.time(k);
            let x = path[k];
            let next = x + drift(t, x) * dt + diffusion(t, x) * inc[k];
            if !next.is_finite() {
                return Err(Error::Simulation {
                    step: k + 1,
                    sample: j,
                });
            }
            path[k + 1] = next;
        }
    }
    Ok(PathBatch {
        grid,
        values,
        increments: driving.increments.clone(),
        seed: driving.seed,
    })
}

/// CIR short rate `dβ = a(b - β)dt + σ√β dB` with full truncation: the
/// positive part `β⁺` is used in both drift and diffusion.
pub fn cir_full_truncation(
    a: f64,
    b: f64,
    sigma: f64,
    x0: f64,
    driving: &PathBatch,
) -> Result<PathBatch> {
    if !(a > 0.0 && b > 0.0 && sigma > 0.0 && x0 > 0.0) {
        return Err(Error::precondition(
            "CIR parameters a, b, sigma and x0 must be positive",
        ));
    }
    cir_unchecked(a, b, sigma, x0, driving)
}

pub(crate) fn cir_unchecked(
    a: f64,
    b: f64,
    sigma: f64,
    x0: f64,
    driving: &PathBatch,
) -> Result<PathBatch> {
    euler_maruyama(
        |_, x| a * (b - x.max(0.0)),
        |_, x| sigma * libm::sqrt(x.max(0.0)),
        x0,
        driving,
    )
}

/// SplitMix64 finalizer; derives independent sub-seeds such as per-iteration
/// seeds from one experiment seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
