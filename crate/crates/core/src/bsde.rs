//! Backward Euler–Maruyama scheme with signature-regression conditional
//! expectations.
//!
//! For `dY = -f(t, X, Y, Z) dt + Z dB`, `Y_N = ξ`, the explicit scheme steps
//! `k = N-1, ..., 0`:
//!
//! ```text
//! Z_k = E_k[Y_{k+1} ΔB_{k+1}] / Δt
//! Y_k = E_k[Y_{k+1} + f(t_k, X_k, Y_{k+1}, Z_k) Δt]
//! ```
//!
//! Both conditional expectations regress on the same signature features, so
//! each step factors one ridge system and solves it twice. The implicit
//! variant replaces `Y_{k+1}` inside `f` by `Y_k` and resolves the fixed point
//! by Picard iteration started from the explicit value.

use alloc::string::String;
use alloc::vec::Vec;

use crate::ce::{CeConfig, StepEstimator};
use crate::matrix::SampleMatrix;
use crate::signature::SignatureCube;
use crate::simulate::{PathBatch, TimeGrid};
use crate::{Error, Result};

/// The generator `f(t, x, y, z)` in the `dt` term.
pub trait Driver: Send + Sync {
    fn eval(&self, t: f64, x: f64, y: f64, z: f64) -> f64;

    fn name(&self) -> &str {
        "driver"
    }

    /// Whether `f` is globally Lipschitz in `(x, y, z)`.
    fn lipschitz(&self) -> bool {
        true
    }
}

impl<D: Driver + ?Sized> Driver for &D {
    fn eval(&self, t: f64, x: f64, y: f64, z: f64) -> f64 {
        (**self).eval(t, x, y, z)
    }
    fn name(&self) -> &str {
        (**self).name()
    }
    fn lipschitz(&self) -> bool {
        (**self).lipschitz()
    }
}

impl<D: Driver + ?Sized> Driver for alloc::boxed::Box<D> {
    fn eval(&self, t: f64, x: f64, y: f64, z: f64) -> f64 {
        (**self).eval(t, x, y, z)
    }
    fn name(&self) -> &str {
        (**self).name()
    }
    fn lipschitz(&self) -> bool {
        (**self).lipschitz()
    }
}

/// `f ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroDriver;

impl Driver for ZeroDriver {
    fn eval(&self, _: f64, _: f64, _: f64, _: f64) -> f64 {
        0.0
    }
    fn name(&self) -> &str {
        "zero"
    }
}

/// Driver backed by a closure.
pub struct FnDriver<F> {
    name: String,
    lipschitz: bool,
    f: F,
}

impl<F> FnDriver<F>
where
    F: Fn(f64, f64, f64, f64) -> f64 + Send + Sync,
{
    pub fn new(name: impl Into<String>, lipschitz: bool, f: F) -> Self {
        FnDriver {
            name: name.into(),
            lipschitz,
            f,
        }
    }
}

impl<F> Driver for FnDriver<F>
where
    F: Fn(f64, f64, f64, f64) -> f64 + Send + Sync,
{
    fn eval(&self, t: f64, x: f64, y: f64, z: f64) -> f64 {
        (self.f)(t, x, y, z)
    }
    fn name(&self) -> &str {
        &self.name
    }
    fn lipschitz(&self) -> bool {
        self.lipschitz
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    Explicit,
    /// Picard iteration on `Y_k`; `max_iters` map applications after the
    /// explicit starting value, stopping once the sup-norm change drops below
    /// `tol`. A non-finite `tol` accepts the starting value as converged.
    Implicit { max_iters: usize, tol: f64 },
}

#[derive(Debug, Clone)]
pub struct BsdeSolution {
    pub grid: TimeGrid,
    /// `M × (N+1)`.
    pub y: SampleMatrix,
    /// `M × N`; `Z` is not defined at the terminal index.
    pub z: SampleMatrix,
    pub forward: PathBatch,
    pub config: CeConfig,
    pub seed: u64,
    pub scheme: Scheme,
    /// Steps where Picard iteration hit `max_iters` before reaching `tol`.
    pub picard_unconverged: usize,
    /// Steps whose `λ = 0` regression needed the singular-system fallback.
    pub fallback_steps: usize,
}

impl BsdeSolution {
    /// `Y_0`, identical across samples up to rounding.
    pub fn y0(&self) -> f64 {
        self.y.get(0, 0)
    }
}

/// Backward solver for one Brownian batch; the signature features are
/// computed once and reused for every terminal condition and driver.
pub struct BackwardSolver<'a> {
    brownian: &'a PathBatch,
    cube: SignatureCube,
    cfg: CeConfig,
}

impl<'a> BackwardSolver<'a> {
    pub fn new(brownian: &'a PathBatch, cfg: CeConfig) -> Result<Self> {
        cfg.validate()?;
        let cube = SignatureCube::build(brownian, cfg.depth, cfg.scaling)?;
        Ok(BackwardSolver {
            brownian,
            cube,
            cfg,
        })
    }

    pub fn cube(&self) -> &SignatureCube {
        &self.cube
    }

    pub fn brownian(&self) -> &PathBatch {
        self.brownian
    }

    pub fn config(&self) -> &CeConfig {
        &self.cfg
    }

    pub fn explicit(
        &self,
        terminal: &[f64],
        driver: &dyn Driver,
        forward: &PathBatch,
    ) -> Result<BsdeSolution> {
        self.solve(terminal, driver, forward, Scheme::Explicit)
    }

    pub fn solve(
        &self,
        terminal: &[f64],
        driver: &dyn Driver,
        forward: &PathBatch,
        scheme: Scheme,
    ) -> Result<BsdeSolution> {
        let bm = self.brownian;
        let grid = bm.grid;
        let m = bm.samples();
        let n = grid.steps();
        if forward.grid != grid || forward.increments != bm.increments {
            return Err(Error::precondition(
                "forward process must share grid and increments with the Brownian batch",
            ));
        }
        if terminal.len() != m {
            return Err(Error::shape(alloc::format!("{m} terminal values"), terminal.len()));
        }
        if let Scheme::Implicit { max_iters, .. } = scheme {
            if max_iters == 0 {
                return Err(Error::precondition("Picard iteration count must be positive"));
            }
        }
        check_finite(terminal, n, "Y")?;

        let dt = grid.dt();
        let mut y = SampleMatrix::zeros(m, n + 1);
        let mut z = SampleMatrix::zeros(m, n);
        y.set_column(n, terminal);

        let mut y_next = terminal.to_vec();
        let mut target = alloc::vec![0.0; m];
        let mut unconverged = 0;
        let mut fallback_steps = 0;

        for k in (0..n).rev() {
            let t = grid.time(k);
            let est = StepEstimator::new(&self.cube, k, self.cfg.lambda)?;
            if est.used_fallback() {
                fallback_steps += 1;
            }

            for (j, slot) in target.iter_mut().enumerate() {
                *slot = y_next[j] * bm.increments.get(j, k);
            }
            check_finite(&target, k, "Z")?;
            let mut z_k = est.estimate(&target)?;
            z_k.iter_mut().for_each(|v| *v /= dt);
            check_finite(&z_k, k, "Z")?;

            for (j, slot) in target.iter_mut().enumerate() {
                let x = forward.values.get(j, k);
                *slot = y_next[j] + driver.eval(t, x, y_next[j], z_k[j]) * dt;
            }
            check_finite(&target, k, "Y")?;
            let mut y_k = est.estimate(&target)?;
            check_finite(&y_k, k, "Y")?;

            if let Scheme::Implicit { max_iters, tol } = scheme {
                if tol.is_finite() {
                    let mut converged = false;
                    for _ in 0..max_iters {
                        for (j, slot) in target.iter_mut().enumerate() {
                            let x = forward.values.get(j, k);
                            *slot = y_next[j] + driver.eval(t, x, y_k[j], z_k[j]) * dt;
                        }
                        check_finite(&target, k, "Y")?;
                        let update = est.estimate(&target)?;
                        check_finite(&update, k, "Y")?;
                        let change = update
                            .iter()
                            .zip(&y_k)
                            .map(|(a, b)| libm::fabs(a - b))
                            .fold(0.0, f64::max);
                        y_k = update;
                        if change < tol {
                            converged = true;
                            break;
                        }
                    }
                    if !converged {
                        unconverged += 1;
                    }
                }
            }

            y.set_column(k, &y_k);
            z.set_column(k, &z_k);
            y_next = y_k;
        }

        Ok(BsdeSolution {
            grid,
            y,
            z,
            forward: forward.clone(),
            config: self.cfg,
            seed: bm.seed,
            scheme,
            picard_unconverged: unconverged,
            fallback_steps,
        })
    }
}

fn check_finite(values: &[f64], step: usize, component: &'static str) -> Result<()> {
    let bad = values.iter().filter(|v| !v.is_finite()).count();
    if bad > 0 {
        return Err(Error::NonFinite {
            step,
            samples: bad,
            component,
        });
    }
    Ok(())
}

/// Explicit scheme on a fresh signature cube.
pub fn solve_explicit(
    terminal: &[f64],
    driver: &dyn Driver,
    forward: &PathBatch,
    brownian: &PathBatch,
    cfg: &CeConfig,
) -> Result<BsdeSolution> {
    BackwardSolver::new(brownian, *cfg)?.explicit(terminal, driver, forward)
}

/// Implicit scheme with Picard iteration on a fresh signature cube.
pub fn solve_implicit_picard(
    terminal: &[f64],
    driver: &dyn Driver,
    forward: &PathBatch,
    brownian: &PathBatch,
    cfg: &CeConfig,
    picard_iters: usize,
    tol: f64,
) -> Result<BsdeSolution> {
    BackwardSolver::new(brownian, *cfg)?.solve(
        terminal,
        driver,
        forward,
        Scheme::Implicit {
            max_iters: picard_iters,
            tol,
        },
    )
}

/// Terminal values `g(X_N)` for each sample.
pub fn terminal_values(forward: &PathBatch, g: impl Fn(f64) -> f64) -> Vec<f64> {
    forward.terminal().into_iter().map(g).collect()
}
