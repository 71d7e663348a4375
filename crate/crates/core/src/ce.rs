//! Conditional expectations `E[ξ | F_{t_k}]` by signature regression.
//!
//! Targets are regressed on `[1, S_{0,t_k}]`, the depth-`D` signature of the
//! time-augmented Brownian path up to `t_k`. One coefficient vector is fitted
//! per time index and shared by all samples; the per-sample estimate is the
//! fitted value, so it depends on the path only through `[0, t_k]`.

use alloc::vec;
use alloc::vec::Vec;

use crate::ridge::RidgeSystem;
use crate::signature::{SignatureCube, TimeScaling};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CeConfig {
    pub depth: usize,
    pub lambda: f64,
    pub scaling: TimeScaling,
}

impl Default for CeConfig {
    fn default() -> Self {
        CeConfig {
            depth: 3,
            lambda: 0.3,
            scaling: TimeScaling::Raw,
        }
    }
}

impl CeConfig {
    pub fn new(depth: usize, lambda: f64) -> Self {
        CeConfig {
            depth,
            lambda,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::precondition("signature depth must be at least 1"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::precondition("ridge penalty must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Regression on the features of one time index, factored once and reusable
/// for any number of targets.
#[derive(Debug, Clone)]
pub struct StepEstimator<'a> {
    samples: usize,
    /// `None` at `k = 0`, where `F_0` is trivial and the estimate is the mean.
    system: Option<RidgeSystem<'a>>,
}

impl<'a> StepEstimator<'a> {
    pub fn new(cube: &'a SignatureCube, k: usize, lambda: f64) -> Result<Self> {
        if k >= cube.points() {
            return Err(Error::precondition(alloc::format!(
                "time index {k} beyond grid of {} points",
                cube.points()
            )));
        }
        let system = if k == 0 {
            None
        } else {
            Some(RidgeSystem::new(cube.at(k), cube.features(), lambda)?)
        };
        Ok(StepEstimator {
            samples: cube.samples(),
            system,
        })
    }

    /// True when a singular `λ = 0` system was regularized with the fallback.
    pub fn used_fallback(&self) -> bool {
        self.system.as_ref().is_some_and(RidgeSystem::fallback)
    }

    pub fn estimate(&self, targets: &[f64]) -> Result<Vec<f64>> {
        if targets.len() != self.samples {
            return Err(Error::shape(alloc::format!("{} targets", self.samples), targets.len()));
        }
        match &self.system {
            Some(system) => system.fitted(targets),
            None => {
                if targets.iter().any(|y| !y.is_finite()) {
                    return Err(Error::precondition("targets must be finite"));
                }
                let mean = targets.iter().sum::<f64>() / targets.len() as f64;
                Ok(vec![mean; targets.len()])
            }
        }
    }
}

/// Estimates `E[targets | F_{t_k}]` for every sample.
pub fn conditional_expectation(
    targets: &[f64],
    cube: &SignatureCube,
    k: usize,
    cfg: &CeConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if cfg.depth != cube.depth() {
        return Err(Error::shape(
            alloc::format!("signature depth {}", cfg.depth),
            cube.depth(),
        ));
    }
    StepEstimator::new(cube, k, cfg.lambda)?.estimate(targets)
}
