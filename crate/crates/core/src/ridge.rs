//! Ridge regression with an unpenalized intercept.
//!
//! Column 0 of every design matrix is the constant feature. The weights solve
//! `(AᵀA + λP) w = Aᵀy`, where `P` is the identity with its intercept entry
//! zeroed. The system is solved in centered form: the slopes come from
//! `(XcᵀXc + λI) w = Xcᵀ(y - ȳ)` over the mean-centered non-constant columns,
//! and the intercept is `ȳ - x̄ᵀw`. Both forms have the same solution. The
//! centered form keeps feature columns that are constant across samples (the
//! pure-time signature words) from becoming collinear with the intercept.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Regularization used when `λ = 0` meets a rank-deficient design.
pub const LAMBDA_MIN: f64 = 1e-10;

const SINGULAR_PIVOT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel {
    /// Intercept first, then one weight per non-constant feature.
    pub weights: Vec<f64>,
    /// The penalty that was actually applied.
    pub lambda: f64,
    /// True when the requested `λ = 0` system was singular and
    /// [`LAMBDA_MIN`] was used instead.
    pub fallback: bool,
}

impl RidgeModel {
    pub fn features(&self) -> usize {
        self.weights.len()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.weights.iter().zip(row).map(|(w, x)| w * x).sum()
    }
}

/// Cholesky factor of the centered, regularized Gram matrix of one design.
///
/// Several targets regressed on the same features share one factorization;
/// the backward scheme regresses both its Z and its Y targets on the
/// signature features of the same time step.
#[derive(Debug, Clone)]
pub struct RidgeSystem<'a> {
    design: &'a [f64],
    cols: usize,
    rows: usize,
    means: Vec<f64>,
    /// Lower-triangular factor, `(cols-1)²` row-major.
    chol: Vec<f64>,
    lambda: f64,
    fallback: bool,
}

impl<'a> RidgeSystem<'a> {
    /// Factors the system for a row-major `rows × cols` design whose column 0
    /// is all ones.
    pub fn new(design: &'a [f64], cols: usize, lambda: f64) -> Result<Self> {
        if cols == 0 || design.is_empty() || !design.len().is_multiple_of(cols) {
            return Err(Error::shape(
                alloc::format!("non-empty multiple of {cols}"),
                design.len(),
            ));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::precondition("ridge penalty must be finite and >= 0"));
        }
        let rows = design.len() / cols;
        if design.iter().any(|x| !x.is_finite()) {
            return Err(Error::precondition("design matrix has non-finite entries"));
        }
        if design.chunks_exact(cols).any(|r| r[0] != 1.0) {
            return Err(Error::precondition("column 0 must be the constant 1"));
        }

        let p = cols - 1;
        let mut means = vec![0.0; p];
        for row in design.chunks_exact(cols) {
            for (m, x) in means.iter_mut().zip(&row[1..]) {
                *m += x;
            }
        }
        means.iter_mut().for_each(|m| *m /= rows as f64);

        let mut gram = vec![0.0; p * p];
        let mut centered = vec![0.0; p];
        for row in design.chunks_exact(cols) {
            for ((c, x), m) in centered.iter_mut().zip(&row[1..]).zip(&means) {
                *c = x - m;
            }
            for a in 0..p {
                let ca = centered[a];
                let g = &mut gram[a * p..a * p + a + 1];
                for (gb, cb) in g.iter_mut().zip(&centered[..=a]) {
                    *gb += ca * cb;
                }
            }
        }

        let (chol, lambda, fallback) = match cholesky(&gram, p, lambda) {
            Some(l) => (l, lambda, false),
            None if lambda == 0.0 => match cholesky(&gram, p, LAMBDA_MIN) {
                Some(l) => (l, LAMBDA_MIN, true),
                None => return Err(Error::precondition("normal equations are singular")),
            },
            None => return Err(Error::precondition("normal equations are singular")),
        };

        Ok(RidgeSystem {
            design,
            cols,
            rows,
            means,
            chol,
            lambda,
            fallback,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Penalty actually applied to the slopes.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn fallback(&self) -> bool {
        self.fallback
    }

    pub fn fit(&self, targets: &[f64]) -> Result<RidgeModel> {
        if targets.len() != self.rows {
            return Err(Error::shape(alloc::format!("{} targets", self.rows), targets.len()));
        }
        if targets.iter().any(|y| !y.is_finite()) {
            return Err(Error::precondition("targets must be finite"));
        }
        let p = self.cols - 1;
        let y_mean = targets.iter().sum::<f64>() / self.rows as f64;
        let mut rhs = vec![0.0; p];
        for (row, &y) in self.design.chunks_exact(self.cols).zip(targets) {
            let yc = y - y_mean;
            for ((r, x), m) in rhs.iter_mut().zip(&row[1..]).zip(&self.means) {
                *r += (x - m) * yc;
            }
        }
        let slopes = cholesky_solve(&self.chol, p, rhs);
        let intercept = y_mean - slopes.iter().zip(&self.means).map(|(w, m)| w * m).sum::<f64>();
        let mut weights = Vec::with_capacity(self.cols);
        weights.push(intercept);
        weights.extend(slopes);
        Ok(RidgeModel {
            weights,
            lambda: self.lambda,
            fallback: self.fallback,
        })
    }

    /// In-sample predictions for `targets`.
    pub fn fitted(&self, targets: &[f64]) -> Result<Vec<f64>> {
        let model = self.fit(targets)?;
        Ok(self
            .design
            .chunks_exact(self.cols)
            .map(|row| model.predict_row(row))
            .collect())
    }
}

/// Fits a ridge model on a row-major design with `cols` columns.
pub fn fit(design: &[f64], cols: usize, targets: &[f64], lambda: f64) -> Result<RidgeModel> {
    RidgeSystem::new(design, cols, lambda)?.fit(targets)
}

/// Row-wise inner products of `design` with the model weights.
pub fn predict(model: &RidgeModel, design: &[f64], cols: usize) -> Result<Vec<f64>> {
    if cols != model.features() || !design.len().is_multiple_of(cols) {
        return Err(Error::shape(
            alloc::format!("{} columns", model.features()),
            cols,
        ));
    }
    Ok(design
        .chunks_exact(cols)
        .map(|row| model.predict_row(row))
        .collect())
}

/// Cholesky factor of `a + shift·I` from the lower triangle of `a`, or `None`
/// if a pivot is not safely positive.
fn cholesky(a: &[f64], n: usize, shift: f64) -> Option<Vec<f64>> {
    let scale = (0..n).map(|i| a[i * n + i]).fold(0.0, f64::max).max(1.0);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            if i == j {
                s += shift;
            }
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > SINGULAR_PIVOT * scale) && !(shift > 0.0 && s >= 0.5 * shift) {
                    return None;
                }
                l[i * n + i] = libm::sqrt(s);
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[f64], n: usize, mut b: Vec<f64>) -> Vec<f64> {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    b
}
