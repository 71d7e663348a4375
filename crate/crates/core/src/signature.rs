//! Signatures of piecewise-linear paths.
//!
//! A discretely sampled path is read as the piecewise-linear interpolation of
//! its points. The signature of one linear segment with increment `v` is
//! `exp(v)`, and Chen's relation folds the segments together, so every prefix
//! signature costs one truncated product per grid step.

use alloc::vec;
use alloc::vec::Vec;

use crate::simulate::{PathBatch, TimeGrid};
use crate::tensor::{self, dimension, TruncatedTensor};
use crate::{Error, Result};

/// How the `(t, B_t)` coordinates are scaled before taking signatures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeScaling {
    /// Use `t` and `B_t` as they are.
    #[default]
    Raw,
    /// Map `[0, T]` to `[0, 1]`: `t / T` and `B_t / √T`.
    Normalized,
}

impl TimeScaling {
    fn factors(self, grid: &TimeGrid) -> (f64, f64) {
        match self {
            TimeScaling::Raw => (1.0, 1.0),
            TimeScaling::Normalized => {
                let t = grid.horizon();
                (1.0 / t, 1.0 / libm::sqrt(t))
            }
        }
    }
}

/// A path in `R^d` whose first coordinate is strictly increasing time.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedPath {
    dim: usize,
    /// `(N+1) × dim`, row-major.
    points: Vec<f64>,
}

impl AugmentedPath {
    pub fn new(dim: usize, points: Vec<f64>) -> Result<Self> {
        if dim == 0 || points.is_empty() || !points.len().is_multiple_of(dim) {
            return Err(Error::shape(
                alloc::format!("non-empty multiple of {dim}"),
                points.len(),
            ));
        }
        let path = AugmentedPath { dim, points };
        for k in 1..path.len() {
            if path.point(k)[0] <= path.point(k - 1)[0] {
                return Err(Error::precondition(
                    "time coordinate must be strictly increasing",
                ));
            }
        }
        Ok(path)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of points `N + 1`.
    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.dim..(k + 1) * self.dim]
    }
}

/// Pairs each scalar path with its grid: point `k` becomes `(t_k, B_{t_k})`.
pub fn augment_time(paths: &PathBatch) -> Result<Vec<AugmentedPath>> {
    let grid = paths.grid;
    if paths.values.points() < 2 {
        return Err(Error::precondition("path needs at least two points"));
    }
    (0..paths.samples())
        .map(|j| {
            let points = paths
                .values
                .row(j)
                .iter()
                .enumerate()
                .flat_map(|(k, &b)| [grid.time(k), b])
                .collect();
            AugmentedPath::new(2, points)
        })
        .collect()
}

/// Signature of the straight segment from `p` to `q`.
pub fn segment_signature(p: &[f64], q: &[f64], depth: usize) -> TruncatedTensor {
    let v: Vec<f64> = q.iter().zip(p).map(|(a, b)| a - b).collect();
    tensor::exp_level1(&v, depth)
}

/// Signatures over `[t_0, t_k]` for every grid index `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixSignatures {
    entries: Vec<TruncatedTensor>,
}

impl PrefixSignatures {
    pub fn get(&self, k: usize) -> &TruncatedTensor {
        &self.entries[k]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last(&self) -> &TruncatedTensor {
        self.entries.last().expect("at least one entry")
    }

    pub fn iter(&self) -> impl Iterator<Item = &TruncatedTensor> {
        self.entries.iter()
    }
}

pub fn prefix_signatures(path: &AugmentedPath, depth: usize) -> PrefixSignatures {
    let dim = path.dim();
    let mut entries = Vec::with_capacity(path.len());
    let mut current = TruncatedTensor::unit(dim, depth);
    let mut seg = vec![0.0; dimension(dim, depth)];
    let mut inc = vec![0.0; dim];
    entries.push(current.clone());
    for k in 1..path.len() {
        for (i, slot) in inc.iter_mut().enumerate() {
            *slot = path.point(k)[i] - path.point(k - 1)[i];
        }
        tensor::exp_into(&inc, depth, &mut seg);
        let mut next = current.clone().into_coeffs();
        tensor::mul_unipotent_assign(dim, depth, &mut next, &seg);
        current = TruncatedTensor::from_coeffs(dim, depth, next).expect("shape preserved");
        entries.push(current.clone());
    }
    PrefixSignatures { entries }
}

/// Signature of the whole path over `[t_0, t_N]`.
pub fn path_signature(path: &AugmentedPath, depth: usize) -> TruncatedTensor {
    prefix_signatures(path, depth).last().clone()
}

/// Flattened coefficients in canonical word order; entry 0 is the constant 1.
pub fn feature_vector(sig: &TruncatedTensor) -> Vec<f64> {
    sig.coeffs().to_vec()
}

/// Prefix signatures of the time-augmented Brownian paths of a whole batch,
/// flattened into regression features.
///
/// Storage is time-major: the `M × F` feature matrix for grid index `k` is
/// one contiguous block, which is what each backward step regresses on.
#[derive(Debug, Clone)]
pub struct SignatureCube {
    samples: usize,
    points: usize,
    features: usize,
    depth: usize,
    data: Vec<f64>,
}

impl SignatureCube {
    pub fn build(brownian: &PathBatch, depth: usize, scaling: TimeScaling) -> Result<Self> {
        if depth == 0 {
            return Err(Error::precondition("signature depth must be at least 1"));
        }
        let grid = brownian.grid;
        let (ts, bs) = scaling.factors(&grid);
        let dt = grid.dt() * ts;
        let samples = brownian.samples();
        let points = grid.steps() + 1;
        let features = dimension(2, depth);
        let mut data = vec![0.0; samples * points * features];
        let block = samples * features;
        let mut sig = vec![0.0; features];
        let mut seg = vec![0.0; features];
        for j in 0..samples {
            sig.iter_mut().for_each(|c| *c = 0.0);
            sig[0] = 1.0;
            data[j * features..(j + 1) * features].copy_from_slice(&sig);
            for (k, &db) in brownian.increments.row(j).iter().enumerate() {
                tensor::exp_into(&[dt, db * bs], depth, &mut seg);
                tensor::mul_unipotent_assign(2, depth, &mut sig, &seg);
                let at = (k + 1) * block + j * features;
                data[at..at + features].copy_from_slice(&sig);
            }
        }
        Ok(SignatureCube {
            samples,
            points,
            features,
            depth,
            data,
        })
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Feature count including the constant column.
    pub fn features(&self) -> usize {
        self.features
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Row-major `M × F` feature matrix at grid index `k`.
    pub fn at(&self, k: usize) -> &[f64] {
        let block = self.samples * self.features;
        &self.data[k * block..(k + 1) * block]
    }

    pub fn sample_at(&self, k: usize, sample: usize) -> &[f64] {
        let row = &self.at(k)[sample * self.features..(sample + 1) * self.features];
        row
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::sample_brownian;
    use crate::tensor::{exp_level1, Word};

    fn path(points: &[[f64; 2]]) -> AugmentedPath {
        AugmentedPath::new(2, points.iter().flatten().copied().collect()).unwrap()
    }

    #[test]
    fn augment_constant_path() {
        let grid = TimeGrid::new(1.0, 2).unwrap();
        let mut batch = sample_brownian(1, grid, 0).unwrap();
        batch.values = crate::matrix::SampleMatrix::zeros(1, 3);
        let aug = augment_time(&batch).unwrap();
        assert_eq!(aug[0].point(0), &[0.0, 0.0]);
        assert_eq!(aug[0].point(1), &[0.5, 0.0]);
        assert_eq!(aug[0].point(2), &[1.0, 0.0]);
    }

    #[test]
    fn augment_single_step() {
        let grid = TimeGrid::new(1.0, 1).unwrap();
        let mut batch = sample_brownian(1, grid, 0).unwrap();
        batch.values = crate::matrix::SampleMatrix::from_vec(1, 2, vec![0.0, 1.0]).unwrap();
        let aug = augment_time(&batch).unwrap();
        assert_eq!(aug[0].point(1), &[1.0, 1.0]);
    }

    #[test]
    fn augmented_time_is_strictly_increasing() {
        let grid = TimeGrid::new(1.0, 30).unwrap();
        let batch = sample_brownian(5, grid, 4).unwrap();
        for p in augment_time(&batch).unwrap() {
            for k in 1..p.len() {
                assert!(p.point(k)[0] > p.point(k - 1)[0]);
            }
        }
        assert!(AugmentedPath::new(2, vec![0.0, 0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn segment_examples() {
        assert_eq!(
            segment_signature(&[0.3, 0.3], &[0.3, 0.3], 3),
            TruncatedTensor::unit(2, 3)
        );
        let s = segment_signature(&[0.0, 0.0], &[1.0, 1.0], 3);
        for k in 1..=3 {
            let f: f64 = (1..=k).map(|i| i as f64).product();
            assert!(s.level(k).iter().all(|&c| (c - 1.0 / f).abs() < 1e-15));
        }
        let s = segment_signature(&[0.0, 0.0], &[0.5, -0.2], 2);
        assert!((s.get(&Word::new(&[1, 2])) + 0.05).abs() < 1e-15);
    }

    #[test]
    fn collinear_points_do_not_change_signature() {
        let straight = path(&[[0.0, 0.0], [0.25, 0.25], [0.5, 0.5], [1.0, 1.0]]);
        let s = path_signature(&straight, 3);
        assert!(s.max_abs_diff(&exp_level1(&[1.0, 1.0], 3)) < 1e-15);
    }

    #[test]
    fn two_segments_follow_chen() {
        let u = [0.5, 0.3];
        let v = [0.25, -0.9];
        let p = path(&[[0.0, 0.0], u, [u[0] + v[0], u[1] + v[1]]]);
        let s = prefix_signatures(&p, 3);
        let expected = exp_level1(&u, 3).concat(&exp_level1(&v, 3)).unwrap();
        assert!(s.get(2).max_abs_diff(&expected) < 1e-15);
        assert_eq!(s.get(0), &TruncatedTensor::unit(2, 3));
    }

    #[test]
    fn level_one_telescopes() {
        let grid = TimeGrid::new(1.0, 40).unwrap();
        let batch = sample_brownian(3, grid, 12).unwrap();
        let aug = augment_time(&batch).unwrap();
        let sigs = prefix_signatures(&aug[1], 3);
        for k in 0..=40 {
            let l1 = sigs.get(k).level(1);
            assert!((l1[0] - grid.time(k)).abs() < 1e-12);
            assert!((l1[1] - batch.values.get(1, k)).abs() < 1e-12);
        }
    }

    #[test]
    fn feature_vector_layout() {
        let f = feature_vector(&TruncatedTensor::unit(2, 3));
        assert_eq!(f.len(), 15);
        assert_eq!(f[0], 1.0);
        assert!(f[1..].iter().all(|&c| c == 0.0));
        assert_eq!(f.len() - 1, 14);

        let f = feature_vector(&exp_level1(&[1.0, 0.0], 2));
        assert_eq!(f, vec![1.0, 1.0, 0.0, 0.5, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn cube_matches_per_path_signatures() {
        let grid = TimeGrid::new(1.0, 25).unwrap();
        let batch = sample_brownian(6, grid, 77).unwrap();
        let cube = SignatureCube::build(&batch, 3, TimeScaling::Raw).unwrap();
        assert_eq!(cube.features(), 15);
        for (j, p) in augment_time(&batch).unwrap().iter().enumerate() {
            let sigs = prefix_signatures(p, 3);
            for k in 0..=25 {
                let diff = sigs
                    .get(k)
                    .coeffs()
                    .iter()
                    .zip(cube.sample_at(k, j))
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                assert!(diff < 1e-13, "sample {j} step {k}: {diff}");
            }
        }
    }

    #[test]
    fn normalized_scaling_is_identity_on_unit_horizon() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let batch = sample_brownian(4, grid, 1).unwrap();
        let raw = SignatureCube::build(&batch, 2, TimeScaling::Raw).unwrap();
        let norm = SignatureCube::build(&batch, 2, TimeScaling::Normalized).unwrap();
        assert_eq!(raw.at(10), norm.at(10));
    }
}
