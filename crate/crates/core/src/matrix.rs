//! Dense sample × time-index storage.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Row-major `samples × points` array; row `j` is the trajectory of sample `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    samples: usize,
    points: usize,
    data: Vec<f64>,
}

impl SampleMatrix {
    pub fn zeros(samples: usize, points: usize) -> Self {
        SampleMatrix {
            samples,
            points,
            data: vec![0.0; samples * points],
        }
    }

    pub fn from_vec(samples: usize, points: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != samples * points {
            return Err(Error::shape(
                alloc::format!("{samples}x{points} = {} values", samples * points),
                data.len(),
            ));
        }
        Ok(SampleMatrix {
            samples,
            points,
            data,
        })
    }

    pub fn from_fn(samples: usize, points: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(samples * points);
        for j in 0..samples {
            for k in 0..points {
                data.push(f(j, k));
            }
        }
        SampleMatrix {
            samples,
            points,
            data,
        }
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn points(&self) -> usize {
        self.points
    }

    #[inline]
    pub fn get(&self, sample: usize, k: usize) -> f64 {
        self.data[sample * self.points + k]
    }

    #[inline]
    pub fn set(&mut self, sample: usize, k: usize, value: f64) {
        self.data[sample * self.points + k] = value;
    }

    pub fn row(&self, sample: usize) -> &[f64] {
        &self.data[sample * self.points..(sample + 1) * self.points]
    }

    pub fn row_mut(&mut self, sample: usize) -> &mut [f64] {
        &mut self.data[sample * self.points..(sample + 1) * self.points]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.samples).map(|j| self.get(j, k)).collect()
    }

    pub fn set_column(&mut self, k: usize, values: &[f64]) {
        debug_assert_eq!(values.len(), self.samples);
        for (j, &v) in values.iter().enumerate() {
            self.set(j, k, v);
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        SampleMatrix {
            samples: self.samples,
            points: self.points,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn same_shape(&self, other: &Self) -> Result<()> {
        if self.samples != other.samples || self.points != other.points {
            return Err(Error::shape(
                alloc::format!("{}x{}", self.samples, self.points),
                alloc::format!("{}x{}", other.samples, other.points),
            ));
        }
        Ok(())
    }
}
