use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Uniform grid on the flat torus [0,2π)^n, last axis fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TorusGrid {
    n: usize,
    sizes: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl TorusGrid {
    pub fn new(sizes: &[usize]) -> Result<Self> {
        let n = sizes.len();
        if n == 0 || n % 2 != 0 || n > crate::multiindex::MAX_DIM {
            return Err(Error::Grid(format!("dimension {n} must be even and at most 8")));
        }
        for &s in sizes {
            if s < 4 || !s.is_power_of_two() {
                return Err(Error::Grid(format!("axis size {s} must be a power of two ≥ 4")));
            }
        }
        let mut strides = vec![1; n];
        for a in (0..n - 1).rev() {
            strides[a] = strides[a + 1] * sizes[a + 1];
        }
        let len = sizes.iter().product();
        Ok(TorusGrid { n, sizes: sizes.to_vec(), strides, len })
    }

    pub fn cube(n: usize, size: usize) -> Result<Self> {
        Self::new(&vec![size; n])
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }
    pub fn strides(&self) -> &[usize] {
        &self.strides
    }
    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * PI / self.sizes[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.n).map(|a| self.spacing(a)).product()
    }

    /// Coordinate of point `p` along `axis`.
    pub fn coord(&self, p: usize, axis: usize) -> f64 {
        ((p / self.strides[axis]) % self.sizes[axis]) as f64 * self.spacing(axis)
    }

    pub fn point(&self, p: usize) -> Vec<f64> {
        (0..self.n).map(|a| self.coord(p, a)).collect()
    }

    /// Per-axis coordinate vectors.
    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.sizes[axis]).map(|i| i as f64 * self.spacing(axis)).collect()
    }

    pub fn same_as(&self, other: &TorusGrid) -> Result<()> {
        if self != other {
            return Err(Error::Grid("fields live on different grids".into()));
        }
        Ok(())
    }
}
