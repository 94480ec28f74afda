//! Uniform grids on X and piecewise-linear functions over them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ifs::Interval;

/// M cells, M + 1 equispaced nodes spanning X exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid {
    domain: Interval,
    cells: usize,
}

impl Grid {
    pub fn new(domain: Interval, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidParameter("a grid needs at least one cell".into()));
        }
        Ok(Grid { domain, cells })
    }

    pub fn domain(&self) -> &Interval {
        &self.domain
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn len(&self) -> usize {
        self.cells + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.domain.diam() / self.cells as f64
    }

    #[inline]
    pub fn node(&self, k: usize) -> f64 {
        if k == self.cells {
            self.domain.hi
        } else {
            self.domain.lo + self.domain.diam() * (k as f64 / self.cells as f64)
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.node(k)).collect()
    }

    /// Cell index and barycentric weight t ∈ [0, 1] of x (clamped into X).
    #[inline]
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let u = (x - self.domain.lo) / self.domain.diam() * self.cells as f64;
        if !(u > 0.0) {
            return (0, 0.0);
        }
        if u >= self.cells as f64 {
            return (self.cells - 1, 1.0);
        }
        let k = u.floor() as usize;
        (k, u - k as f64)
    }

    #[inline]
    pub fn cell_of(&self, x: f64) -> usize {
        self.locate(x).0
    }
}

/// Node values over a grid, evaluated by linear interpolation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "grid has {} nodes but {} values were given",
                grid.len(),
                values.len()
            )));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        GridFunction {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.node(k))).collect();
        GridFunction { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let (k, t) = self.grid.locate(x);
        (1.0 - t) * self.values[k] + t * self.values[k + 1]
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inf(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, c: f64) {
        self.values.iter_mut().for_each(|v| *v *= c);
    }

    /// sup over nodes of |self − other|.
    pub fn distance(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// max |second difference|, which approximates step²·sup|f''|.
    pub fn max_second_difference(&self) -> f64 {
        self.values
            .windows(3)
            .fold(0.0, |m, w| m.max((w[0] - 2.0 * w[1] + w[2]).abs()))
    }
}
