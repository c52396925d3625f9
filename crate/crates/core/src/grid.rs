use serde::Serialize;

use crate::error::{Error, Result};

/// Samples `values[i] = u(x0 + i·dx)` on a uniform grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridFunction {
    x0: f64,
    dx: f64,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(x0: f64, dx: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 nodes, got {}",
                values.len()
            )));
        }
        if !(dx.is_finite() && dx > 0.0) || !x0.is_finite() {
            return Err(Error::InvalidGrid(format!("x0 = {x0}, dx = {dx}")));
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        Ok(Self { x0, dx, values })
    }

    /// Samples `f` at `n` nodes spanning `[x_min, x_max]` inclusive.
    pub fn from_fn(x_min: f64, x_max: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 3 || !(x_max > x_min) {
            return Err(Error::InvalidGrid(format!(
                "[{x_min}, {x_max}] with {n} nodes"
            )));
        }
        let dx = (x_max - x_min) / (n - 1) as f64;
        Self::new(x_min, dx, (0..n).map(|i| f(x_min + dx * i as f64)).collect())
    }

    pub fn constant(x_min: f64, x_max: f64, n: usize, value: f64) -> Result<Self> {
        Self::from_fn(x_min, x_max, n, |_| value)
    }

    /// Same grid, new samples.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::GridMismatch("grid", "values"));
        }
        Self::new(self.x0, self.dx, values)
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = self.xs().zip(&self.values).map(|(x, &v)| f(x, v)).collect();
        Self {
            values,
            ..self.clone()
        }
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + self.dx * i as f64
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.len() - 1)
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.x(i))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.len() == other.len() && self.x0 == other.x0 && self.dx == other.dx
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `sup |self − other|` over shared nodes.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Shift every node by `s`; values are unchanged.
    pub fn translated(&self, s: f64) -> Self {
        Self {
            x0: self.x0 + s,
            ..self.clone()
        }
    }

    /// Linear interpolation; clamps to the end values outside the grid.
    pub fn interpolate(&self, x: f64) -> f64 {
        let t = (x - self.x0) / self.dx;
        if t <= 0.0 {
            return self.values[0];
        }
        let last = self.len() - 1;
        if t >= last as f64 {
            return self.values[last];
        }
        let i = t.floor() as usize;
        let w = t - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// Index of the node nearest to `x`, clamped to the grid.
    pub fn nearest(&self, x: f64) -> usize {
        let t = ((x - self.x0) / self.dx).round();
        t.clamp(0.0, (self.len() - 1) as f64) as usize
    }
}
