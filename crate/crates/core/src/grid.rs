//! Uniform time grids and sampled trajectories, the carrier types for every
//! process in this crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform discretization of `[0, T]` into `steps` cells of width `dt = T / steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidGrid("steps must be at least 1".into()));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of grid points, `steps + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Grid time `t_i`; `time(steps)` is exactly the horizon.
    pub fn time(&self, i: usize) -> f64 {
        self.horizon * i as f64 / self.steps as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.time(i))
    }

    /// Smallest grid index whose time is `>= t` (snapped within a relative
    /// tolerance so exact grid times map to themselves). Clamped to the grid.
    pub fn index_at_or_after(&self, t: f64) -> usize {
        if t <= 0.0 {
            return 0;
        }
        let raw = t / self.dt();
        let snapped = raw.round();
        let idx = if (raw - snapped).abs() < 1e-9 * snapped.abs().max(1.0) {
            snapped as usize
        } else {
            raw.ceil() as usize
        };
        idx.min(self.steps)
    }

    /// Largest grid index whose time is `<= t`, clamped to the grid.
    pub fn index_at_or_before(&self, t: f64) -> usize {
        if t <= 0.0 {
            return 0;
        }
        let raw = t / self.dt();
        let snapped = raw.round();
        let idx = if (raw - snapped).abs() < 1e-9 * snapped.abs().max(1.0) {
            snapped as usize
        } else {
            raw.floor() as usize
        };
        idx.min(self.steps)
    }
}

/// A trajectory sampled on a [`TimeGrid`]; `values.len() == grid.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl Path {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::PathLength {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn start(&self) -> f64 {
        self.values[0]
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Successive increments `v_{i+1} - v_i`.
    pub fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.windows(2).map(|w| w[1] - w[0])
    }

    /// Largest absolute value along the path (at least `f64::MIN_POSITIVE`).
    pub fn scale(&self) -> f64 {
        self.values
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE)
    }

    /// Restriction to the first `steps` cells (a prefix of the path).
    pub fn prefix(&self, steps: usize) -> Result<Path> {
        if steps > self.grid.steps() {
            return Err(Error::InvalidGrid(format!(
                "prefix of {steps} steps exceeds the grid ({})",
                self.grid.steps()
            )));
        }
        let grid = TimeGrid::new(self.grid.dt() * steps as f64, steps)?;
        Path::new(grid, self.values[..=steps].to_vec())
    }
}

/// Cumulative realized quadratic variation along a grid; nondecreasing, starts at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QvPath {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl QvPath {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::PathLength {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if values[0] != 0.0 {
            return Err(Error::InvalidGrid("quadratic variation must start at 0".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidGrid("quadratic variation must be nondecreasing".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// View the cumulative values as an ordinary path (for time-change building).
    pub fn as_path(&self) -> Path {
        Path::new(self.grid, self.values.clone()).expect("lengths match by construction")
    }
}
