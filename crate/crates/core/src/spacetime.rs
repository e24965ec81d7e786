//! Uniform time grids on `[0, 1]` and time-indexed fields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Space};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeGrid {
    steps: usize,
}

impl TimeGrid {
    pub fn new(steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidArgument("time grid needs at least one step".into()));
        }
        Ok(TimeGrid { steps })
    }

    /// Number of intervals; there are `steps + 1` nodes.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn nodes(&self) -> usize {
        self.steps + 1
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.steps as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 / self.steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.nodes()).map(|j| self.time(j)).collect()
    }

    /// Trapezoid rule for `integral_0^1` of node samples.
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        debug_assert_eq!(samples.len(), self.nodes());
        let inner: f64 = samples[1..self.steps].iter().sum();
        self.dt() * (inner + 0.5 * (samples[0] + samples[self.steps]))
    }
}

#[derive(Debug, Clone)]
pub struct SpaceTimeField {
    time: TimeGrid,
    slices: Vec<Field>,
}

impl SpaceTimeField {
    pub fn new(time: TimeGrid, slices: Vec<Field>) -> Result<Self> {
        if slices.len() != time.nodes() {
            return Err(Error::InvalidArgument(format!(
                "expected {} time slices, got {}",
                time.nodes(),
                slices.len()
            )));
        }
        let grid = slices[0].grid().clone();
        for s in &slices {
            if s.grid() != &grid {
                return Err(Error::GridMismatch);
            }
            s.require_space(Space::Physical)?;
        }
        Ok(SpaceTimeField { time, slices })
    }

    pub fn zeros(grid: &Grid, time: TimeGrid) -> Self {
        SpaceTimeField {
            time,
            slices: vec![Field::zeros(grid, Space::Physical); time.nodes()],
        }
    }

    /// `profile(t) * shape(x)`.
    pub fn separable(time: TimeGrid, shape: &Field, profile: impl Fn(f64) -> f64) -> Self {
        let slices = time
            .times()
            .into_iter()
            .map(|t| shape.scale(profile(t)))
            .collect();
        SpaceTimeField { time, slices }
    }

    pub fn from_fn(grid: &Grid, time: TimeGrid, f: impl Fn(f64) -> Field) -> Result<Self> {
        let slices = time.times().into_iter().map(f).collect();
        let out = Self::new(time, slices)?;
        if out.grid() != grid {
            return Err(Error::GridMismatch);
        }
        Ok(out)
    }

    pub fn time(&self) -> TimeGrid {
        self.time
    }

    pub fn grid(&self) -> &Grid {
        self.slices[0].grid()
    }

    pub fn slices(&self) -> &[Field] {
        &self.slices
    }

    pub fn slice(&self, j: usize) -> &Field {
        &self.slices[j]
    }

    pub fn into_slices(self) -> Vec<Field> {
        self.slices
    }

    pub fn map_slices(&self, f: impl Fn(&Field) -> Result<Field>) -> Result<Self> {
        let slices = self.slices.iter().map(f).collect::<Result<Vec<_>>>()?;
        Self::new(self.time, slices)
    }

    pub fn require_compatible(&self, other: &SpaceTimeField) -> Result<()> {
        if self.time != other.time {
            return Err(Error::TimeGridMismatch);
        }
        if self.grid() != other.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &SpaceTimeField) -> Result<Self> {
        self.require_compatible(other)?;
        let slices = self
            .slices
            .iter()
            .zip(&other.slices)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(SpaceTimeField {
            time: self.time,
            slices,
        })
    }

    pub fn sub(&self, other: &SpaceTimeField) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        SpaceTimeField {
            time: self.time,
            slices: self.slices.iter().map(|f| f.scale(s)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.slices.iter().map(Field::max_abs).fold(0.0, f64::max)
    }
}
