//! Periodic grid on the 2-torus and the unitary discrete Fourier transform.
//!
//! Samples are stored row-major: index `i * n + j` holds the value at
//! `(x_1, x_2) = (i h, j h)` with `h = L / n`. Spectral samples use the same
//! layout in FFT order, so index `i` on an axis corresponds to the signed
//! integer frequency `i` for `i < n/2` and `i - n` otherwise.
//!
//! The transform is normalized as the coefficient map onto the orthonormal
//! basis `e^{i xi.x} / L`, i.e. `f_hat(xi) = (1/L) * integral f e^{-i xi.x}`,
//! so the spectral l2 norm equals the physical L2 norm.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Space {
    Physical,
    Spectral,
}

#[derive(Clone)]
pub struct Grid {
    n: usize,
    length: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "domain length must be positive, got {length}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Grid {
            n,
            length,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    /// Grid on the standard torus `[0, 2pi)^2`.
    pub fn torus(n: usize) -> Result<Self> {
        Self::new(n, 2.0 * PI)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing() * self.spacing()
    }

    pub fn area(&self) -> f64 {
        self.length * self.length
    }

    /// Largest band index whose dyadic shell is fully resolved.
    pub fn k_max(&self) -> usize {
        (self.n / 2).trailing_zeros() as usize - 1
    }

    /// Signed integer frequency for FFT index `i`.
    pub fn freq_index(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// FFT index for a signed integer frequency (wrapped onto the lattice).
    pub fn index_of(&self, q: i64) -> usize {
        q.rem_euclid(self.n as i64) as usize
    }

    pub fn wavenumber(&self, i: usize) -> f64 {
        self.freq_index(i) as f64 * 2.0 * PI / self.length
    }

    pub fn wavevector(&self, idx: usize) -> (f64, f64) {
        (self.wavenumber(idx / self.n), self.wavenumber(idx % self.n))
    }

    pub fn abs_wavevector(&self, idx: usize) -> f64 {
        let (a, b) = self.wavevector(idx);
        a.hypot(b)
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    pub fn point(&self, idx: usize) -> (f64, f64) {
        (self.coordinate(idx / self.n), self.coordinate(idx % self.n))
    }

    /// Flat-torus distance between two points.
    pub fn torus_distance(&self, p: (f64, f64), q: (f64, f64)) -> f64 {
        let wrap = |d: f64| {
            let d = d.rem_euclid(self.length);
            d.min(self.length - d)
        };
        wrap(p.0 - q.0).hypot(wrap(p.1 - q.1))
    }

    pub fn center(&self) -> (f64, f64) {
        (self.length / 2.0, self.length / 2.0)
    }

    fn fft_2d(&self, data: &mut [Complex64], inverse: bool) {
        let plan = if inverse { &self.inverse } else { &self.forward };
        let n = self.n;
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        transpose(data, n);
        plan.process_with_scratch(data, &mut scratch);
        transpose(data, n);
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// A scalar field on the grid, in physical or spectral representation.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Grid,
    space: Space,
    values: Vec<Complex64>,
}

impl Field {
    pub fn zeros(grid: &Grid, space: Space) -> Self {
        Field {
            grid: grid.clone(),
            space,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_values(grid: &Grid, space: Space, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite { index });
        }
        Ok(Field {
            grid: grid.clone(),
            space,
            values,
        })
    }

    pub fn from_real(grid: &Grid, values: &[f64]) -> Result<Self> {
        Self::from_values(
            grid,
            Space::Physical,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    /// Physical field sampled from `f(x_1, x_2)`.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let (x1, x2) = grid.point(idx);
                f(x1, x2)
            })
            .collect();
        Field {
            grid: grid.clone(),
            space: Space::Physical,
            values,
        }
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self::from_fn(grid, |_, _| Complex64::new(value, 0.0))
    }

    /// Unit-amplitude plane wave `e^{i (q1 x_1 + q2 x_2) 2pi/L}`.
    pub fn plane_wave(grid: &Grid, q1: i64, q2: i64) -> Self {
        let s = 2.0 * PI / grid.length();
        Self::from_fn(grid, |x1, x2| {
            Complex64::from_polar(1.0, s * (q1 as f64 * x1 + q2 as f64 * x2))
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.grid.n() + j]
    }

    /// Spectral coefficient at signed frequency `(q1, q2)`.
    pub fn coefficient(&self, q1: i64, q2: i64) -> Complex64 {
        debug_assert_eq!(self.space, Space::Spectral);
        self.values[self.grid.index_of(q1) * self.grid.n() + self.grid.index_of(q2)]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// Drops the imaginary parts.
    pub fn to_real(&self) -> Field {
        self.map(|v| Complex64::new(v.re, 0.0))
    }

    pub fn require_space(&self, expected: Space) -> Result<()> {
        if self.space != expected {
            return Err(Error::SpaceMismatch {
                expected,
                found: self.space,
            });
        }
        Ok(())
    }

    pub fn require_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        Field {
            grid: self.grid.clone(),
            space: self.space,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(
        &self,
        other: &Field,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Field> {
        self.require_same_grid(other)?;
        other.require_space(self.space)?;
        Ok(Field {
            grid: self.grid.clone(),
            space: self.space,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product; both fields must be physical.
    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.require_space(Space::Physical)?;
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(|v| v * s)
    }

    pub fn scale_complex(&self, s: Complex64) -> Field {
        self.map(|v| v * s)
    }

    pub fn axpy(&mut self, alpha: f64, x: &Field) {
        debug_assert!(self.grid == x.grid && self.space == x.space);
        for (y, &xv) in self.values.iter_mut().zip(&x.values) {
            *y += xv * alpha;
        }
    }

    pub fn forward(&self) -> Result<Field> {
        forward_transform(self)
    }

    pub fn inverse(&self) -> Result<Field> {
        inverse_transform(self)
    }

    pub(crate) fn with_values(&self, space: Space, values: Vec<Complex64>) -> Field {
        Field {
            grid: self.grid.clone(),
            space,
            values,
        }
    }
}

/// Physical samples to unitary spectral coefficients.
pub fn forward_transform(field: &Field) -> Result<Field> {
    field.require_space(Space::Physical)?;
    let grid = field.grid();
    let mut data = field.values.clone();
    grid.fft_2d(&mut data, false);
    let s = grid.length() / (grid.n() * grid.n()) as f64;
    data.iter_mut().for_each(|v| *v *= s);
    Ok(field.with_values(Space::Spectral, data))
}

/// Unitary spectral coefficients back to physical samples.
pub fn inverse_transform(spectral: &Field) -> Result<Field> {
    spectral.require_space(Space::Spectral)?;
    let grid = spectral.grid();
    let mut data = spectral.values.clone();
    grid.fft_2d(&mut data, true);
    let s = 1.0 / grid.length();
    data.iter_mut().for_each(|v| *v *= s);
    Ok(spectral.with_values(Space::Physical, data))
}
