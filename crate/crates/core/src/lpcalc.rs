//! Littlewood-Paley calculus on the torus.
//!
//! The dyadic bump is `chi(r) = T(log2 r + 1) - T(log2 r)` where `T` is the
//! smooth step built from `psi(t) = exp(-1/t)`. Its dilates telescope, so
//! `sum_k chi(2^-k r) = 1` for every `r > 0`, and the low-frequency cut-off
//! `P_0 = 1 - sum_{k >= 1} chi(2^-k .)` collapses to `1 - T(log2 r)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Space};

/// `psi(t) / (psi(t) + psi(1 - t))`, identically 0 for `t <= 0` and 1 for `t >= 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// The dyadic bump profile, supported in `1/2 < r < 2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct BumpProfile;

impl BumpProfile {
    pub fn evaluate(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let s = r.log2();
        // 1 - T(t) = T(1 - t) keeps the upper flank accurate near r = 2.
        if s <= 0.0 {
            smooth_step(s + 1.0)
        } else {
            smooth_step(1.0 - s)
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (0.5, 2.0)
    }

    /// Spectral weight of `P_k` at radius `r`.
    pub fn band(&self, k: usize, r: f64) -> f64 {
        if k == 0 {
            if r <= 0.0 {
                1.0
            } else {
                smooth_step(1.0 - r.log2())
            }
        } else {
            self.evaluate(r / (1u64 << k) as f64)
        }
    }

    /// Spectral weight of `P_{<k} = sum_{j<k} P_j` at radius `r`.
    pub fn below(&self, k: usize, r: f64) -> f64 {
        match k {
            0 => 0.0,
            _ if r <= 0.0 => 1.0,
            _ => smooth_step(k as f64 - r.log2()),
        }
    }

    /// Spectral weight of `P_{>=k} = 1 - P_{<k}` at radius `r`.
    pub fn at_or_above(&self, k: usize, r: f64) -> f64 {
        1.0 - self.below(k, r)
    }
}

pub fn check_band(grid: &Grid, k: usize) -> Result<()> {
    if k > grid.k_max() {
        return Err(Error::BandOutOfRange {
            k: k as i64,
            k_max: grid.k_max(),
        });
    }
    Ok(())
}

fn check_cutoff(grid: &Grid, k: usize) -> Result<()> {
    if k > grid.k_max() + 1 {
        return Err(Error::BandOutOfRange {
            k: k as i64,
            k_max: grid.k_max(),
        });
    }
    Ok(())
}

/// Radial weights sampled on the frequency lattice in FFT order.
pub fn radial_weights(grid: &Grid, w: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..grid.len()).map(|idx| w(grid.abs_wavevector(idx))).collect()
}

pub fn band_weights(grid: &Grid, k: usize) -> Vec<f64> {
    radial_weights(grid, |r| BumpProfile.band(k, r))
}

pub fn below_weights(grid: &Grid, k: usize) -> Vec<f64> {
    radial_weights(grid, |r| BumpProfile.below(k, r))
}

pub fn at_or_above_weights(grid: &Grid, k: usize) -> Vec<f64> {
    radial_weights(grid, |r| BumpProfile.at_or_above(k, r))
}

/// Multiplies a spectral field by `weights`.
pub fn weight_spectrum(spectral: &Field, weights: &[f64]) -> Field {
    let values = spectral
        .values()
        .iter()
        .zip(weights)
        .map(|(&v, &w)| v * w)
        .collect();
    spectral.with_values(Space::Spectral, values)
}

/// Multiplies the spectrum of a physical field by `weights`.
pub fn apply_weights(field: &Field, weights: &[f64]) -> Result<Field> {
    let spectral = field.forward()?;
    weight_spectrum(&spectral, weights).inverse()
}

/// `P_k f`.
pub fn project_band(field: &Field, k: usize) -> Result<Field> {
    check_band(field.grid(), k)?;
    apply_weights(field, &band_weights(field.grid(), k))
}

/// `P_{<k} f`.
pub fn project_low(field: &Field, k: usize) -> Result<Field> {
    check_cutoff(field.grid(), k)?;
    apply_weights(field, &below_weights(field.grid(), k))
}

/// `P_{>=k} f = f - P_{<k} f`, formed by subtraction in spectral space so the
/// two pieces recompose the input.
pub fn project_high(field: &Field, k: usize) -> Result<Field> {
    check_cutoff(field.grid(), k)?;
    let spectral = field.forward()?;
    let low = weight_spectrum(&spectral, &below_weights(field.grid(), k));
    spectral.sub(&low)?.inverse()
}

/// Splits a field into its band pieces `P_0 f, ..., P_{k_max} f`.
///
/// The pieces sum back to `f` whenever the spectrum of `f` lies in the disk
/// `|xi| <= 2^k_max`.
pub fn decompose(field: &Field) -> Result<Vec<(usize, Field)>> {
    let spectral = field.forward()?;
    (0..=field.grid().k_max())
        .map(|k| {
            let piece = weight_spectrum(&spectral, &band_weights(field.grid(), k)).inverse()?;
            Ok((k, piece))
        })
        .collect()
}

pub fn recompose(pieces: &[(usize, Field)]) -> Result<Field> {
    let first = pieces
        .first()
        .ok_or_else(|| Error::InvalidArgument("nothing to recompose".into()))?;
    let mut acc = Field::zeros(first.1.grid(), Space::Physical);
    for (_, p) in pieces {
        acc = acc.add(p)?;
    }
    Ok(acc)
}

/// Relative L2 mass of `field` outside the spectral support of band `k`.
pub fn band_leakage(field: &Field, k: usize) -> Result<f64> {
    check_band(field.grid(), k)?;
    let spectral = field.forward()?;
    let weights = band_weights(field.grid(), k);
    let (mut outside, mut total) = (0.0, 0.0);
    for (v, w) in spectral.values().iter().zip(&weights) {
        let m = v.norm_sqr();
        total += m;
        if *w == 0.0 {
            outside += m;
        }
    }
    Ok(if total == 0.0 {
        0.0
    } else {
        (outside / total).sqrt()
    })
}

/// Zeroes every coefficient with `|xi| > radius`.
pub fn truncate_disk(field: &Field, radius: f64) -> Result<Field> {
    let w = radial_weights(field.grid(), |r| if r <= radius { 1.0 } else { 0.0 });
    apply_weights(field, &w)
}

/// Real field with random spectrum confined to `|xi| <= 2^k_max`.
pub fn random_resolved_field(grid: &Grid, rng: &mut impl rand::Rng) -> Result<Field> {
    let values: Vec<Complex64> = (0..grid.len())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), 0.0))
        .collect();
    let f = Field::from_values(grid, Space::Physical, values)?;
    Ok(truncate_disk(&f, (1u64 << grid.k_max()) as f64)?.to_real())
}
