//! Synthesis of admissible coefficient data `a = d_t b + c` and forcing families.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Space};
use crate::lpcalc::{self, band_weights, smooth_step};
use crate::norms::{self, coefficient_norms};
use crate::spacetime::{SpaceTimeField, TimeGrid};

/// Relative slack allowed on `max(||a||_1, ||b||_2, ||c||_3) <= delta0`.
const NORM_SLACK: f64 = 1e-9;

/// Point masses per random atom.
const ATOM_POINTS: usize = 3;

/// The coefficient triple together with the exact time derivative of `b`.
#[derive(Debug, Clone)]
pub struct CoefficientDecomposition {
    a: SpaceTimeField,
    b: SpaceTimeField,
    b_dot: SpaceTimeField,
    c: SpaceTimeField,
    delta0: f64,
}

impl CoefficientDecomposition {
    /// Assembles a decomposition, checking `a = b_dot + c` and the norm bound.
    pub fn from_parts(
        a: SpaceTimeField,
        b: SpaceTimeField,
        b_dot: SpaceTimeField,
        c: SpaceTimeField,
        delta0: f64,
    ) -> Result<Self> {
        for f in [&b, &b_dot, &c] {
            a.require_compatible(f)?;
        }
        let cd = CoefficientDecomposition {
            a,
            b,
            b_dot,
            c,
            delta0,
        };
        let residual = cd.consistency_residual()?;
        if residual > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "a differs from d_t b + c by {residual:.3e} (relative)"
            )));
        }
        let (a1, b2, c3) = coefficient_norms(&cd)?;
        if a1.max(b2).max(c3) > delta0 * (1.0 + NORM_SLACK) {
            return Err(Error::InvalidArgument(format!(
                "norms ({a1:.4e}, {b2:.4e}, {c3:.4e}) exceed delta0 = {delta0}"
            )));
        }
        Ok(cd)
    }

    /// `b = 0`, `c = a`; `delta0` is set to the resulting `||a||_1 vs ||c||_3` maximum.
    pub fn from_coefficient(a: SpaceTimeField) -> Result<Self> {
        let zero = SpaceTimeField::zeros(a.grid(), a.time());
        let mut cd = CoefficientDecomposition {
            b: zero.clone(),
            b_dot: zero,
            c: a.clone(),
            a,
            delta0: 0.0,
        };
        let (a1, b2, c3) = coefficient_norms(&cd)?;
        cd.delta0 = a1.max(b2).max(c3);
        Ok(cd)
    }

    pub fn zero(grid: &Grid, time: TimeGrid) -> Self {
        Self::from_coefficient(SpaceTimeField::zeros(grid, time)).expect("zero data")
    }

    pub fn time_grid(&self) -> TimeGrid {
        self.a.time()
    }

    pub fn grid(&self) -> &Grid {
        self.a.grid()
    }

    pub fn a(&self) -> &SpaceTimeField {
        &self.a
    }

    pub fn b(&self) -> &SpaceTimeField {
        &self.b
    }

    pub fn b_dot(&self) -> &SpaceTimeField {
        &self.b_dot
    }

    pub fn c(&self) -> &SpaceTimeField {
        &self.c
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    /// `max_t ||a - b_dot - c||_inf / max_t ||a||_inf`.
    pub fn consistency_residual(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for j in 0..self.a.time().nodes() {
            let r = self
                .a
                .slice(j)
                .sub(self.b_dot.slice(j))?
                .sub(self.c.slice(j))?;
            worst = worst.max(r.max_abs());
        }
        let scale = self.a.max_abs();
        Ok(if scale == 0.0 { worst } else { worst / scale })
    }

    /// Multiplies every field by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        CoefficientDecomposition {
            a: self.a.scale(s),
            b: self.b.scale(s),
            b_dot: self.b_dot.scale(s),
            c: self.c.scale(s),
            delta0: self.delta0 * s.abs(),
        }
    }
}

/// Trigonometric time profile on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TimeProfile {
    Const,
    /// `sin(2 pi m t)`
    Sin(u32),
    /// `cos(2 pi m t)`
    Cos(u32),
}

impl TimeProfile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Const => 1.0,
            TimeProfile::Sin(m) => (2.0 * PI * m as f64 * t).sin(),
            TimeProfile::Cos(m) => (2.0 * PI * m as f64 * t).cos(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Const => 0.0,
            TimeProfile::Sin(m) => {
                let w = 2.0 * PI * m as f64;
                w * (w * t).cos()
            }
            TimeProfile::Cos(m) => {
                let w = 2.0 * PI * m as f64;
                -w * (w * t).sin()
            }
        }
    }
}

impl fmt::Display for TimeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeProfile::Const => write!(f, "const"),
            TimeProfile::Sin(m) => write!(f, "sin({m})"),
            TimeProfile::Cos(m) => write!(f, "cos({m})"),
        }
    }
}

impl FromStr for TimeProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "const" {
            return Ok(TimeProfile::Const);
        }
        let parse = |body: &str| {
            body.strip_prefix('(')
                .and_then(|b| b.strip_suffix(')'))
                .and_then(|b| b.trim().parse::<u32>().ok())
                .ok_or_else(|| Error::Spec(format!("bad time profile {s:?}")))
        };
        if let Some(rest) = s.strip_prefix("sin") {
            Ok(TimeProfile::Sin(parse(rest)?))
        } else if let Some(rest) = s.strip_prefix("cos") {
            Ok(TimeProfile::Cos(parse(rest)?))
        } else {
            Err(Error::Spec(format!(
                "time profile must be const, sin(m) or cos(m), got {s:?}"
            )))
        }
    }
}

impl TryFrom<String> for TimeProfile {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<TimeProfile> for String {
    fn from(p: TimeProfile) -> String {
        p.to_string()
    }
}

/// One `(band, profile, amplitude)` term of a coefficient spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomTerm {
    pub band: usize,
    pub profile: TimeProfile,
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Overrides the atom seed derived from the spec seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn one() -> f64 {
    1.0
}

/// Coefficient spec: the terms of `b` and of `c`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    #[serde(default)]
    pub delta0: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub b: Vec<AtomTerm>,
    #[serde(default)]
    pub c: Vec<AtomTerm>,
}

impl CoefficientSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Spec(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| Error::Spec(format!("{}: {e}", path.display())))
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty() && self.c.is_empty()
    }
}

fn atom_seed(base: u64, index: usize) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((index as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Normalizes a real field to the requested `H^1` norm.
fn normalize_h1(f: Field, target_h1: f64) -> Result<Field> {
    if target_h1 == 0.0 {
        return Ok(Field::zeros(f.grid(), Space::Physical));
    }
    let h1 = norms::sobolev_norm(&f, 1.0)?;
    if h1 == 0.0 {
        return Err(Error::InvalidArgument("cannot normalize a zero field".into()));
    }
    Ok(f.scale(target_h1 / h1))
}

/// Spectrum of `sum_j w_j P_k delta_{x_j}`.
fn point_mass_atom(grid: &Grid, k: usize, points: &[((f64, f64), f64)]) -> Result<Field> {
    let weights = band_weights(grid, k);
    let values = (0..grid.len())
        .map(|idx| {
            if weights[idx] == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let (xi1, xi2) = grid.wavevector(idx);
            let mut acc = Complex64::new(0.0, 0.0);
            for &((x1, x2), w) in points {
                acc += Complex64::from_polar(w, -(xi1 * x1 + xi2 * x2));
            }
            acc * weights[idx]
        })
        .collect();
    Ok(Field::from_values(grid, Space::Spectral, values)?
        .inverse()?
        .to_real())
}

/// Real band-`k` atom with `||.||_{H^1} = target_h1`, deterministic in `seed`.
///
/// The atom is `P_k` applied to a few randomly placed and weighted point
/// masses, so it is spatially concentrated and saturates Bernstein's
/// inequality up to a constant.
pub fn random_band_atom(grid: &Grid, k: usize, seed: u64, target_h1: f64) -> Result<Field> {
    random_band_atom_rng(grid, k, &mut ChaCha8Rng::seed_from_u64(seed), target_h1)
}

pub fn random_band_atom_rng(
    grid: &Grid,
    k: usize,
    rng: &mut impl Rng,
    target_h1: f64,
) -> Result<Field> {
    lpcalc::check_band(grid, k)?;
    if !(target_h1 >= 0.0 && target_h1.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "target H^1 norm must be >= 0, got {target_h1}"
        )));
    }
    let points: Vec<((f64, f64), f64)> = (0..ATOM_POINTS)
        .map(|_| {
            let x = (
                rng.gen_range(0.0..grid.length()),
                rng.gen_range(0.0..grid.length()),
            );
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            (x, sign * rng.gen_range(0.5..1.0))
        })
        .collect();
    if target_h1 == 0.0 {
        return Ok(Field::zeros(grid, Space::Physical));
    }
    normalize_h1(point_mass_atom(grid, k, &points)?, target_h1)
}

/// `P_k delta_center`, normalized to the requested `H^1` norm.
pub fn centered_band_atom(grid: &Grid, k: usize, center: (f64, f64), target_h1: f64) -> Result<Field> {
    lpcalc::check_band(grid, k)?;
    normalize_h1(point_mass_atom(grid, k, &[(center, 1.0)])?, target_h1)
}

/// Band-`k` wave packet: `P_k` of a Gaussian envelope of width `width`
/// around `center`, modulated at frequency `2^k` in direction `angle`.
pub fn wave_packet(
    grid: &Grid,
    k: usize,
    center: (f64, f64),
    width: f64,
    angle: f64,
    phase: f64,
    target_h1: f64,
) -> Result<Field> {
    lpcalc::check_band(grid, k)?;
    let freq = (1u64 << k) as f64;
    let (d1, d2) = (angle.cos(), angle.sin());
    let raw = Field::from_fn(grid, |x1, x2| {
        let dx = wrap_offset(x1 - center.0, grid.length());
        let dy = wrap_offset(x2 - center.1, grid.length());
        let env = (-(dx * dx + dy * dy) / (2.0 * width * width)).exp();
        Complex64::new(env * (freq * (d1 * dx + d2 * dy) + phase).cos(), 0.0)
    });
    normalize_h1(lpcalc::project_band(&raw, k)?.to_real(), target_h1)
}

fn wrap_offset(d: f64, length: f64) -> f64 {
    let d = d.rem_euclid(length);
    if d > length / 2.0 {
        d - length
    } else {
        d
    }
}

/// Builds `b`, `c` from atoms times time profiles, sets `a = d_t b + c`, and
/// rescales all three by one common factor so the largest norm is `delta0`.
pub fn synthesize(
    grid: &Grid,
    time: TimeGrid,
    spec: &CoefficientSpec,
    delta0: f64,
    seed: u64,
) -> Result<CoefficientDecomposition> {
    if !(delta0 > 0.0) {
        return Err(Error::InvalidArgument(format!("delta0 must be > 0, got {delta0}")));
    }
    if spec.is_empty() {
        return Err(Error::Spec("coefficient spec has no terms".into()));
    }
    let base = spec.seed.unwrap_or(seed);
    let build = |terms: &[AtomTerm], offset: usize| -> Result<Vec<(TimeProfile, Field)>> {
        terms
            .iter()
            .enumerate()
            .map(|(i, term)| {
                let s = term.seed.unwrap_or_else(|| atom_seed(base, offset + i));
                Ok((term.profile, random_band_atom(grid, term.band, s, term.amplitude)?))
            })
            .collect()
    };
    let b_atoms = build(&spec.b, 0)?;
    let c_atoms = build(&spec.c, spec.b.len())?;

    let assemble = |atoms: &[(TimeProfile, Field)], derivative: bool| -> SpaceTimeField {
        let slices = time
            .times()
            .into_iter()
            .map(|t| {
                let mut acc = Field::zeros(grid, Space::Physical);
                for (profile, atom) in atoms {
                    let w = if derivative {
                        profile.derivative(t)
                    } else {
                        profile.value(t)
                    };
                    acc.axpy(w, atom);
                }
                acc
            })
            .collect();
        SpaceTimeField::new(time, slices).expect("consistent slices")
    };
    let b = assemble(&b_atoms, false);
    let b_dot = assemble(&b_atoms, true);
    let c = assemble(&c_atoms, false);
    let a = b_dot.add(&c)?;

    let raw = CoefficientDecomposition {
        a,
        b,
        b_dot,
        c,
        delta0,
    };
    let (a1, b2, c3) = coefficient_norms(&raw)?;
    let largest = a1.max(b2).max(c3);
    if largest == 0.0 {
        return Err(Error::Spec("coefficient spec produces zero data".into()));
    }
    let mut cd = raw.scaled(delta0 / largest);
    cd.delta0 = delta0;
    Ok(cd)
}

/// Forcing families used by the log-loss probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GKind {
    /// Unit space-time mass concentrated in a smooth bump of peak `lambda`.
    SpikeSweep,
    /// Random field with spectrum in `|xi| <= lambda`, unit space-time mass.
    BandLimited,
    /// The constant `lambda / (2 pi)^2`.
    Constant,
}

impl FromStr for GKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spike-sweep" => Ok(GKind::SpikeSweep),
            "band-limited" => Ok(GKind::BandLimited),
            "constant" => Ok(GKind::Constant),
            _ => Err(Error::InvalidArgument(format!("unknown forcing family {s:?}"))),
        }
    }
}

/// `exp(1 - 1/(1 - s^2))` on `|s| < 1`, peak 1 at the origin.
fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

/// Time node used as the spike center.
pub const SPIKE_TIME: f64 = 0.5;

pub fn g_family(grid: &Grid, time: TimeGrid, kind: GKind, lambda: f64, seed: u64) -> Result<SpaceTimeField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        GKind::Constant => {
            let shape = Field::constant(grid, lambda / grid.area());
            Ok(SpaceTimeField::separable(time, &shape, |_| 1.0))
        }
        GKind::BandLimited => {
            if !(lambda >= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "band radius must be >= 1, got {lambda}"
                )));
            }
            let raw = Field::from_values(
                grid,
                Space::Physical,
                (0..grid.len())
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), 0.0))
                    .collect(),
            )?;
            let shape = lpcalc::truncate_disk(&raw, lambda)?.to_real();
            let g = SpaceTimeField::separable(time, &shape, |t| (PI * t).sin().powi(2));
            let mass = norms::spacetime_l1(&g);
            Ok(g.scale(1.0 / mass))
        }
        GKind::SpikeSweep => {
            if !(lambda >= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "spike height must be >= 1, got {lambda}"
                )));
            }
            let n = grid.n();
            let center_idx = rng.gen_range(0..n) * n + rng.gen_range(0..n);
            let center = grid.point(center_idx);
            let t_center = time.time((SPIKE_TIME * time.steps() as f64).round() as usize);
            // Space and time widths both shrink like lambda^{-1/3}; the spatial
            // radius is then tuned so the discrete mass is exactly one.
            let scale = lambda.powf(-1.0 / 3.0);
            let r_t = (0.62 * scale).min(0.45);
            let time_profile: Vec<f64> = time
                .times()
                .into_iter()
                .map(|t| bump((t - t_center) / r_t))
                .collect();
            let time_mass = time.integrate(&time_profile);
            let spatial = |r: f64| {
                Field::from_fn(grid, |x1, x2| {
                    let d = grid.torus_distance((x1, x2), center);
                    Complex64::new(bump(d / r), 0.0)
                })
            };
            let mass_of = |r: f64| lambda * time_mass * norms::lp_norm(&spatial(r), 1.0).unwrap();
            let (mut lo, mut hi) = (grid.spacing() * 0.5, grid.length() / 2.0);
            if mass_of(lo) > 1.0 || mass_of(hi) < 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "spike of height {lambda} cannot carry unit mass on this grid"
                )));
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mass_of(mid) < 1.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let shape = spatial(0.5 * (lo + hi)).scale(lambda);
            let slices = time_profile.iter().map(|&w| shape.scale(w)).collect();
            SpaceTimeField::new(time, slices)
        }
    }
}

/// Smooth step `T` re-exported for profile construction in tests and tools.
pub fn transition(t: f64) -> f64 {
    smooth_step(t)
}
