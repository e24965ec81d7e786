//! Calderon-Zygmund multipliers on the frequency lattice.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Space};
use crate::lpcalc::{self, BumpProfile};

/// Largest admissible constant in the discrete symbol-regularity check.
pub const REGULARITY_LIMIT: f64 = 100.0;

/// Highest order of lattice differences used by the regularity check.
pub const REGULARITY_ORDER: usize = 4;

/// Built-in symbols, or an explicit table of lattice samples.
#[derive(Debug, Clone)]
pub enum SymbolSpec {
    Identity,
    /// `xi_i xi_j / |xi|^2`, zero at the origin.
    Riesz(usize, usize),
    /// `xi_i xi_j / (1 + |xi|^2)`.
    SmoothedRiesz(usize, usize),
    /// Spectral-space samples in FFT order.
    Table(Field),
}

impl fmt::Display for SymbolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolSpec::Identity => write!(f, "identity"),
            SymbolSpec::Riesz(i, j) => write!(f, "riesz({i},{j})"),
            SymbolSpec::SmoothedRiesz(i, j) => write!(f, "smoothed_riesz({i},{j})"),
            SymbolSpec::Table(_) => write!(f, "table"),
        }
    }
}

impl FromStr for SymbolSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if s == "identity" {
            return Ok(SymbolSpec::Identity);
        }
        let parse_pair = |body: &str| -> Result<(usize, usize)> {
            let inner = body
                .strip_prefix('(')
                .and_then(|b| b.strip_suffix(')'))
                .ok_or_else(|| Error::InvalidArgument(format!("bad operator spec {s:?}")))?;
            let mut it = inner.split(',').map(|p| p.parse::<usize>());
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(i)), Some(Ok(j)), None) if (1..=2).contains(&i) && (1..=2).contains(&j) => {
                    Ok((i, j))
                }
                _ => Err(Error::InvalidArgument(format!(
                    "operator indices must be 1 or 2 in {s:?}"
                ))),
            }
        };
        if let Some(rest) = s.strip_prefix("smoothed_riesz") {
            let (i, j) = parse_pair(rest)?;
            Ok(SymbolSpec::SmoothedRiesz(i, j))
        } else if let Some(rest) = s.strip_prefix("riesz") {
            let (i, j) = parse_pair(rest)?;
            Ok(SymbolSpec::Riesz(i, j))
        } else {
            Err(Error::InvalidArgument(format!("unknown operator {s:?}")))
        }
    }
}

/// Frequency window attached to a localized multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Window {
    Band(usize),
    AtOrAbove(usize),
    Below(usize),
}

impl Window {
    pub fn weight(&self, r: f64) -> f64 {
        match *self {
            Window::Band(k) => BumpProfile.band(k, r),
            Window::AtOrAbove(k) => BumpProfile.at_or_above(k, r),
            Window::Below(k) => BumpProfile.below(k, r),
        }
    }

    fn check(&self, grid: &Grid) -> Result<()> {
        let (k, limit) = match *self {
            Window::Band(k) => (k, grid.k_max()),
            Window::AtOrAbove(k) | Window::Below(k) => (k, grid.k_max() + 1),
        };
        if k > limit {
            return Err(Error::BandOutOfRange {
                k: k as i64,
                k_max: grid.k_max(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Multiplier {
    grid: Grid,
    symbol: Vec<Complex64>,
    symbol_bound: f64,
    localization: Option<Window>,
    label: String,
}

fn component(xi: (f64, f64), i: usize) -> f64 {
    if i == 1 {
        xi.0
    } else {
        xi.1
    }
}

impl Multiplier {
    /// Builds a multiplier and validates its symbol regularity.
    pub fn new(grid: &Grid, spec: &SymbolSpec) -> Result<Self> {
        let symbol: Vec<Complex64> = match spec {
            SymbolSpec::Identity => vec![Complex64::new(1.0, 0.0); grid.len()],
            SymbolSpec::Riesz(i, j) => (0..grid.len())
                .map(|idx| {
                    let xi = grid.wavevector(idx);
                    let r2 = xi.0 * xi.0 + xi.1 * xi.1;
                    let m = if r2 == 0.0 {
                        0.0
                    } else {
                        component(xi, *i) * component(xi, *j) / r2
                    };
                    Complex64::new(m, 0.0)
                })
                .collect(),
            SymbolSpec::SmoothedRiesz(i, j) => (0..grid.len())
                .map(|idx| {
                    let xi = grid.wavevector(idx);
                    let r2 = xi.0 * xi.0 + xi.1 * xi.1;
                    Complex64::new(component(xi, *i) * component(xi, *j) / (1.0 + r2), 0.0)
                })
                .collect(),
            SymbolSpec::Table(table) => {
                table.require_space(Space::Spectral)?;
                if table.grid() != grid {
                    return Err(Error::InvalidArgument(format!(
                        "symbol table has {} points per axis, grid has {}",
                        table.grid().n(),
                        grid.n()
                    )));
                }
                if !table.is_finite() {
                    return Err(Error::InvalidArgument("symbol table is not finite".into()));
                }
                table.values().to_vec()
            }
        };
        let constant = regularity_constant(grid, &symbol);
        if constant > REGULARITY_LIMIT {
            return Err(Error::Regularity {
                constant,
                limit: REGULARITY_LIMIT,
            });
        }
        Ok(Multiplier {
            grid: grid.clone(),
            symbol,
            symbol_bound: constant,
            localization: None,
            label: spec.to_string(),
        })
    }

    pub fn parse(grid: &Grid, spec: &str) -> Result<Self> {
        Self::new(grid, &spec.parse()?)
    }

    pub fn identity(grid: &Grid) -> Self {
        Self::new(grid, &SymbolSpec::Identity).expect("identity symbol is regular")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn symbol(&self) -> &[Complex64] {
        &self.symbol
    }

    /// Symbol value at signed integer frequency `(q1, q2)`.
    pub fn symbol_at(&self, q1: i64, q2: i64) -> Complex64 {
        self.symbol[self.grid.index_of(q1) * self.grid.n() + self.grid.index_of(q2)]
    }

    pub fn symbol_bound(&self) -> f64 {
        self.symbol_bound
    }

    pub fn localization(&self) -> Option<Window> {
        self.localization
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Spectral samples of the symbol, usable as a table spec.
    pub fn symbol_field(&self) -> Field {
        Field::from_values(&self.grid, Space::Spectral, self.symbol.clone())
            .expect("symbol is finite")
    }

    fn derived(&self, symbol: Vec<Complex64>, localization: Option<Window>, label: String) -> Self {
        let symbol_bound = regularity_constant(&self.grid, &symbol);
        Multiplier {
            grid: self.grid.clone(),
            symbol,
            symbol_bound,
            localization,
            label,
        }
    }

    /// Multiplies the spectrum of `f` by the symbol.
    pub fn apply(&self, f: &Field) -> Result<Field> {
        f.require_space(Space::Physical)?;
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        self.apply_spectral(&f.forward()?).inverse()
    }

    pub fn apply_spectral(&self, spectral: &Field) -> Field {
        let values = spectral
            .values()
            .iter()
            .zip(&self.symbol)
            .map(|(&v, &m)| v * m)
            .collect();
        spectral.with_values(Space::Spectral, values)
    }

    /// The multiplier with symbol `m^n`.
    pub fn power(&self, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "power must be at least 1; use the identity operator".into(),
            ));
        }
        if self.localization.is_some() {
            return Err(Error::InvalidArgument(
                "powers are taken of unlocalized operators".into(),
            ));
        }
        let symbol = self.symbol.iter().map(|m| m.powu(n)).collect();
        Ok(self.derived(symbol, None, format!("{}^{n}", self.label)))
    }

    /// `P_J M` for the window `J`.
    pub fn localize(&self, window: Window) -> Result<Self> {
        window.check(&self.grid)?;
        if self.localization.is_some() {
            return Err(Error::InvalidArgument("operator is already localized".into()));
        }
        let symbol = self
            .symbol
            .iter()
            .enumerate()
            .map(|(idx, &m)| m * window.weight(self.grid.abs_wavevector(idx)))
            .collect();
        Ok(self.derived(symbol, Some(window), format!("{}|{window:?}", self.label)))
    }

    /// Convolution kernel `K` with `Mf = integral K(x - y) f(y) dy`.
    pub fn kernel(&self) -> Field {
        let scale = 1.0 / self.grid.length();
        let spectral = Field::from_values(
            &self.grid,
            Space::Spectral,
            self.symbol.iter().map(|&m| m * scale).collect(),
        )
        .expect("symbol is finite");
        spectral.inverse().expect("spectral input")
    }
}

/// Applies `M` to a physical field.
pub fn apply(m: &Multiplier, f: &Field) -> Result<Field> {
    m.apply(f)
}

/// `[(M^n)_{>=k}, a_k] f = (M^n)_{>=k}(a_k f) - a_k (M^n)_{>=k} f`.
///
/// `high` must be localized at or above `k` and `a_k` spectrally supported in
/// band `k`.
pub fn commutator_apply(high: &Multiplier, a_k: &Field, f: &Field) -> Result<Field> {
    let k = match high.localization() {
        Some(Window::AtOrAbove(k)) => k,
        other => {
            return Err(Error::InvalidArgument(format!(
                "commutator needs an operator localized at or above a band, got {other:?}"
            )))
        }
    };
    if k <= high.grid().k_max() {
        let leak = lpcalc::band_leakage(a_k, k)?;
        if leak > 1e-12 {
            return Err(Error::SupportViolation { k, leak });
        }
    }
    let left = high.apply(&a_k.mul(f)?)?;
    let right = a_k.mul(&high.apply(f)?)?;
    left.sub(&right)
}

const STENCILS: [&[(i64, f64)]; REGULARITY_ORDER + 1] = [
    &[(0, 1.0)],
    &[(-1, -0.5), (1, 0.5)],
    &[(-1, 1.0), (0, -2.0), (1, 1.0)],
    &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
    &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
];

fn half_width(order: usize) -> i64 {
    order.div_ceil(2) as i64
}

/// Smallest `c` with `|Delta^alpha m(xi)| <= c (1 + d(xi))^{-|alpha|}` over
/// `|alpha| <= 4`, where `Delta^alpha` are centered lattice differences and
/// `d(xi)` is the distance from the origin to the stencil footprint.
/// Stencils that would wrap across the Nyquist edge are skipped.
pub fn regularity_constant(grid: &Grid, symbol: &[Complex64]) -> f64 {
    let n = grid.n() as i64;
    let dxi = 2.0 * std::f64::consts::PI / grid.length();
    let lo = -n / 2;
    let hi = n / 2 - 1;
    let at = |q1: i64, q2: i64| symbol[grid.index_of(q1) * grid.n() + grid.index_of(q2)];
    let mut best: f64 = 0.0;
    for total in 0..=REGULARITY_ORDER {
        for a1 in 0..=total {
            let a2 = total - a1;
            let (h1, h2) = (half_width(a1), half_width(a2));
            let norm = dxi.powi(total as i32);
            for q1 in (lo + h1)..=(hi - h1) {
                for q2 in (lo + h2)..=(hi - h2) {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for &(o1, w1) in STENCILS[a1] {
                        for &(o2, w2) in STENCILS[a2] {
                            acc += at(q1 + o1, q2 + o2) * (w1 * w2);
                        }
                    }
                    let d1 = ((q1.abs() - h1).max(0)) as f64 * dxi;
                    let d2 = ((q2.abs() - h2).max(0)) as f64 * dxi;
                    let weight = (1.0 + d1.hypot(d2)).powi(total as i32);
                    best = best.max(acc.norm() / norm * weight);
                }
            }
        }
    }
    best
}
