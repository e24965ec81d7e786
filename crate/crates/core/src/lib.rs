//! Pseudospectral Littlewood-Paley toolkit for the transport equation
//! `d_t u - a(t, x) M u = g` on the periodic square, together with a harness
//! that measures the constants in the associated estimates.

pub mod coeff;
pub mod czop;
pub mod dump;
pub mod error;
pub mod grid;
pub mod lpcalc;
pub mod norms;
pub mod solver;
pub mod spacetime;
pub mod verify;

pub use coeff::CoefficientDecomposition;
pub use czop::{Multiplier, SymbolSpec, Window};
pub use error::{Error, Result};
pub use grid::{Field, Grid, Space};
pub use spacetime::{SpaceTimeField, TimeGrid};
