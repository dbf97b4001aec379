//! Simulation and verification engine for the reduced m-equivariant twisted
//! Ericksen–Leslie system: radial director/fluid evolution, modulation
//! tracking of the collapsing harmonic bubble, and numerical checks of the
//! energy, coercivity and decay estimates.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod grid;
mod interp;
mod linalg;
pub mod gauge;
pub mod modulation;
pub mod profiles;
pub mod runner;

pub use error::{Error, Result};
pub use grid::{Grading, RadialGrid};
pub use profiles::{EquivariantState, ModelParams};
