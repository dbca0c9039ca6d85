//! Trajectory thermodynamics of CPTP maps: invariant states, nonequilibrium
//! potentials, dual maps and fluctuation theorems checked by exact
//! enumeration and Monte Carlo unraveling.

pub mod error;
pub mod io;
pub mod library;
pub mod maps;
pub mod models;
pub mod numerics;
pub mod potential;
pub mod process;
pub mod tolerance;

pub use error::{Error, Result};
pub use maps::{DensityMatrix, KrausMap};
pub use numerics::{ComplexMatrix, C64};
pub use tolerance::Tolerances;
