//! Radial Laguerre-Gauss superposition tweezers.
//!
//! Paraxial LG fields and their planar-mirror standing waves, phase-only SLM
//! encoding, Debye-Wolf vector focusing, trap metrics, and a Monte Carlo model
//! of atom delivery into surface fringe traps.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod debye;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod paraxial;
pub mod slm;
pub mod special;
pub mod transport;

pub use error::{Error, Result};
pub use grid::{ComplexVectorGrid, GridSpec, ScalarGrid};
pub use paraxial::{LgSuperposition, LgTerm, ReflectorModel};
