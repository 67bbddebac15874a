//! Purity steering of dissipative two-level systems.
//!
//! A qubit under Lindblad dissipation is described on the Bloch ball by
//! `dq/dτ = b + Bq + u × q`. The region where purity can grow under some
//! control (the chimney) has a highest-purity point, the apogee. This crate
//! locates the apogee, computes time- and energy-minimal paths to it by a
//! Rayleigh-Ritz expansion, and validates them by forward simulation.

pub mod bloch;
pub mod chimney;
pub mod config;
pub mod error;
pub mod numerics;
pub mod reference;
pub mod report;
pub mod validation;
pub mod variational;

pub use error::{Error, Result};
