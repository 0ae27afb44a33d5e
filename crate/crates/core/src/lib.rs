//! Nested "wells-in-wells" circle potential and the exact single-bond Gibbs
//! measure it induces, evaluated entirely in the log domain.
//!
//! The potential is a sum of two step potentials on the circle: ferromagnetic
//! wells centered at bond angle 0 (even indices) and antiferromagnetic wells
//! centered at π (odd indices). Well `n` has half-width `ε^(3^n)` and the
//! cumulative depth `1/2 − 2^-(n+1)`. Lowering the temperature moves the most
//! probable bond well to ever deeper indices, so the dominant character
//! alternates between ferromagnetic and antiferromagnetic.
//!
//! Modules:
//! - [`potential`]: model parameters, the well ledger, potential evaluation.
//! - [`bond`]: region weights, bond distributions, schedules, exact sampling.
//! - [`asymptotics`]: the separated-wells free energy and its closed forms.
//! - [`lattice`]: Metropolis–Hastings on 1D chains and 2D tori.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod asymptotics;
pub mod bond;
mod error;
pub mod lattice;
pub mod logmath;
pub mod potential;

pub use error::{Error, Result};
pub use potential::{Character, Mode, ModelParams, Well, WellLedger};

/// 2π.
pub const TAU: f64 = core::f64::consts::TAU;
/// π.
pub const PI: f64 = core::f64::consts::PI;
