//! Command-line experiments for the nested-well rotor model: exact bond
//! distributions, temperature schedules, lattice Monte Carlo and the
//! acceptance suite.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod error;
pub mod oracle;
pub mod output;
