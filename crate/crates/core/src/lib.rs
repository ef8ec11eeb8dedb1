#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

//! Core models for a micropump-driven heavy-metal nanosensor.
//!
//! The device senses dissolved metal ions through a shared cell-surface
//! receptor and signals a binary decision about the target concentration:
//!
//! * [`kinetics`] — continuous-time Markov model of the receptor binding
//!   competing ligand species, exact stochastic dwell-time simulation, and
//!   the dwell-time likelihood.
//! * [`estimator`] — method-of-moments recovery of ligand concentration
//!   ratios from dwell times counted into duration bins.
//! * [`detection`] — population sampling around the estimator, moments of
//!   the estimated ratio under each transmitted bit, the optimal decision
//!   threshold, and the bit error probability.
//! * [`release`] — pump-driven advection plus Brownian motion of cargo
//!   particles through the outlet channel, analytic and simulated release
//!   times, and the generalized pump flow model.
//! * [`energy`] — pressure loss across the pump channel and the energy the
//!   pump spends against it over time.
//! * [`capacity`] — geometric cargo capacity of the cylindrical reservoir.
//! * [`params`] — the default scenario (physical constants, element table,
//!   kinetic rates, geometry) and the key/value overrides it accepts.
//!
//! The crate is `no_std`-compatible (with `alloc`); the companion CLI crate
//! adds file IO, CSV emission, and parallel sweeps.

extern crate alloc;

pub mod capacity;
pub mod detection;
pub mod energy;
pub mod estimator;
pub mod kinetics;
pub mod params;
pub mod release;
pub mod rng;
pub mod stats;
pub mod units;

use alloc::string::String;

/// Error type shared by all model construction and evaluation paths.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain a formula is defined on.
    #[error("domain error: {0}")]
    Domain(String),
    /// A scenario or configuration value is invalid or inconsistent.
    #[error("config error: {0}")]
    Config(String),
    /// A numeric procedure failed (singular solve, divergence, overflow).
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Interval scheme cannot be built (duplicate or non-positive rates).
    #[error("degenerate interval scheme: {0}")]
    DegenerateScheme(String),
    /// Interval scheme is too ill-conditioned to invert reliably.
    #[error("interval scheme condition number {cond:.3e} exceeds limit {limit:.1e}")]
    IllConditioned { cond: f64, limit: f64 },
    /// Detection moments do not define a usable threshold.
    #[error("detection setup error: {0}")]
    DetectionSetup(String),
    /// Transport can never carry a particle across the channel.
    #[error("release never completes: {0}")]
    NeverReleases(String),
}

pub type Result<T> = core::result::Result<T, Error>;
