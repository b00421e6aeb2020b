//! Simulation and verification lab for the Bouchaud trap model on the
//! integers with slowly varying trap tails.
//!
//! * [`landscape`]: tail families, exact trap sampling, localisation frames.
//! * [`walker`]: exact path simulation, simple-random-walk excursions.
//! * [`pmf`]: uniformization oracle for the transient law.
//! * [`extremes`]: extremal and sum processes of slowly varying sequences.
//! * [`experiments`]: seeded, parallel scenario runners and their outputs.

pub mod error;
pub mod experiments;
pub mod extremes;
pub mod walker;
pub mod landscape;
pub mod pmf;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
