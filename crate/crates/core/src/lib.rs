//! Signal-fraction analysis of inter-lane vehicle-to-vehicle links.
//!
//! Vehicles on each of two parallel lanes follow a type-II Matérn hard-core
//! process whose hard-core distance is vehicle length plus safety distance.
//! The crate provides
//!
//! * samplers and closed-form densities for the lanes ([`hardcore_process`]),
//! * the two-lane field, nearest-vehicle association and serving-distance laws
//!   ([`lane_geometry`]),
//! * analytic coverage and signal-fraction CCDFs with their approximations
//!   ([`link_analysis`]),
//! * a seeded, worker-count-independent Monte Carlo simulator ([`monte_carlo`]),
//! * named experiments and config-driven sweeps writing CSV ([`experiments`]).

pub mod error;
pub mod experiments;
pub mod hardcore_process;
pub mod lane_geometry;
pub mod link_analysis;
pub mod monte_carlo;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
