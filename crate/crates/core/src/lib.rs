//! Pareto front identification for linear bandits.
//!
//! The crate provides the context geometry ([`contexts`]), reward
//! environments ([`environments`]), the estimation pipeline
//! ([`estimators`]), ground-truth Pareto machinery ([`pareto`]), the PFIwR
//! algorithm ([`pfiwr`]), a multi-armed baseline ([`multipfi`]) and an
//! experiment harness ([`harness`]).

pub mod contexts;
pub mod environments;
pub mod error;
pub mod estimators;
pub mod kmeans;
pub mod multipfi;
pub mod pareto;
pub mod pfiwr;
pub mod rng;
pub mod harness;
