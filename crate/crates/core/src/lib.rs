//! Simulation and verification laboratory for planted community-detection
//! models: the planted random energy model (PREM) and the two-community
//! weighted stochastic block model on graphs (WSBM) and `h`-uniform
//! hypergraphs (HWSBM).
//!
//! The crate samples instances, decodes them with exact maximum-likelihood
//! estimators, evaluates the closed-form recovery thresholds, builds the
//! independent-coverage groups that reduce a (hyper)graph instance to an
//! energy-model instance, and runs seeded Monte Carlo experiments against
//! all of the above.

pub mod config;
pub mod coverage;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod output;
pub mod model;
pub mod rng;
pub mod subset;
pub mod thresholds;

pub use error::{Error, Result};
pub use model::{sample_instance, scale_parameters, solution_weight, Family, Instance, ModelSpec, ScaledParams};
pub use subset::SubsetCodec;
