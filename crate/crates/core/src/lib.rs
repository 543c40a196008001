//! Radial discretization and verification toolkit for the logarithmic
//! fractional Choquard equation and its power-kernel approximations.

pub mod config;
pub mod constants;
pub mod energy;
pub mod error;
pub mod kernels;
pub mod montecarlo;
pub mod mountain_pass;
pub mod nonlinearity;
pub mod pipeline;
pub mod poisson;
pub mod quadrature;
pub mod radial;
pub mod report;
pub mod seminorm;
pub mod special;

pub use error::{Error, Result};
