//! Local bifurcation analysis of planar cubic Lotka-Volterra systems
//! `x' = x (mu1 + ...)`, `y' = y (mu2 + ...)` near the origin of the parameter disk.

pub mod bifurcation;
pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod fixtures;
pub mod model;
pub mod oracle;
pub mod poly;
pub mod regions;

pub use error::{Error, Result};
