//! Numerical laboratory for optimal spectral partitions and their free boundaries.

pub mod analysis;
pub mod blowup;
pub mod config;
pub mod epiperimetric;
pub mod error;
pub mod field;
pub mod frequency;
pub mod geometry;
pub mod interface;
pub mod moduli;
pub mod par;
pub mod quadrature;
pub mod reference;
pub mod run;
pub mod solver;

pub use error::{Error, Result};
