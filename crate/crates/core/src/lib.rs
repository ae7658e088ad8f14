//! Noncentral elliptical shape distributions built on the polar
//! decomposition of a landmark configuration.

pub mod cli;
pub mod error;
pub mod geometry;
pub mod inference;
pub mod mc;
pub mod models;
pub mod quadrature;
pub mod special;
pub mod zonal;

pub use error::{Error, Result};
