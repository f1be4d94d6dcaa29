//! Sobolev extension across outward cusps and picks by reflection, with
//! distortion integrals, extension checks and Neumann eigenvalue tools.

pub mod error;
pub mod extension;
pub mod distortion;
pub mod eigen;
pub mod geometry;
pub mod maps;
pub mod parse;
pub mod quadrature;

pub use error::{Error, Result};
