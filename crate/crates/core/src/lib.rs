//! Staggered-grid finite-volume flow solver with embedded-boundary cut cells
//! and weighted state redistribution.

pub mod app;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod fluxes;
pub mod geometry;
pub mod grid;
pub mod physics;
pub mod timeint;
pub mod wsrd;

pub use error::{Error, Result};
