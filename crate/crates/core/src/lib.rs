pub mod error;
pub mod grid;
pub mod io;
pub mod mtf;
pub mod quadrature;
pub mod sfr;
pub mod system;
pub mod wavefront;
pub mod zernike;

pub use error::{Error, ErrorCategory, Result};
pub use grid::{DiskGrid, GridMap, ScalarMap, WavefrontMap};
