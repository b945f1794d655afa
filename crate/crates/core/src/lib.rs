//! Porting square (GIS) rasters to hexagonal rasters.
//!
//! The pipeline builds a piecewise-bicubic extension of the square raster's
//! cell-center values (ENO or outlier-filtering stencil selection, with
//! Catmull-Rom and identity baselines), samples it at hexagon centers, and
//! measures the porting error. A hexagonal cellular automaton routes water
//! over the ported terrain.

pub mod error;
pub mod grid_io;
pub mod hydroflow;
pub mod hexgrid;
pub mod interp1d;
pub mod interp2d;
pub mod metrics;
pub mod porting;

pub use error::{Error, Result};
