//! Synthetic chest radiographs with simulated catheters and pixel-accurate
//! label maps, plus the metrics used to score catheter segmentations.
//!
//! The pipeline: [`profile`] projects a tube cross-section into a 1D brush,
//! [`spline`] generates random catheter paths, [`raster`] sweeps the brush
//! along them, [`compose`] blends the result with text onto a background
//! and builds the label map, [`augment`] applies training-time geometry,
//! and [`metrics`] scores predicted likelihood maps. [`dataset`] wires it
//! all to files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augment;
pub mod compose;
pub mod dataset;
pub mod error;
pub mod geom;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod preprocess;
pub mod profile;
pub mod raster;
pub mod spline;

pub use compose::{Class, LabelMap, LabeledPair};
pub use error::{Error, Result};
pub use geom::Point2;
pub use grid::{Grid, Image};
