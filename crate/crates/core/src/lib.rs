//! Sparse-anchor raster-to-SVG reconstruction.
//!
//! A component raster is turned into an anchor field whose peaks mark path
//! anchors, the field is resolved into an ordered cubic Bézier path, handles
//! are pulled toward the ink boundary, and render feedback refines the field
//! when the result misses structure. [`pipeline`] runs this per color region
//! of a full image and assembles an SVG.

pub mod config;
pub mod error;
pub mod field;
pub mod fit;
pub mod geom;
pub mod harness;
pub mod pipeline;
pub mod raster;
pub mod refine;
pub mod render;
pub mod resolver;
pub mod svg;

pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use geom::Point;
