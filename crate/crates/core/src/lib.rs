//! Road network graph extraction core.

pub mod cli;
pub mod codec;
pub mod complete;
pub mod connect;
pub mod denoise;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod io;
pub mod labels;
pub mod losses;
pub mod metrics;
pub mod raster;
pub mod synth;
pub mod tiling;

pub use error::{Error, Result};
pub use geometry::Point;
pub use graph::{merge_graphs, Extent, NodeId, RoadGraph};
