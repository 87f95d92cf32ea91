//! Vertex orderings for undirected connected spatial graphs and local
//! measures of how well an ordering preserves spatial and topological
//! locality.

pub mod artifacts;
pub mod eigen;
pub mod error;
pub mod graph;
pub mod metrics;
pub mod ordering;
pub mod orderings;
pub mod reporting;
pub mod synthetic;

pub use error::{Error, Result};
pub use graph::{GraphBuilder, GraphFormat, UcsGraph};
pub use metrics::{BallMode, MetricKind, MetricSeries};
pub use ordering::{Embedding1D, Method, Ordering};
