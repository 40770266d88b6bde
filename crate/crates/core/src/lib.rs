//! Numerical verification of rigged null hypersurfaces in flat
//! semi-Euclidean space.
//!
//! Hypersurfaces are Monge graphs `x^0 = F(u)` in `R^{n+1}_q`. Every
//! geometric object is produced as an exact order-3 jet in the chart
//! parameters, and the relations between them are evaluated as residuals on
//! sampled points. A finite-difference oracle provides an independent check of
//! the differentiated quantities.

pub mod ambient;
pub mod assoc_metric;
pub mod cli_report;
pub mod curvature;
pub mod error;
pub mod jet_algebra;
pub mod linalg;
pub mod monge_chart;
pub mod oracle_fd;
pub mod rigged_geometry;

pub use error::{Error, Result};
