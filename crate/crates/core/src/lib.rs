//! Rotated bounding-ellipse localization toolkit.
//!
//! Ellipses are treated as 2D Gaussians whose unit Mahalanobis contour is the
//! ellipse boundary. On top of that correspondence the crate provides:
//!
//! - [`kl_loss`]: the closed-form KL divergence between a target and a
//!   proposal ellipse, its analytic gradient and the smoothed-L1 baseline.
//! - [`anchor_codec`]: anchor grids, anchor-relative encoding and assignment.
//! - [`raster_metrics`]: rasterized and Monte Carlo ellipse IoU, and NMS.
//! - [`detection_eval`]: detection matching, FROC curves and angle errors.
//! - [`synth`]: seeded synthetic scenes and a simulated detector.
//! - [`fit`]: gradient-descent fitting harness comparing the KL loss with
//!   the smoothed-L1 regression baseline.
//! - [`records`]: the JSON-lines record format used by the CLI.

pub mod anchor_codec;
pub mod detection_eval;
pub mod error;
pub mod fit;
pub mod geometry;
pub mod kl_loss;
pub mod raster_metrics;
pub mod records;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{BBox, Ellipse, Gaussian2D};
