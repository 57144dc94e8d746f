//! Penalized B-spline scatterplot smoothing via mixed models.
//!
//! Two equivalent mixed-model transformations of the P-spline objective are
//! provided: a sparse one whose coefficient matrix is banded (bandwidth 4
//! for quadratic splines) so each REML likelihood evaluation costs O(m), and
//! the classic dense one kept as a correctness and scaling baseline. The
//! penalty parameter is chosen by golden-section search on the REML profile
//! log-likelihood.

pub mod band;
pub mod basis;
pub mod bench;
pub mod error;
pub mod optim;
pub mod penalty;
pub mod reml;
pub mod sim;
pub mod smoother;

pub use error::{Error, Result};
pub use reml::Transform;
