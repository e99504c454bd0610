//! Differential elasticity feature maps and the texture-descriptor pipeline
//! built on them.
//!
//! The crate turns a single 3D scalar volume into per-voxel differential
//! affine invariants (E, F1, F2) derived from the gradient and Hessian,
//! suppresses and quantizes the fundamental invariant into a gray-level
//! map, extracts a 364-dimensional co-occurrence descriptor (13 directions
//! x 28 measures), and evaluates descriptors with a random-forest harness:
//! forward-step feature selection, repeated stratified two-fold
//! cross-validation, grid search over root power and gray levels, and
//! score t-tests. A phantom module generates analytic fields and affine
//! deformations so the invariance claims are directly testable.

pub mod classify;
pub mod derivatives;
pub mod error;
pub mod glcm;
pub mod invariants;
pub mod linalg;
pub mod phantom;
pub mod rng;
pub mod suppression;
pub mod volume;

pub use error::{Error, Result};
