//! Differentiable volume rendering and adversarial single-image 3D
//! reconstruction.
//!
//! A generator produces a voxel grid, a rendering layer rotates it into a
//! sampled camera frame and projects it to an image, and a 2D discriminator
//! judges those projections against an unstructured image collection. All
//! rendering layers carry exact reverse-mode gradients through the small
//! tape in [`diffcore`].
//!
//! Module map:
//!
//! - [`diffcore`]: dense arrays, the gradient tape and its primitives.
//! - [`volume`]: voxel grids, images, view directions and differentiable
//!   rotation with trilinear resampling.
//! - [`render`]: visual hull, absorption-only and emission-absorption
//!   image formation.
//! - [`networks`]: encoder, generator and discriminator.
//! - [`training`]: losses, the adversarial update step and the training loop.
//! - [`metrics`]: SSIM/DSSIM, RMSE, IoU and weighted directional chamfer.
//! - [`data`]: PNG/PVOX persistence and the synthetic shape dataset.
//! - [`gradsuite`]: finite-difference checks of the whole pipeline.
//! - [`cli`]: the `platonic` command-line front end.

pub mod cli;
pub mod data;
pub mod diffcore;
pub mod error;
pub mod gradsuite;
pub mod metrics;
pub mod networks;
pub mod render;
pub mod training;
pub mod volume;

pub use error::{Error, Result};
