//! Voxel grids, images, view directions and the differentiable rotation
//! with trilinear resampling that carries a world-space grid into a camera
//! frame.

mod grid;
pub mod pvox;
mod resample;
mod view;

pub use grid::{Image, VoxelGrid};
pub use resample::{resample_by, resample_map, rotate_resample, rotate_resample_var};
pub use view::{rotation_from_view, sample_view, Rotation, ViewDirection};
