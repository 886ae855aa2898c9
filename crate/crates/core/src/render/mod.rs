//! Rendering layers: parameter-free, differentiable maps from a voxel grid
//! to an image.
//!
//! A grid is first rotated into the camera frame of a view (see
//! [`crate::volume::rotate_resample_var`]); the projection then reduces each
//! depth column `v_1..v_nz` (index 1 nearest the camera, array axis 1) to a
//! pixel.

mod formation;
mod layers;

pub use formation::{FormationMode, ImageFormation, ScanKind, LOG_DOMAIN_FLOOR};
pub use layers::{
    project, project_ea, project_ao, project_var, project_vh, render, render_var,
};
