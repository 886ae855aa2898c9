//! 2D and 3D reconstruction metrics.

mod chamfer;
mod evaluate;
mod ssim;
mod voxel;

pub use chamfer::{chamfer_weighted, Chamfer, DEFAULT_OCCUPANCY_CUTOFF};
pub use evaluate::{eval_views, evaluate, evaluate_many, evaluate_with, EvalOptions, EvalReport, SampleEval, EVAL_VIEWS};
pub use ssim::{dssim, gaussian_window, ssim, SSIM_K1, SSIM_K2, SSIM_SIGMA, SSIM_WINDOW};
pub use voxel::{density_channel, iou, rmse, DEFAULT_IOU_THRESHOLD};
