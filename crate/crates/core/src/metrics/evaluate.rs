use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diffcore::Real;
use crate::error::{Error, Result};
use crate::render::{render, ImageFormation};
use crate::volume::{sample_view, ViewDirection, VoxelGrid};

use super::{chamfer_weighted, dssim, iou, rmse, Chamfer, DEFAULT_IOU_THRESHOLD, DEFAULT_OCCUPANCY_CUTOFF};

/// Re-rendered views per evaluated sample.
pub const EVAL_VIEWS: usize = 10;

/// Metrics for one reconstruction against its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleEval {
    pub view_seed: u64,
    pub dssim_per_view: Vec<f64>,
    /// Mean of `dssim_per_view`.
    pub dssim: f64,
    pub rmse: f64,
    pub iou: f64,
    pub chamfer: Chamfer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub formation: ImageFormation,
    pub samples: Vec<SampleEval>,
}

/// The `EVAL_VIEWS` views drawn from `seed`.
pub fn eval_views(seed: u64) -> Vec<ViewDirection> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..EVAL_VIEWS).map(|_| sample_view(&mut rng)).collect()
}

/// Binarization threshold for IoU and occupancy cutoff for chamfer points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub iou_threshold: f64,
    pub occupancy_cutoff: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            iou_threshold: DEFAULT_IOU_THRESHOLD,
            occupancy_cutoff: DEFAULT_OCCUPANCY_CUTOFF,
        }
    }
}

/// Compares `recon` with `truth`: mean DSSIM over `EVAL_VIEWS` seeded views
/// rendered with `formation`, plus RMSE, IoU at 0.5 and the weighted
/// chamfer distance with the reconstruction as `T` and the truth as `O`.
pub fn evaluate<T: Real>(
    recon: &VoxelGrid<T>,
    truth: &VoxelGrid<T>,
    formation: ImageFormation,
    view_seed: u64,
) -> Result<SampleEval> {
    evaluate_with(recon, truth, formation, view_seed, EvalOptions::default())
}

/// [`evaluate`] with explicit thresholds.
pub fn evaluate_with<T: Real>(
    recon: &VoxelGrid<T>,
    truth: &VoxelGrid<T>,
    formation: ImageFormation,
    view_seed: u64,
    options: EvalOptions,
) -> Result<SampleEval> {
    if recon.array().dims() != truth.array().dims() {
        return Err(Error::Shape(format!(
            "evaluate {:?} against {:?}",
            recon.array().dims(),
            truth.array().dims()
        )));
    }
    let mut dssim_per_view = Vec::with_capacity(EVAL_VIEWS);
    for view in eval_views(view_seed) {
        let a = render(&view, recon, formation)?.clamped();
        let b = render(&view, truth, formation)?.clamped();
        dssim_per_view.push(dssim(&a, &b)?);
    }
    Ok(SampleEval {
        view_seed,
        dssim: mean(&dssim_per_view),
        dssim_per_view,
        rmse: rmse(recon, truth)?,
        iou: iou(recon, truth, options.iou_threshold)?,
        chamfer: chamfer_weighted(recon, truth, options.occupancy_cutoff)?,
    })
}

/// Evaluates each `(recon, truth)` pair with seeds `base_seed + index`.
pub fn evaluate_many<T: Real>(
    pairs: &[(VoxelGrid<T>, VoxelGrid<T>)],
    formation: ImageFormation,
    base_seed: u64,
) -> Result<EvalReport> {
    let samples = pairs
        .iter()
        .enumerate()
        .map(|(i, (r, t))| evaluate(r, t, formation, base_seed.wrapping_add(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport { formation, samples })
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

impl EvalReport {
    pub fn mean_dssim(&self) -> f64 {
        mean(&self.samples.iter().map(|s| s.dssim).collect::<Vec<_>>())
    }

    pub fn mean_rmse(&self) -> f64 {
        mean(&self.samples.iter().map(|s| s.rmse).collect::<Vec<_>>())
    }

    pub fn mean_iou(&self) -> f64 {
        mean(&self.samples.iter().map(|s| s.iou).collect::<Vec<_>>())
    }

    /// Infinite as soon as one sample has an empty target.
    pub fn mean_chamfer(&self) -> Chamfer {
        if self.samples.iter().any(|s| s.chamfer == Chamfer::EmptyTarget) {
            Chamfer::EmptyTarget
        } else {
            Chamfer::Distance(mean(
                &self.samples.iter().map(|s| s.chamfer.value()).collect::<Vec<_>>(),
            ))
        }
    }

    /// One row per sample plus a trailing `mean` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample,view_seed,formation,dssim,rmse,iou,chamfer\n");
        for (i, s) in self.samples.iter().enumerate() {
            let _ = writeln!(
                out,
                "{i},{},{},{},{},{},{}",
                s.view_seed, self.formation, s.dssim, s.rmse, s.iou, s.chamfer
            );
        }
        let _ = writeln!(
            out,
            "mean,,{},{},{},{},{}",
            self.formation,
            self.mean_dssim(),
            self.mean_rmse(),
            self.mean_iou(),
            self.mean_chamfer()
        );
        out
    }

    pub fn summary(&self) -> String {
        let seeds: Vec<String> = self.samples.iter().map(|s| s.view_seed.to_string()).collect();
        format!(
            "samples: {}\nformation: {}\nviews per sample: {EVAL_VIEWS}\nview seeds: {}\n\
             DSSIM: {:.6}\nRMSE: {:.6}\nIoU@{DEFAULT_IOU_THRESHOLD}: {:.6}\nCD: {}\n",
            self.samples.len(),
            self.formation,
            seeds.join(" "),
            self.mean_dssim(),
            self.mean_rmse(),
            self.mean_iou(),
            self.mean_chamfer()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_reconstruction() {
        let g = VoxelGrid::<f64>::from_fn(1, 8, |_, z, y, x| {
            let c = |i: usize| i as f64 - 3.5;
            if c(x).powi(2) + c(y).powi(2) + c(z).powi(2) < 9.0 { 1.0 } else { 0.0 }
        });
        let s = evaluate(&g, &g, ImageFormation::AO, 5).unwrap();
        assert_eq!(s.dssim_per_view.len(), EVAL_VIEWS);
        assert!(s.dssim.abs() < 1e-12);
        assert_eq!(s.rmse, 0.0);
        assert_eq!(s.iou, 1.0);
        assert_eq!(s.chamfer, Chamfer::Distance(0.0));
    }
}
