use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metrics::{evaluate_many, EvalReport};
use crate::networks::{checkpoint, Networks};
use crate::volume::{Image, ViewDirection, VoxelGrid};

use super::{element_losses, train_step, StepReport, TrainConfig, Trainer};

/// Column names of the step log.
pub const LOG_HEADER: &str = "step,c_dis,c_gen,c_rec,grad_norm_dis,grad_norm_gen,diverged";

/// Images used to track reconstruction loss before and after training.
const PROBE_IMAGES: usize = 16;

/// A held-out image with its ground-truth volume in the image's camera frame.
#[derive(Debug, Clone)]
pub struct HeldOut {
    pub image: Image<f32>,
    pub truth: VoxelGrid<f32>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub nets: Networks<f32>,
    pub log: Vec<StepReport>,
    /// Mean reconstruction loss over a fixed probe subset of the training
    /// images, before the first and after the last step.
    pub probe_c_rec_initial: f64,
    pub probe_c_rec_final: f64,
    pub held_out: Option<EvalReport>,
    /// Checkpoint files written, in step order.
    pub checkpoints: Vec<PathBuf>,
}

pub fn checkpoint_name(step: usize) -> String {
    format!("step_{step:06}.pnet")
}

fn probe_c_rec(nets: &Networks<f32>, images: &[Image<f32>], config: &TrainConfig) -> Result<f64> {
    let probe = &images[..images.len().min(PROBE_IMAGES)];
    let canonical = ViewDirection::canonical();
    let mut total = 0.0;
    for image in probe {
        total += element_losses(nets, image, &canonical, config)?.c_rec;
    }
    Ok(total / probe.len() as f64)
}

fn log_line(r: &StepReport, with_time: bool) -> String {
    let mut s = format!(
        "{},{},{},{},{},{},{}",
        r.step, r.c_dis, r.c_gen, r.c_rec, r.grad_norm_dis, r.grad_norm_gen, r.diverged as u8
    );
    if with_time {
        let _ = write!(s, ",{}", r.seconds);
    }
    s
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Trains from `config.seed`, drawing batches uniformly with replacement
/// from `images`.
///
/// With `out_dir`, writes `config.cfg`, checkpoints at step 0, every
/// `checkpoint_every` steps and at the end, `last.pnet`, the step log
/// `log.csv` and, when `held_out` is nonempty, `held_out.csv`.
pub fn train(
    images: &[Image<f32>],
    held_out: &[HeldOut],
    config: &TrainConfig,
    out_dir: Option<&Path>,
    mut on_step: impl FnMut(&StepReport),
) -> Result<TrainOutcome> {
    config.validate()?;
    if images.is_empty() {
        return Err(Error::Config("training needs at least one image".into()));
    }
    let want = [config.formation.image_channels(), config.resolution, config.resolution];
    for (i, image) in images.iter().chain(held_out.iter().map(|h| &h.image)).enumerate() {
        if image.array().dims() != want {
            return Err(Error::Config(format!(
                "image {i} has dims {:?}; {} training at n_p={} needs {want:?}",
                image.array().dims(),
                config.formation,
                config.resolution
            )));
        }
    }
    let truth_dims = [config.formation.voxel_channels(), config.resolution, config.resolution, config.resolution];
    if let Some(h) = held_out.iter().find(|h| h.truth.array().dims() != truth_dims) {
        return Err(Error::Config(format!(
            "held-out truth has dims {:?}, expected {truth_dims:?}",
            h.truth.array().dims()
        )));
    }

    let mut trainer = Trainer::<f32>::new(config.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut checkpoints = Vec::new();
    let save = |nets: &Networks<f32>, step: usize, checkpoints: &mut Vec<PathBuf>| -> Result<()> {
        if let Some(dir) = out_dir {
            let path = dir.join(checkpoint_name(step));
            checkpoint::save(&path, nets)?;
            checkpoints.push(path);
        }
        Ok(())
    };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_file(&dir.join("config.cfg"), config.to_text().as_bytes())?;
    }
    save(&trainer.nets, 0, &mut checkpoints)?;
    let probe_c_rec_initial = probe_c_rec(&trainer.nets, images, config)?;

    let mut log = Vec::with_capacity(config.steps);
    for step in 1..=config.steps {
        let batch: Vec<Image<f32>> = (0..config.batch_size)
            .map(|_| images[rng.random_range(0..images.len())].clone())
            .collect();
        let report = train_step(&mut trainer, &batch, &mut rng)?;
        on_step(&report);
        log.push(report);
        let cadence = config.checkpoint_every > 0 && step % config.checkpoint_every == 0;
        if cadence || step == config.steps {
            save(&trainer.nets, step, &mut checkpoints)?;
        }
    }
    let probe_c_rec_final = probe_c_rec(&trainer.nets, images, config)?;

    let held_out_report = if held_out.is_empty() {
        None
    } else {
        let pairs = held_out
            .iter()
            .map(|h| Ok((trainer.nets.reconstruct(&h.image)?, h.truth.clone())))
            .collect::<Result<Vec<_>>>()?;
        Some(evaluate_many(&pairs, config.formation, config.seed)?)
    };

    if let Some(dir) = out_dir {
        checkpoint::save(&dir.join("last.pnet"), &trainer.nets)?;
        let mut csv = String::from(LOG_HEADER);
        if config.log_time {
            csv += ",seconds";
        }
        csv.push('\n');
        for r in &log {
            csv += &log_line(r, config.log_time);
            csv.push('\n');
        }
        write_file(&dir.join("log.csv"), csv.as_bytes())?;
        if let Some(report) = &held_out_report {
            write_file(&dir.join("held_out.csv"), report.to_csv().as_bytes())?;
        }
    }
    Ok(TrainOutcome {
        nets: trainer.nets,
        log,
        probe_c_rec_initial,
        probe_c_rec_final,
        held_out: held_out_report,
        checkpoints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::{render, ImageFormation};
    use crate::volume::sample_view;

    fn config(steps: usize) -> TrainConfig {
        TrainConfig {
            resolution: 16,
            steps,
            batch_size: 2,
            checkpoint_every: 2,
            z_dim: Some(8),
            ..TrainConfig::default()
        }
    }

    fn data() -> (Vec<Image<f32>>, Vec<HeldOut>) {
        let grid = VoxelGrid::<f32>::from_fn(1, 16, |_, z, y, x| {
            let p = |i: usize| (i as f32 + 0.5) / 8.0 - 1.0;
            (p(x).powi(2) + p(y).powi(2) + p(z).powi(2) < 0.25) as u8 as f32
        });
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let images = (0..3)
            .map(|_| render(&sample_view(&mut rng), &grid, ImageFormation::AO).unwrap())
            .collect::<Vec<_>>();
        let held = vec![HeldOut { image: images[0].clone(), truth: grid }];
        (images, held)
    }

    #[test]
    fn zero_steps_write_only_the_initial_checkpoint() {
        let dir = tempfile::tempdir().unwrap();
        let (images, _) = data();
        let out = train(&images, &[], &config(0), Some(dir.path()), |_| {}).unwrap();
        assert!(out.log.is_empty());
        assert_eq!(out.checkpoints, vec![dir.path().join("step_000000.pnet")]);
        assert_eq!(out.probe_c_rec_initial, out.probe_c_rec_final);
    }

    #[test]
    fn runs_are_reproducible_and_write_artifacts() {
        let (images, held) = data();
        let run = || {
            let dir = tempfile::tempdir().unwrap();
            let out = train(&images, &held, &config(3), Some(dir.path()), |_| {}).unwrap();
            let names: Vec<_> = out.checkpoints.iter().map(|p| p.file_name().unwrap().to_owned()).collect();
            assert_eq!(names, ["step_000000.pnet", "step_000002.pnet", "step_000003.pnet"]);
            let read = |n: &str| std::fs::read(dir.path().join(n)).unwrap();
            let log = String::from_utf8(read("log.csv")).unwrap();
            assert_eq!(log.lines().count(), 4);
            assert!(log.starts_with(LOG_HEADER));
            assert_eq!(out.held_out.as_ref().unwrap().samples.len(), 1);
            (read("last.pnet"), log, read("held_out.csv"), read("config.cfg"))
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn channel_mismatch_is_a_config_error() {
        let (images, _) = data();
        let cfg = TrainConfig { formation: ImageFormation::EA_COMPOSITE, ..config(1) };
        assert!(matches!(train(&images, &[], &cfg, None, |_| {}), Err(Error::Config(_))));
        assert!(matches!(train(&[], &[], &config(1), None, |_| {}), Err(Error::Config(_))));
    }
}
