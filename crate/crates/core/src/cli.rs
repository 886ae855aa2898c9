//! The `platonic` command-line front end.
//!
//! Exit status: 0 on success, 1 for invalid input (bad flags, files,
//! configuration or a failed gradient check), 2 for internal errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{
    load_image, load_volume, mixed_family, read_manifest, save_image, save_volume, sphere_family, synth_dataset,
    write_dataset, ImageCollection, DEFAULT_VIEWS_PER_SHAPE,
};
use crate::error::{Error, Result};
use crate::gradsuite::{gradient_suite, STEP};
use crate::metrics::{evaluate_with, EvalOptions, EvalReport, DEFAULT_IOU_THRESHOLD, DEFAULT_OCCUPANCY_CUTOFF};
use crate::networks::checkpoint;
use crate::render::{render, ImageFormation};
use crate::training::{parse_key_values, train, HeldOut, TrainConfig};
use crate::volume::ViewDirection;

/// Views rendered next to every reconstruction, as `(azimuth, elevation)`.
pub const RECONSTRUCT_VIEWS: [(f64, f64); 4] = [(0.0, 0.0), (90.0, 0.0), (180.0, 0.0), (0.0, 90.0)];

#[derive(Debug, Parser)]
#[command(name = "platonic", version, about = "Differentiable volume rendering and adversarial 3D reconstruction")]
struct Cli {
    /// Worker threads; 1 makes every command reproducible bit for bit
    /// (0 = all cores).
    #[arg(long, global = true, env = "PLATONIC_THREADS", default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic image collection with ground-truth volumes.
    Synth(SynthArgs),
    /// Train encoder, generator and discriminator on an image collection.
    Train(TrainArgs),
    /// Reconstruct a volume from one image with a trained checkpoint.
    Reconstruct(ReconstructArgs),
    /// Render a volume from one view.
    Render(RenderArgs),
    /// Compare a reconstruction with its ground truth.
    Evaluate(EvaluateArgs),
    /// Compare analytic gradients with finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Family {
    Sphere,
    Mixed,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output directory (receives manifest.csv, images/ and grids/).
    #[arg(long)]
    out: PathBuf,
    /// Number of shapes.
    #[arg(long, default_value_t = 20)]
    shapes: usize,
    /// Views rendered per shape.
    #[arg(long, default_value_t = DEFAULT_VIEWS_PER_SHAPE)]
    views: usize,
    #[arg(long, value_enum, default_value_t = Family::Sphere)]
    family: Family,
    /// vh | ao | ea-paper | ea-composite
    #[arg(long, default_value = "ao")]
    formation: ImageFormation,
    /// Resolution n_p.
    #[arg(long = "np", default_value_t = 32)]
    resolution: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// key = value file; accepts the training keys plus `manifest`,
    /// `held_out` and `out`. Flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training manifest (from `synth` or hand-written).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Manifest of held-out images with ground-truth grids.
    #[arg(long)]
    held_out: Option<PathBuf>,
    /// Output directory for checkpoints and logs [default: train-out].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reconstruction weight [default: 100].
    #[arg(long)]
    lambda: Option<f64>,
    /// Optimizer steps [default: 2000].
    #[arg(long)]
    steps: Option<usize>,
    /// Images per step [default: 8].
    #[arg(long)]
    batch_size: Option<usize>,
    /// Adam step size [default: 0.0002].
    #[arg(long)]
    learning_rate: Option<f64>,
    /// vh | ao | ea-paper | ea-composite [default: ao].
    #[arg(long)]
    formation: Option<ImageFormation>,
    /// Resolution n_p [default: 32].
    #[arg(long = "np")]
    resolution: Option<usize>,
    /// Random seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Extra `key=value` settings, as in the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Args)]
struct ReconstructArgs {
    /// Trained PNET checkpoint.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Input PNG; resized to the checkpoint's resolution.
    #[arg(long)]
    image: PathBuf,
    /// Output PVOX; renders go next to it as `<stem>_view<k>.png`.
    #[arg(long)]
    out: PathBuf,
    /// vh | ao | ea-paper | ea-composite
    #[arg(long, default_value = "ao")]
    formation: ImageFormation,
}

#[derive(Debug, Args)]
struct RenderArgs {
    /// PVOX volume to render.
    #[arg(long)]
    volume: PathBuf,
    /// `azimuth,elevation` in degrees; `0,0` is the canonical view.
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    view: String,
    /// vh | ao | ea-paper | ea-composite
    #[arg(long, default_value = "ao")]
    formation: ImageFormation,
    /// Output PNG.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Reconstructed volume.
    #[arg(long)]
    recon: PathBuf,
    /// Ground-truth volume in the same frame.
    #[arg(long)]
    truth: PathBuf,
    /// vh | ao | ea-paper | ea-composite
    #[arg(long, default_value = "ao")]
    formation: ImageFormation,
    /// Seed of the re-rendered views.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// IoU binarization threshold.
    #[arg(long, default_value_t = DEFAULT_IOU_THRESHOLD)]
    threshold: f64,
    /// Chamfer occupancy cutoff.
    #[arg(long, default_value_t = DEFAULT_OCCUPANCY_CUTOFF)]
    epsilon: f64,
    /// Also write the per-sample CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    /// vh | ao | ea-paper | ea-composite
    #[arg(long, default_value = "ea-paper")]
    formation: ImageFormation,
    /// Grid resolution of the checks (multiple of 4).
    #[arg(long = "np", default_value_t = 8)]
    resolution: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Runs the command line `argv` (including the program name) and returns
/// the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error: {e}");
        return 2;
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                1
            } else {
                2
            }
        }
    }
}

fn configure_threads(threads: usize) -> Result<()> {
    // The global pool can only be built once per process; later calls (as in
    // tests running several commands) keep the first setting.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train_cmd(a),
        Command::Reconstruct(a) => reconstruct(a),
        Command::Render(a) => render_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Gradcheck(a) => gradcheck(a),
    }
    .map(|()| 0)
    .or_else(|e| match e {
        Error::Contract(ref m) if m == GRADCHECK_FAILED => Ok(1),
        e => Err(e),
    })
}

const GRADCHECK_FAILED: &str = "gradient check failed";

fn synth(a: SynthArgs) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let recipes = match a.family {
        Family::Sphere => sphere_family(a.shapes, &mut rng),
        Family::Mixed => mixed_family(a.shapes, &mut rng),
    };
    let ds = synth_dataset(&recipes, a.views, a.formation, a.resolution, &mut rng)?;
    let manifest = write_dataset(&ds, &a.out)?;
    println!("wrote {} images of {} shapes to {}", ds.samples.len(), recipes.len(), manifest.display());
    Ok(())
}

/// Path keys a training config file may carry besides [`TrainConfig`] keys.
const PATH_KEYS: [&str; 3] = ["manifest", "held_out", "out"];

fn train_cmd(a: TrainArgs) -> Result<()> {
    let mut config = TrainConfig::default();
    let (mut manifest, mut held_out, mut out) = (None, None, None);
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for (key, value) in parse_key_values(&text)? {
            let p = Some(base.join(&value));
            match key.as_str() {
                "manifest" => manifest = p,
                "held_out" => held_out = p,
                "out" => out = p,
                _ => config.set(&key, &value).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
            }
        }
    }
    manifest = a.manifest.or(manifest);
    held_out = a.held_out.or(held_out);
    out = a.out.or(out);
    for kv in &a.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        if PATH_KEYS.contains(&k.trim()) {
            return Err(Error::Config(format!("use --{} for `{}`", k.trim().replace('_', "-"), k.trim())));
        }
        config.set(k.trim(), v.trim())?;
    }
    if let Some(f) = a.formation {
        config.formation = f.with_scan(config.formation.scan);
    }
    macro_rules! override_field {
        ($($field:ident),*) => { $(if let Some(v) = a.$field { config.$field = v; })* };
    }
    override_field!(lambda, steps, batch_size, learning_rate, resolution, seed);
    config.validate()?;

    let manifest = manifest.ok_or_else(|| Error::Config("no training manifest (--manifest)".into()))?;
    let out = out.unwrap_or_else(|| PathBuf::from("train-out"));
    let channels = config.formation.image_channels();
    let images = ImageCollection::from_manifest(&manifest, channels, Some(config.resolution))?;
    let held = match &held_out {
        None => Vec::new(),
        Some(path) => read_manifest(path)?
            .iter()
            .map(|e| {
                Ok(HeldOut {
                    image: load_image(&e.image, channels, Some(config.resolution))?,
                    truth: e.truth_in_view()?,
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let every = (config.steps / 20).max(1);
    let outcome = train(images.images(), &held, &config, Some(&out), |r| {
        if r.step % every == 0 || r.diverged {
            eprintln!(
                "step {:>6}  c_dis {:>10.4}  c_gen {:>10.4}  c_rec {:>10.3}{}",
                r.step,
                r.c_dis,
                r.c_gen,
                r.c_rec,
                if r.diverged { "  diverged, step skipped" } else { "" }
            );
        }
    })?;
    println!(
        "reconstruction loss on probe images: {:.4} -> {:.4}",
        outcome.probe_c_rec_initial, outcome.probe_c_rec_final
    );
    if let Some(report) = &outcome.held_out {
        print!("{}", report.summary());
    }
    println!("checkpoints in {}", out.display());
    Ok(())
}

fn parse_view(s: &str) -> Result<ViewDirection> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || Error::Value(format!("--view expects `azimuth,elevation` in degrees, got `{s}`"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let az: f64 = parts[0].parse().map_err(|_| bad())?;
    let el: f64 = parts[1].parse().map_err(|_| bad())?;
    if !az.is_finite() || !el.is_finite() {
        return Err(bad());
    }
    ViewDirection::from_angles(az, el)
}

fn reconstruct(a: ReconstructArgs) -> Result<()> {
    let nets = checkpoint::load(&a.checkpoint)?;
    let arch = nets.architecture();
    if arch.voxel_channels != a.formation.voxel_channels() || arch.image_channels != a.formation.image_channels() {
        return Err(Error::Config(format!(
            "checkpoint has {} image / {} voxel channels; {} needs {} / {}",
            arch.image_channels,
            arch.voxel_channels,
            a.formation,
            a.formation.image_channels(),
            a.formation.voxel_channels()
        )));
    }
    let image = load_image(&a.image, arch.image_channels, Some(arch.resolution))?;
    let grid = nets.reconstruct(&image)?;
    save_volume(&grid, &a.out)?;
    let stem = a.out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "recon".into());
    let dir = a.out.parent().unwrap_or(Path::new("."));
    for (k, &(az, el)) in RECONSTRUCT_VIEWS.iter().enumerate() {
        let img = render(&ViewDirection::from_angles(az, el)?, &grid, a.formation)?;
        save_image(&img, &dir.join(format!("{stem}_view{k}.png")))?;
    }
    println!("wrote {} and {} renders", a.out.display(), RECONSTRUCT_VIEWS.len());
    Ok(())
}

fn render_cmd(a: RenderArgs) -> Result<()> {
    let grid = load_volume(&a.volume)?;
    let img = render(&parse_view(&a.view)?, &grid, a.formation)?;
    save_image(&img, &a.out)
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    if !(a.threshold > 0.0 && a.threshold < 1.0) {
        return Err(Error::Value(format!("--threshold must lie in (0, 1), got {}", a.threshold)));
    }
    if !(a.epsilon >= 0.0 && a.epsilon < 1.0) {
        return Err(Error::Value(format!("--epsilon must lie in [0, 1), got {}", a.epsilon)));
    }
    let recon = load_volume(&a.recon)?;
    let truth = load_volume(&a.truth)?;
    let options = EvalOptions {
        iou_threshold: a.threshold,
        occupancy_cutoff: a.epsilon,
    };
    let sample = evaluate_with(&recon, &truth, a.formation, a.seed, options)?;
    let report = EvalReport {
        formation: a.formation,
        samples: vec![sample],
    };
    print!("{}", report.summary());
    if let Some(path) = &a.out {
        std::fs::write(path, report.to_csv()).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn gradcheck(a: GradcheckArgs) -> Result<()> {
    let entries = gradient_suite(a.formation, a.resolution, a.seed)?;
    println!("{:<48} {:>12} {:>10}  result", "check", "max rel err", "tolerance");
    for e in &entries {
        println!(
            "{:<48} {:>12.3e} {:>10.0e}  {}",
            e.name,
            e.check.max_rel_error,
            e.tolerance,
            if e.passes() { "ok" } else { "FAIL" }
        );
    }
    println!("finite-difference step {STEP:e}, 64-bit");
    if entries.iter().all(|e| e.passes()) {
        Ok(())
    } else {
        Err(Error::Contract(GRADCHECK_FAILED.into()))
    }
}
