use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::render::{render, ImageFormation};
use crate::volume::{rotate_resample, sample_view, Image, ViewDirection, VoxelGrid};

use super::{load_image, load_volume, save_image, save_volume, ShapeRecipe};

/// Rendered views per shape unless configured otherwise.
pub const DEFAULT_VIEWS_PER_SHAPE: usize = 50;

pub const MANIFEST_HEADER: &str = "image,grid,azimuth,elevation,recipe";

/// Images of one resolution and channel count, with where each came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageCollection {
    images: Vec<Image<f32>>,
    sources: Vec<String>,
}

impl ImageCollection {
    pub fn new(images: Vec<Image<f32>>, sources: Vec<String>) -> Result<Self> {
        if images.len() != sources.len() {
            return Err(Error::Value("one source per image required".into()));
        }
        if let Some(first) = images.first() {
            if let Some((i, img)) = images.iter().enumerate().find(|(_, i)| i.array().dims() != first.array().dims()) {
                return Err(Error::Shape(format!(
                    "image {i} ({}) has dims {:?}, the first has {:?}",
                    sources[i],
                    img.array().dims(),
                    first.array().dims()
                )));
            }
        }
        Ok(Self { images, sources })
    }

    /// Loads every image listed in a manifest.
    pub fn from_manifest(path: &Path, channels: usize, resolution: Option<usize>) -> Result<Self> {
        let entries = read_manifest(path)?;
        let images = entries
            .par_iter()
            .map(|e| load_image(&e.image, channels, resolution))
            .collect::<Result<Vec<_>>>()?;
        let sources = entries.iter().map(|e| e.image.display().to_string()).collect();
        Self::new(images, sources)
    }

    pub fn images(&self) -> &[Image<f32>] {
        &self.images
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSample {
    pub image: Image<f32>,
    pub view: ViewDirection,
    /// Index into [`SynthDataset::recipes`].
    pub recipe: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub formation: ImageFormation,
    pub recipes: Vec<ShapeRecipe>,
    /// World-frame ground truth, one per recipe.
    pub grids: Vec<VoxelGrid<f32>>,
    pub samples: Vec<SynthSample>,
}

impl SynthDataset {
    pub fn images(&self) -> Vec<Image<f32>> {
        self.samples.iter().map(|s| s.image.clone()).collect()
    }

    /// Ground truth of sample `i` in its camera frame, the frame a
    /// reconstruction from that image lives in.
    pub fn truth_in_view(&self, i: usize) -> VoxelGrid<f32> {
        let s = &self.samples[i];
        rotate_resample(&self.grids[s.recipe], &s.view)
    }
}

/// Voxelizes each recipe and renders `views_per_shape` uniformly sampled
/// views of it. Views are drawn from `rng` in recipe order before any
/// rendering, so the result does not depend on thread count.
pub fn synth_dataset<R: Rng + ?Sized>(
    recipes: &[ShapeRecipe],
    views_per_shape: usize,
    formation: ImageFormation,
    resolution: usize,
    rng: &mut R,
) -> Result<SynthDataset> {
    if recipes.is_empty() {
        return Err(Error::Value("no recipes".into()));
    }
    if resolution == 0 {
        return Err(Error::Value("resolution must be positive".into()));
    }
    let grids = recipes
        .par_iter()
        .map(|r| r.voxelize(formation.voxel_channels(), resolution))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, ViewDirection)> = (0..recipes.len())
        .flat_map(|r| (0..views_per_shape).map(move |_| r))
        .map(|r| (r, sample_view(rng)))
        .collect();
    let samples = jobs
        .into_par_iter()
        .map(|(recipe, view)| {
            Ok(SynthSample {
                image: render(&view, &grids[recipe], formation)?,
                view,
                recipe,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SynthDataset {
        formation,
        recipes: recipes.to_vec(),
        grids,
        samples,
    })
}

/// Writes `grids/<id>.pvox`, `images/<id>_<k>.png` and `manifest.csv` with
/// paths relative to `dir`; returns the manifest path.
pub fn write_dataset(ds: &SynthDataset, dir: &Path) -> Result<PathBuf> {
    for sub in ["grids", "images"] {
        let d = dir.join(sub);
        std::fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    ds.recipes
        .par_iter()
        .zip(&ds.grids)
        .try_for_each(|(r, g)| save_volume(g, &dir.join(format!("grids/{}.pvox", r.id))))?;
    let mut counts = vec![0usize; ds.recipes.len()];
    let mut rows = Vec::with_capacity(ds.samples.len());
    for s in &ds.samples {
        let id = &ds.recipes[s.recipe].id;
        rows.push((format!("images/{id}_{:03}.png", counts[s.recipe]), s));
        counts[s.recipe] += 1;
    }
    rows.par_iter().try_for_each(|(name, s)| save_image(&s.image, &dir.join(name)))?;
    let mut csv = String::from(MANIFEST_HEADER);
    csv.push('\n');
    for (name, s) in &rows {
        let (az, el) = s.view.angles();
        let id = &ds.recipes[s.recipe].id;
        let _ = writeln!(csv, "{name},grids/{id}.pvox,{az},{el},{id}");
    }
    let path = dir.join("manifest.csv");
    std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// Resolved against the manifest's directory.
    pub image: PathBuf,
    pub grid: Option<PathBuf>,
    pub azimuth: f64,
    pub elevation: f64,
    pub recipe: String,
}

impl ManifestEntry {
    pub fn view(&self) -> Result<ViewDirection> {
        ViewDirection::from_angles(self.azimuth, self.elevation)
    }

    /// The entry's ground truth rotated into the image's camera frame.
    pub fn truth_in_view(&self) -> Result<VoxelGrid<f32>> {
        let grid = self
            .grid
            .as_ref()
            .ok_or_else(|| Error::Value(format!("{} has no ground-truth grid", self.image.display())))?;
        Ok(rotate_resample(&load_volume(grid)?, &self.view()?))
    }
}

/// Parses a manifest. The grid column may be empty for images without
/// ground truth; the header line is required.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == MANIFEST_HEADER => {}
        _ => return Err(Error::format(path, format!("missing header `{MANIFEST_HEADER}`"))),
    }
    lines
        .map(|(i, line)| {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = |what: &str| Error::format(path, format!("line {}: {what}", i + 1));
            if cols.len() != 5 {
                return Err(bad("expected 5 columns"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad angle"));
            Ok(ManifestEntry {
                image: base.join(cols[0]),
                grid: (!cols[1].is_empty()).then(|| base.join(cols[1])),
                azimuth: num(cols[2])?,
                elevation: num(cols[3])?,
                recipe: cols[4].to_string(),
            })
        })
        .collect()
}
