//! File formats and the synthetic dataset generator.

mod image_io;
mod shapes;
mod synth;

pub use image_io::{load_image, resize_area, save_image};
pub use shapes::{sphere_family, mixed_family, Primitive, PrimitiveKind, ShapeRecipe};
pub use synth::{
    read_manifest, synth_dataset, write_dataset, ImageCollection, ManifestEntry, SynthDataset, SynthSample,
    DEFAULT_VIEWS_PER_SHAPE, MANIFEST_HEADER,
};

use std::path::Path;

use crate::error::{Error, Result};
use crate::volume::{pvox, VoxelGrid};

pub fn load_volume(path: &Path) -> Result<VoxelGrid<f32>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    pvox::read(std::io::BufReader::new(f), path)
}

pub fn save_volume(grid: &VoxelGrid<f32>, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    pvox::write(&mut w, grid).map_err(|e| Error::io(path, e))?;
    std::io::Write::flush(&mut w).map_err(|e| Error::io(path, e))
}
