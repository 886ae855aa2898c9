use crate::error::{Error, Result};
use crate::render::ImageFormation;

pub const KERNEL: usize = 4;
pub const STRIDE: usize = 2;
pub const PAD: usize = 1;

/// Layer widths and tensor sizes for all three networks.
///
/// The encoder and discriminator apply one stride-2 convolution per entry of
/// their width lists. The generator maps `z` densely to
/// `generator[0] x b^3` with `b = resolution / 2^len(generator)`, then runs
/// one stride-2 transposed convolution per width, the last one producing
/// `voxel_channels`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub resolution: usize,
    pub image_channels: usize,
    pub voxel_channels: usize,
    pub z_dim: usize,
    pub encoder: Vec<usize>,
    pub generator: Vec<usize>,
    pub discriminator: Vec<usize>,
}

impl Architecture {
    pub const DEFAULT_Z_DIM: usize = 128;

    /// Full-size scaffold: four stages, widths up to 512.
    pub fn standard(formation: ImageFormation, resolution: usize) -> Self {
        Self {
            resolution,
            image_channels: formation.image_channels(),
            voxel_channels: formation.voxel_channels(),
            z_dim: Self::DEFAULT_Z_DIM,
            encoder: vec![64, 128, 256, 512],
            generator: vec![512, 256, 128, 64],
            discriminator: vec![64, 128, 256, 512],
        }
    }

    /// Narrow three-stage variant sized for single-core runs at 32^3.
    pub fn desk(formation: ImageFormation, resolution: usize) -> Self {
        Self {
            resolution,
            image_channels: formation.image_channels(),
            voxel_channels: formation.voxel_channels(),
            z_dim: 64,
            encoder: vec![16, 32, 64],
            generator: vec![64, 32, 16],
            discriminator: vec![16, 32, 64],
        }
    }

    fn stage_base(&self, stages: usize, what: &str) -> Result<usize> {
        let div = 1usize << stages;
        if stages == 0 || self.resolution % div != 0 || self.resolution / div == 0 {
            return Err(Error::Config(format!(
                "{what}: resolution {} not divisible into {stages} stride-2 stages",
                self.resolution
            )));
        }
        Ok(self.resolution / div)
    }

    /// Spatial extent after the last encoder convolution.
    pub fn encoder_base(&self) -> usize {
        self.resolution >> self.encoder.len()
    }

    pub fn discriminator_base(&self) -> usize {
        self.resolution >> self.discriminator.len()
    }

    /// Spatial extent of the generator's dense output.
    pub fn generator_base(&self) -> usize {
        self.resolution >> self.generator.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.stage_base(self.encoder.len(), "encoder")?;
        self.stage_base(self.generator.len(), "generator")?;
        self.stage_base(self.discriminator.len(), "discriminator")?;
        let widths = self.encoder.iter().chain(&self.generator).chain(&self.discriminator);
        if self.z_dim == 0 || self.image_channels == 0 || self.voxel_channels == 0 || widths.clone().any(|&w| w == 0) {
            return Err(Error::Config("zero-sized layer".into()));
        }
        Ok(())
    }

    /// Every parameter as `(name, dims)`, in canonical order.
    pub fn parameter_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let k = KERNEL;
        let mut out = Vec::new();
        let mut conv_stack = |prefix: &str, widths: &[usize], head: usize| {
            let mut cin = self.image_channels;
            for (i, &w) in widths.iter().enumerate() {
                out.push((format!("{prefix}.conv{i}.w"), vec![w, cin, k, k]));
                out.push((format!("{prefix}.conv{i}.b"), vec![w]));
                cin = w;
            }
            let base = self.resolution >> widths.len();
            out.push((format!("{prefix}.fc.w"), vec![head, cin * base * base]));
            out.push((format!("{prefix}.fc.b"), vec![head]));
        };
        conv_stack("enc", &self.encoder, self.z_dim);
        conv_stack("dis", &self.discriminator, 1);
        let b = self.generator_base();
        let g0 = self.generator[0];
        out.push(("gen.fc.w".into(), vec![g0 * b * b * b, self.z_dim]));
        out.push(("gen.fc.b".into(), vec![g0 * b * b * b]));
        for (i, &cin) in self.generator.iter().enumerate() {
            let cout = self.generator.get(i + 1).copied().unwrap_or(self.voxel_channels);
            out.push((format!("gen.deconv{i}.w"), vec![cin, cout, k, k, k]));
            out.push((format!("gen.deconv{i}.b"), vec![cout]));
        }
        out
    }

    /// Reconstructs the architecture from checkpoint parameter shapes.
    pub fn infer(shapes: &[(String, Vec<usize>)]) -> Result<Self> {
        let find = |name: &str| {
            shapes
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, d)| d.clone())
                .ok_or_else(|| Error::Config(format!("checkpoint lacks `{name}`")))
        };
        let count = |prefix: &str| {
            (0..)
                .take_while(|i| shapes.iter().any(|(n, _)| *n == format!("{prefix}{i}.w")))
                .count()
        };
        let widths = |prefix: &str, axis: usize| -> Result<Vec<usize>> {
            (0..count(prefix))
                .map(|i| Ok(find(&format!("{prefix}{i}.w"))?[axis]))
                .collect()
        };
        let encoder = widths("enc.conv", 0)?;
        let discriminator = widths("dis.conv", 0)?;
        let generator = widths("gen.deconv", 0)?;
        if encoder.is_empty() || generator.is_empty() || discriminator.is_empty() {
            return Err(Error::Config("checkpoint has an empty network".into()));
        }
        let image_channels = find("enc.conv0.w")?[1];
        let z_dim = find("enc.fc.w")?[0];
        let last = find(&format!("gen.deconv{}.w", generator.len() - 1))?;
        let voxel_channels = last[1];
        let fc_rows = find("gen.fc.w")?[0];
        let cells = fc_rows / generator[0];
        let base = (cells as f64).cbrt().round() as usize;
        if base.pow(3) * generator[0] != fc_rows {
            return Err(Error::Config("generator dense layer is not cubic".into()));
        }
        let arch = Self {
            resolution: base << generator.len(),
            image_channels,
            voxel_channels,
            z_dim,
            encoder,
            generator,
            discriminator,
        };
        arch.validate()?;
        let expected = arch.parameter_shapes();
        if expected.len() != shapes.len()
            || expected.iter().zip(shapes).any(|(a, b)| a != b)
        {
            return Err(Error::Config(
                "checkpoint parameters do not match any architecture".into(),
            ));
        }
        Ok(arch)
    }
}
