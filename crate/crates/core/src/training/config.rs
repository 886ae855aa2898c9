use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::networks::Architecture;
use crate::render::{ImageFormation, ScanKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchPreset {
    Standard,
    Desk,
}

impl FromStr for ArchPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Self::Standard),
            "desk" => Ok(Self::Desk),
            _ => Err(Error::Config(format!("unknown architecture `{s}` (standard|desk)"))),
        }
    }
}

impl fmt::Display for ArchPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Standard => "standard",
            Self::Desk => "desk",
        })
    }
}

/// How the per-pixel squared errors of the reconstruction term are reduced
/// before weighting by `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RecReduction {
    /// `||y - R(omega_0, v)||^2`, summed over pixels and channels.
    #[default]
    Sum,
    /// The sum divided by the number of image values.
    Mean,
}

impl FromStr for RecReduction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Self::Sum),
            "mean" => Ok(Self::Mean),
            _ => Err(Error::Config(format!("unknown rec_reduction `{s}` (sum|mean)"))),
        }
    }
}

impl fmt::Display for RecReduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sum => "sum",
            Self::Mean => "mean",
        })
    }
}

/// Replaces one side's objective by a constant for a step; used to check
/// that each parameter group only moves through its own loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Freeze {
    #[default]
    None,
    /// The discriminator objective becomes constant.
    Discriminator,
    /// The encoder/generator objective becomes constant.
    Generator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Weight of the reconstruction term.
    pub lambda: f64,
    pub resolution: usize,
    pub formation: ImageFormation,
    pub architecture: ArchPreset,
    /// Overrides the preset's latent size.
    pub z_dim: Option<usize>,
    pub batch_size: usize,
    pub steps: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
    /// Write a checkpoint every this many steps; 0 keeps only the first and last.
    pub checkpoint_every: usize,
    /// Minimize `-log D` instead of `log(1 - D)`.
    pub non_saturating: bool,
    /// Adds a wall-clock column to the step log. Off by default so repeated
    /// runs write identical files.
    pub log_time: bool,
    pub rec_reduction: RecReduction,
    /// Generator output at initialization, set through the bias of its last
    /// layer; 0.5 leaves that bias at zero.
    pub initial_occupancy: f64,
    pub freeze: Freeze,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 100.0,
            resolution: 32,
            formation: ImageFormation::AO,
            architecture: ArchPreset::Desk,
            z_dim: None,
            batch_size: 8,
            steps: 2000,
            learning_rate: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
            checkpoint_every: 500,
            non_saturating: false,
            log_time: false,
            rec_reduction: RecReduction::Sum,
            initial_occupancy: 0.5,
            freeze: Freeze::None,
        }
    }
}

/// Keys accepted by [`TrainConfig::set`], with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("lambda", "reconstruction weight"),
    ("resolution", "image and volume resolution n_p"),
    ("formation", "vh | ao | ea-paper | ea-composite"),
    ("scan", "cumprod | log"),
    ("architecture", "standard | desk"),
    ("z_dim", "latent size (default: preset)"),
    ("batch_size", "images per step"),
    ("steps", "optimizer steps"),
    ("learning_rate", "Adam step size"),
    ("beta1", "Adam first-moment decay"),
    ("beta2", "Adam second-moment decay"),
    ("adam_epsilon", "Adam denominator offset"),
    ("seed", "random seed"),
    ("checkpoint_every", "checkpoint cadence in steps"),
    ("non_saturating", "true to minimize -log D"),
    ("log_time", "true to record seconds in the step log"),
    ("rec_reduction", "sum | mean over the reconstruction image"),
    ("initial_occupancy", "generator output at initialization, in (0, 1)"),
    ("freeze", "none | discriminator | generator (ablation)"),
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

impl TrainConfig {
    pub fn keys() -> &'static [(&'static str, &'static str)] {
        KEYS
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "lambda" => self.lambda = parse(key, value)?,
            "resolution" => self.resolution = parse(key, value)?,
            "formation" => self.formation = ImageFormation::from_str(value)?.with_scan(self.formation.scan),
            "scan" => {
                let scan = match value {
                    "cumprod" => ScanKind::CumProd,
                    "log" => ScanKind::LogCumSum,
                    _ => return Err(Error::Config(format!("unknown scan `{value}` (cumprod|log)"))),
                };
                self.formation = self.formation.with_scan(scan);
            }
            "architecture" => self.architecture = value.parse()?,
            "z_dim" => self.z_dim = Some(parse(key, value)?),
            "batch_size" => self.batch_size = parse(key, value)?,
            "steps" => self.steps = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "beta1" => self.beta1 = parse(key, value)?,
            "beta2" => self.beta2 = parse(key, value)?,
            "adam_epsilon" => self.adam_epsilon = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "checkpoint_every" => self.checkpoint_every = parse(key, value)?,
            "non_saturating" => self.non_saturating = parse(key, value)?,
            "log_time" => self.log_time = parse(key, value)?,
            "rec_reduction" => self.rec_reduction = value.parse()?,
            "initial_occupancy" => self.initial_occupancy = parse(key, value)?,
            "freeze" => {
                self.freeze = match value {
                    "none" => Freeze::None,
                    "discriminator" => Freeze::Discriminator,
                    "generator" => Freeze::Generator,
                    _ => {
                        return Err(Error::Config(format!(
                            "unknown freeze `{value}` (none|discriminator|generator)"
                        )))
                    }
                }
            }
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Parses a whole config file; unknown keys are errors.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (key, value) in parse_key_values(text)? {
            cfg.set(&key, &value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("{name} must lie in [0, 1)")));
            }
        }
        if !(self.initial_occupancy > 0.0 && self.initial_occupancy < 1.0) {
            return Err(Error::Config("initial_occupancy must lie in (0, 1)".into()));
        }
        if !(self.adam_epsilon > 0.0) {
            return Err(Error::Config("adam_epsilon must be positive".into()));
        }
        self.architecture().validate()
    }

    pub fn architecture(&self) -> Architecture {
        let mut arch = match self.architecture {
            ArchPreset::Standard => Architecture::standard(self.formation, self.resolution),
            ArchPreset::Desk => Architecture::desk(self.formation, self.resolution),
        };
        if let Some(z) = self.z_dim {
            arch.z_dim = z;
        }
        arch
    }

    /// Factor applied to the reconstruction loss of an image with `values`
    /// entries in the encoder/generator objective.
    pub fn rec_weight(&self, values: usize) -> f64 {
        match self.rec_reduction {
            RecReduction::Sum => self.lambda,
            RecReduction::Mean => self.lambda / values as f64,
        }
    }

    /// The settings as `key = value` lines, readable by [`Self::from_text`].
    pub fn to_text(&self) -> String {
        let scan = match self.formation.scan {
            ScanKind::CumProd => "cumprod",
            ScanKind::LogCumSum => "log",
        };
        let mut s = format!(
            "lambda = {}\nresolution = {}\nformation = {}\nscan = {scan}\narchitecture = {}\n",
            self.lambda,
            self.resolution,
            self.formation.name(),
            self.architecture
        );
        if let Some(z) = self.z_dim {
            s += &format!("z_dim = {z}\n");
        }
        s += &format!(
            "batch_size = {}\nsteps = {}\nlearning_rate = {}\nbeta1 = {}\nbeta2 = {}\nadam_epsilon = {}\n\
             seed = {}\ncheckpoint_every = {}\nnon_saturating = {}\nlog_time = {}\nrec_reduction = {}\ninitial_occupancy = {}\n",
            self.batch_size,
            self.steps,
            self.learning_rate,
            self.beta1,
            self.beta2,
            self.adam_epsilon,
            self.seed,
            self.checkpoint_every,
            self.non_saturating,
            self.log_time,
            self.rec_reduction,
            self.initial_occupancy
        );
        if self.freeze != Freeze::None {
            s += &format!("freeze = {}\n", format!("{:?}", self.freeze).to_lowercase());
        }
        s
    }
}

/// Splits `key = value` lines, skipping blanks and `#` comments.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", i + 1)));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}
