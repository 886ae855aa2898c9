use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How a depth column of voxels becomes a pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormationMode {
    /// `1 - exp(-sum v_i)`
    VisualHull,
    /// `1 - prod (1 - v_i)`
    AbsorptionOnly,
    /// `sum_i (1 - prod_{j<=i} (1 - a_j)) e_i`, summed as written; not
    /// bounded by one.
    EmissionAbsorptionPaper,
    /// Front-to-back compositing `sum_i prod_{j<i} (1 - a_j) a_i e_i`.
    EmissionAbsorptionComposite,
}

/// Which scan produces transmittance products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ScanKind {
    #[default]
    CumProd,
    /// `exp(cumsum(log(max(1 - a, floor))))`
    LogCumSum,
}

/// Lower clamp applied to `1 - a` before taking logs.
pub const LOG_DOMAIN_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ImageFormation {
    pub mode: FormationMode,
    pub scan: ScanKind,
}

impl ImageFormation {
    pub const VH: Self = Self::new(FormationMode::VisualHull);
    pub const AO: Self = Self::new(FormationMode::AbsorptionOnly);
    pub const EA_PAPER: Self = Self::new(FormationMode::EmissionAbsorptionPaper);
    pub const EA_COMPOSITE: Self = Self::new(FormationMode::EmissionAbsorptionComposite);

    pub const fn new(mode: FormationMode) -> Self {
        Self {
            mode,
            scan: ScanKind::CumProd,
        }
    }

    pub const fn with_scan(self, scan: ScanKind) -> Self {
        Self { scan, ..self }
    }

    pub fn is_emission(&self) -> bool {
        matches!(
            self.mode,
            FormationMode::EmissionAbsorptionPaper | FormationMode::EmissionAbsorptionComposite
        )
    }

    /// Grid channels: density only, or RGB emission plus absorption last.
    pub fn voxel_channels(&self) -> usize {
        if self.is_emission() {
            4
        } else {
            1
        }
    }

    pub fn image_channels(&self) -> usize {
        if self.is_emission() {
            3
        } else {
            1
        }
    }

    pub fn check_channels(&self, channels: usize) -> Result<()> {
        if channels == self.voxel_channels() {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{self} needs {} voxel channels, grid has {channels}",
                self.voxel_channels()
            )))
        }
    }

    pub fn name(&self) -> &'static str {
        match self.mode {
            FormationMode::VisualHull => "vh",
            FormationMode::AbsorptionOnly => "ao",
            FormationMode::EmissionAbsorptionPaper => "ea-paper",
            FormationMode::EmissionAbsorptionComposite => "ea-composite",
        }
    }
}

impl fmt::Display for ImageFormation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())?;
        if self.scan == ScanKind::LogCumSum {
            f.write_str("+log")?;
        }
        Ok(())
    }
}

impl FromStr for ImageFormation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "vh" => Ok(Self::VH),
            "ao" => Ok(Self::AO),
            "ea-paper" => Ok(Self::EA_PAPER),
            "ea-composite" => Ok(Self::EA_COMPOSITE),
            other => Err(Error::Config(format!(
                "unknown formation `{other}` (expected vh, ao, ea-paper or ea-composite)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        for f in [
            ImageFormation::VH,
            ImageFormation::AO,
            ImageFormation::EA_PAPER,
            ImageFormation::EA_COMPOSITE,
        ] {
            assert_eq!(f.name().parse::<ImageFormation>().unwrap(), f);
        }
        assert!("ea".parse::<ImageFormation>().is_err());
    }

    #[test]
    fn channel_contract() {
        assert_eq!(ImageFormation::AO.voxel_channels(), 1);
        assert_eq!(ImageFormation::EA_PAPER.voxel_channels(), 4);
        assert_eq!(ImageFormation::EA_COMPOSITE.image_channels(), 3);
        assert!(ImageFormation::VH.check_channels(4).is_err());
    }
}
