use rand::Rng;

use crate::error::{Error, Result};
use crate::volume::VoxelGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrimitiveKind {
    Sphere { radius: f64 },
    /// Axis-aligned box.
    Box { half_extents: [f64; 3] },
    /// Ring in the xz-plane around the y axis.
    Torus { major: f64, minor: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub kind: PrimitiveKind,
    /// In normalized coordinates, the cube being `[-1, 1]^3`.
    pub center: [f64; 3],
    pub density: f64,
    /// Emission color; white when absent.
    pub color: Option<[f64; 3]>,
}

impl Primitive {
    pub fn sphere(center: [f64; 3], radius: f64, density: f64) -> Self {
        Self {
            kind: PrimitiveKind::Sphere { radius },
            center,
            density,
            color: None,
        }
    }

    pub fn with_color(self, color: [f64; 3]) -> Self {
        Self {
            color: Some(color),
            ..self
        }
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        let d = [p[0] - self.center[0], p[1] - self.center[1], p[2] - self.center[2]];
        match self.kind {
            PrimitiveKind::Sphere { radius } => d[0] * d[0] + d[1] * d[1] + d[2] * d[2] <= radius * radius,
            PrimitiveKind::Box { half_extents: h } => (0..3).all(|i| d[i].abs() <= h[i]),
            PrimitiveKind::Torus { major, minor } => {
                let ring = (d[0] * d[0] + d[2] * d[2]).sqrt() - major;
                ring * ring + d[1] * d[1] <= minor * minor
            }
        }
    }

    /// Distance from the origin to the farthest point of the primitive.
    pub fn extent(&self) -> f64 {
        let c = self.center;
        let reach = match self.kind {
            PrimitiveKind::Sphere { radius } => radius,
            PrimitiveKind::Box { half_extents: h } => (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt(),
            PrimitiveKind::Torus { major, minor } => major + minor,
        };
        (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt() + reach
    }

    fn validate(&self) -> Result<()> {
        let sizes: Vec<f64> = match self.kind {
            PrimitiveKind::Sphere { radius } => vec![radius],
            PrimitiveKind::Box { half_extents } => half_extents.to_vec(),
            PrimitiveKind::Torus { major, minor } => vec![major, minor],
        };
        if sizes.iter().chain(&self.center).any(|v| !v.is_finite()) || sizes.iter().any(|&s| s < 0.0) {
            return Err(Error::Value(format!("invalid primitive size or position: {self:?}")));
        }
        if !(0.0..=1.0).contains(&self.density) {
            return Err(Error::Value(format!("density {} outside [0, 1]", self.density)));
        }
        if let Some(c) = self.color {
            if c.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Value(format!("color {c:?} outside [0, 1]")));
            }
        }
        if self.extent() > 1.0 + 1e-12 {
            return Err(Error::Value(format!(
                "primitive reaches {:.4} from the center, outside the inscribed sphere",
                self.extent()
            )));
        }
        Ok(())
    }
}

/// A union of primitives. Where several overlap, the densest wins; ties go
/// to the earlier primitive.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeRecipe {
    pub id: String,
    parts: Vec<Primitive>,
}

impl ShapeRecipe {
    /// Rejects parts that leave the unit sphere, so no rotation clips them.
    pub fn new(id: impl Into<String>, parts: Vec<Primitive>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() || id.contains([',', '/', '\\', '\n']) {
            return Err(Error::Value(format!("recipe id `{id}` must be nonempty without , / or newlines")));
        }
        if parts.is_empty() {
            return Err(Error::Value("recipe has no primitives".into()));
        }
        for p in &parts {
            p.validate()?;
        }
        Ok(Self { id, parts })
    }

    pub fn parts(&self) -> &[Primitive] {
        &self.parts
    }

    /// Samples the shape at voxel centers: 1 channel of density, or
    /// `[r, g, b, density]` when `channels` is 4.
    pub fn voxelize(&self, channels: usize, n: usize) -> Result<VoxelGrid<f32>> {
        if channels != 1 && channels != 4 {
            return Err(Error::Value(format!("cannot voxelize into {channels} channels")));
        }
        let n3 = n * n * n;
        let mut values = vec![0f32; channels * n3];
        let coord = |i: usize| (i as f64 + 0.5) / n as f64 * 2.0 - 1.0;
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    let p = [coord(x), coord(y), coord(z)];
                    let hit = self
                        .parts
                        .iter()
                        .filter(|part| part.contains(p))
                        .fold(None::<&Primitive>, |best, part| match best {
                            Some(b) if b.density >= part.density => Some(b),
                            _ => Some(part),
                        });
                    let Some(part) = hit else { continue };
                    let idx = (z * n + y) * n + x;
                    values[(channels - 1) * n3 + idx] = part.density as f32;
                    if channels == 4 {
                        let color = part.color.unwrap_or([1.0; 3]);
                        for c in 0..3 {
                            values[c * n3 + idx] = color[c] as f32;
                        }
                    }
                }
            }
        }
        VoxelGrid::new(channels, n, values)
    }
}

fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    let v = crate::volume::sample_view(rng).vector();
    [v[0], v[1], v[2]]
}

fn random_color<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    [rng.random_range(0.2..1.0), rng.random_range(0.2..1.0), rng.random_range(0.2..1.0)]
}

/// Solid unit-density spheres with radius in `[0.3, 0.6]` and centers up
/// to 0.2 off the middle, each with a random color.
pub fn sphere_family<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<ShapeRecipe> {
    (0..count)
        .map(|i| {
            let radius = rng.random_range(0.3..0.6);
            let dir = random_direction(rng);
            let off = rng.random_range(0.0..0.2);
            let center = dir.map(|d| d * off);
            let part = Primitive::sphere(center, radius, 1.0).with_color(random_color(rng));
            ShapeRecipe::new(format!("sphere{i:03}"), vec![part]).expect("sphere family stays in bounds")
        })
        .collect()
}

/// Spheres, boxes, tori and two-part unions with random sizes, densities
/// in `[0.5, 1]` and colors.
pub fn mixed_family<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<ShapeRecipe> {
    let one = |rng: &mut R, budget: f64| -> Primitive {
        let off = rng.random_range(0.0..0.25 * budget);
        let center = random_direction(rng).map(|d| d * off);
        let room = budget - off;
        let kind = match rng.random_range(0..3) {
            0 => PrimitiveKind::Sphere { radius: rng.random_range(0.3..0.9) * room },
            1 => {
                let s = room / 3f64.sqrt();
                PrimitiveKind::Box {
                    half_extents: [0; 3].map(|_| rng.random_range(0.3..0.95) * s),
                }
            }
            _ => {
                let major = rng.random_range(0.45..0.65) * room;
                PrimitiveKind::Torus { major, minor: rng.random_range(0.4..0.9) * (room - major) }
            }
        };
        Primitive {
            kind,
            center,
            density: rng.random_range(0.5..=1.0),
            color: Some(random_color(rng)),
        }
    };
    (0..count)
        .map(|i| {
            let parts = if rng.random_bool(0.25) {
                vec![one(rng, 0.95), one(rng, 0.95)]
            } else {
                vec![one(rng, 0.95)]
            };
            ShapeRecipe::new(format!("shape{i:03}"), parts).expect("mixed family stays in bounds")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sphere_volume_matches_analytic() {
        let n = 32;
        let r = 0.5;
        let g = ShapeRecipe::new("s", vec![Primitive::sphere([0.0; 3], r, 1.0)])
            .unwrap()
            .voxelize(1, n)
            .unwrap();
        let count = g.values().iter().filter(|&&v| v > 0.0).count() as f64;
        let want = 4.0 / 3.0 * std::f64::consts::PI * (r * n as f64 / 2.0).powi(3);
        assert!((count - want).abs() / want < 0.05, "{count} vs {want}");
    }

    #[test]
    fn zero_radius_is_empty() {
        let g = ShapeRecipe::new("s", vec![Primitive::sphere([0.0; 3], 0.0, 1.0)])
            .unwrap()
            .voxelize(4, 8)
            .unwrap();
        assert!(g.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn out_of_bounds_recipes_rejected() {
        let bad = [
            Primitive::sphere([0.5, 0.0, 0.0], 0.6, 1.0),
            Primitive::sphere([0.0; 3], 0.5, 1.5),
            Primitive::sphere([0.0; 3], -0.1, 1.0),
            Primitive::sphere([0.0; 3], 0.5, 1.0).with_color([2.0, 0.0, 0.0]),
            Primitive { kind: PrimitiveKind::Box { half_extents: [0.6; 3] }, center: [0.0; 3], density: 1.0, color: None },
            Primitive { kind: PrimitiveKind::Torus { major: 0.8, minor: 0.3 }, center: [0.0; 3], density: 1.0, color: None },
        ];
        for p in bad {
            assert!(matches!(ShapeRecipe::new("x", vec![p]), Err(Error::Value(_))), "{p:?}");
        }
        assert!(ShapeRecipe::new("x", vec![]).is_err());
        assert!(ShapeRecipe::new("a,b", vec![Primitive::sphere([0.0; 3], 0.1, 1.0)]).is_err());
    }

    #[test]
    fn emission_grids_follow_channel_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for recipe in mixed_family(12, &mut rng) {
            let g = recipe.voxelize(4, 16).unwrap();
            assert_eq!(g.channels(), 4);
            assert!(g.values().iter().all(|v| (0.0..=1.0).contains(v)));
            let n3 = 16usize.pow(3);
            for i in 0..n3 {
                if g.values()[3 * n3 + i] == 0.0 {
                    assert!((0..3).all(|c| g.values()[c * n3 + i] == 0.0));
                }
            }
        }
    }

    #[test]
    fn overlapping_parts_take_the_densest() {
        let r = ShapeRecipe::new(
            "u",
            vec![Primitive::sphere([0.0; 3], 0.5, 0.4), Primitive::sphere([0.0; 3], 0.3, 0.9)],
        )
        .unwrap();
        let g = r.voxelize(1, 8).unwrap();
        assert_eq!(g.get(0, 4, 4, 4), 0.9);
        assert_eq!(g.get(0, 4, 4, 5), 0.4);
    }

    #[test]
    fn families_are_deterministic_and_in_bounds() {
        let a = mixed_family(30, &mut ChaCha8Rng::seed_from_u64(1));
        let b = mixed_family(30, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(a, b);
        for r in a.iter().chain(&sphere_family(30, &mut ChaCha8Rng::seed_from_u64(2))) {
            assert!(r.parts().iter().all(|p| p.extent() <= 1.0));
        }
    }
}
