use rand::Rng;

use crate::error::{Error, Result};

/// Below this, an angle-derived component is treated as exactly zero so
/// axis-aligned views produce exact permutation matrices.
const SNAP: f64 = 1e-12;
/// Views closer than this to the world up axis use the fallback up vector.
const POLE_TOLERANCE: f64 = 1e-6;

const WORLD_UP: [f64; 3] = [0.0, 1.0, 0.0];
const FALLBACK_UP: [f64; 3] = [1.0, 0.0, 0.0];

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn normalized(a: [f64; 3]) -> [f64; 3] {
    let n = dot(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Camera position on the unit sphere. The camera looks at the origin with
/// an orthographic projection and a fixed upright (+y) orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewDirection {
    omega: [f64; 3],
}

impl ViewDirection {
    /// Normalizes any finite nonzero vector.
    pub fn new(v: [f64; 3]) -> Result<Self> {
        let n = dot(v, v).sqrt();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::Value(format!("view direction {v:?} is not normalizable")));
        }
        Ok(Self { omega: normalized(v) })
    }

    /// The input view of the reconstruction loss; its rotation is the identity.
    pub fn canonical() -> Self {
        Self {
            omega: [0.0, 0.0, -1.0],
        }
    }

    /// Azimuth about +y and elevation above the xz-plane, in degrees.
    /// `(0, 0)` is [`ViewDirection::canonical`].
    pub fn from_angles(azimuth_deg: f64, elevation_deg: f64) -> Result<Self> {
        let (az, el) = (azimuth_deg.to_radians(), elevation_deg.to_radians());
        let snap = |v: f64| if v.abs() < SNAP { 0.0 } else { v };
        let (ce, se) = (snap(el.cos()), snap(el.sin()));
        let (ca, sa) = (snap(az.cos()), snap(az.sin()));
        Self::new([sa * ce, se, -ca * ce])
    }

    /// Inverse of [`ViewDirection::from_angles`], azimuth in `(-180, 180]`.
    pub fn angles(&self) -> (f64, f64) {
        let [x, y, z] = self.omega;
        let el = y.clamp(-1.0, 1.0).asin().to_degrees();
        let az = if x == 0.0 && z == 0.0 {
            0.0
        } else {
            x.atan2(-z).to_degrees()
        };
        (az, el)
    }

    pub fn vector(&self) -> [f64; 3] {
        self.omega
    }

    pub fn antipode(&self) -> Self {
        let [x, y, z] = self.omega;
        Self { omega: [-x, -y, -z] }
    }

    pub fn rotation(&self) -> Rotation {
        rotation_from_view(self)
    }
}

/// Uniform direction on the unit sphere (area measure).
pub fn sample_view<R: Rng + ?Sized>(rng: &mut R) -> ViewDirection {
    // Archimedes: z uniform in [-1, 1] gives uniform area.
    let z: f64 = rng.random::<f64>() * 2.0 - 1.0;
    let phi: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    let r = (1.0 - z * z).max(0.0).sqrt();
    ViewDirection {
        omega: [r * phi.cos(), r * phi.sin(), z],
    }
}

/// World-to-camera rotation. Rows are the camera right, up and depth axes;
/// depth points along `-omega`, away from the camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    rows: [[f64; 3]; 3],
}

impl Rotation {
    pub fn identity() -> Self {
        Self {
            rows: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        self.rows
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    /// World point to camera coordinates.
    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        [dot(self.rows[0], p), dot(self.rows[1], p), dot(self.rows[2], p)]
    }

    /// Camera point back to world coordinates.
    pub fn apply_inverse(&self, p: [f64; 3]) -> [f64; 3] {
        let r = &self.rows;
        [
            r[0][0] * p[0] + r[1][0] * p[1] + r[2][0] * p[2],
            r[0][1] * p[0] + r[1][1] * p[1] + r[2][1] * p[2],
            r[0][2] * p[0] + r[1][2] * p[1] + r[2][2] * p[2],
        ]
    }

    /// The transpose, which undoes this rotation.
    pub fn inverse(&self) -> Self {
        let r = &self.rows;
        Self {
            rows: std::array::from_fn(|i| std::array::from_fn(|j| r[j][i])),
        }
    }

    pub fn determinant(&self) -> f64 {
        dot(self.rows[0], cross(self.rows[1], self.rows[2]))
    }

    /// `max |R R^T - I|` entrywise.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(self.rows[i], self.rows[j]) - want).abs());
            }
        }
        worst
    }
}

pub fn rotation_from_view(view: &ViewDirection) -> Rotation {
    let w = view.omega;
    let forward = [-w[0], -w[1], -w[2]];
    let up_hint = if dot(w, WORLD_UP).abs() > 1.0 - POLE_TOLERANCE {
        FALLBACK_UP
    } else {
        WORLD_UP
    };
    let right = normalized(cross(up_hint, forward));
    let up = cross(forward, right);
    Rotation {
        rows: [right, up, forward],
    }
}
