use crate::diffcore::{Real, Tape, Var};
use crate::error::{Error, Result};
use crate::volume::{rotate_resample_var, Image, ViewDirection, VoxelGrid};

use super::{FormationMode, ImageFormation, ScanKind, LOG_DOMAIN_FLOOR};

/// Depth axis of a `[n_c, z, y, x]` camera-space grid.
const DEPTH: usize = 1;

/// `1 - exp(-sum_i v_i)` per pixel of a `[1, n, n, n]` camera-space grid.
pub fn project_vh<'t, T: Real>(v: Var<'t, T>) -> Var<'t, T> {
    v.sum_axis(DEPTH).scale(-T::one()).exp().one_minus()
}

/// `1 - prod_i (1 - v_i)` per pixel.
pub fn project_ao<'t, T: Real>(v: Var<'t, T>, scan: ScanKind) -> Var<'t, T> {
    let n = v.dims()[DEPTH];
    let through = match scan {
        ScanKind::CumProd => v.one_minus().cumprod(DEPTH).select(DEPTH, n - 1),
        ScanKind::LogCumSum => log_survival(v).sum_axis(DEPTH).exp(),
    };
    through.one_minus()
}

fn log_survival<'t, T: Real>(a: Var<'t, T>) -> Var<'t, T> {
    a.one_minus()
        .clamp(T::from_f64_lossy(LOG_DOMAIN_FLOOR), T::one())
        .ln()
}

/// `prod_{j<=i} (1 - a_j)` (inclusive) or `prod_{j<i}` along depth.
fn transmittance<'t, T: Real>(a: Var<'t, T>, exclusive: bool, scan: ScanKind) -> Var<'t, T> {
    match scan {
        ScanKind::CumProd if exclusive => a.one_minus().cumprod_exclusive(DEPTH),
        ScanKind::CumProd => a.one_minus().cumprod(DEPTH),
        ScanKind::LogCumSum => {
            let l = log_survival(a);
            let c = l.cumsum(DEPTH);
            if exclusive { c.sub(&l) } else { c }.exp()
        }
    }
}

/// Emission-absorption over a `[4, n, n, n]` camera-space grid whose first
/// three channels are emission and last is absorption; yields `[3, n, n]`.
pub fn project_ea<'t, T: Real>(v: Var<'t, T>, formation: ImageFormation) -> Var<'t, T> {
    let a = v.slice0(3, 1);
    let weight = match formation.mode {
        FormationMode::EmissionAbsorptionPaper => {
            transmittance(a, false, formation.scan).one_minus()
        }
        FormationMode::EmissionAbsorptionComposite => {
            transmittance(a, true, formation.scan).mul(&a)
        }
        _ => panic!("project_ea called with {formation}"),
    };
    let channels: Vec<Var<'t, T>> = (0..3)
        .map(|c| weight.mul(&v.slice0(c, 1)).sum_axis(DEPTH))
        .collect();
    Var::concat0(&channels)
}

/// Projection of an already camera-aligned grid.
pub fn project_var<'t, T: Real>(v: Var<'t, T>, formation: ImageFormation) -> Result<Var<'t, T>> {
    let dims = v.dims();
    if dims.len() != 4 {
        return Err(Error::Shape(format!("expected [n_c, n, n, n], got {dims:?}")));
    }
    formation.check_channels(dims[0])?;
    Ok(match formation.mode {
        FormationMode::VisualHull => project_vh(v),
        FormationMode::AbsorptionOnly => project_ao(v, formation.scan),
        _ => project_ea(v, formation),
    })
}

/// `R(omega, v)`: rotate into the camera frame of `view`, then project.
pub fn render_var<'t, T: Real>(
    view: &ViewDirection,
    v: Var<'t, T>,
    formation: ImageFormation,
) -> Result<Var<'t, T>> {
    formation.check_channels(v.dims()[0])?;
    project_var(rotate_resample_var(v, view), formation)
}

pub fn project<T: Real>(grid: &VoxelGrid<T>, formation: ImageFormation) -> Result<Image<T>> {
    let tape = Tape::new();
    let out = project_var(tape.constant(grid.array().clone()), formation)?;
    Image::from_array((*out.value()).clone())
}

pub fn render<T: Real>(
    view: &ViewDirection,
    grid: &VoxelGrid<T>,
    formation: ImageFormation,
) -> Result<Image<T>> {
    let tape = Tape::new();
    let out = render_var(view, tape.constant(grid.array().clone()), formation)?;
    Image::from_array((*out.value()).clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(values: &[f64]) -> VoxelGrid<f64> {
        // a 1-pixel-wide "grid" is not cubic, so embed the ray in an n^3 grid
        // at pixel (0, 0) with the rest empty
        let n = values.len();
        VoxelGrid::from_fn(1, n, |_, z, y, x| if y == 0 && x == 0 { values[z] } else { 0.0 })
    }

    fn ea_column(a: &[f64], e: &[f64]) -> VoxelGrid<f64> {
        let n = a.len();
        VoxelGrid::from_fn(4, n, |c, z, y, x| {
            if y != 0 || x != 0 {
                0.0
            } else if c == 3 {
                a[z]
            } else {
                e[z]
            }
        })
    }

    fn pixel(g: &VoxelGrid<f64>, f: ImageFormation) -> f64 {
        project(g, f).unwrap().get(0, 0, 0)
    }

    #[test]
    fn vh_examples() {
        assert_eq!(pixel(&column(&[0.0, 0.0]), ImageFormation::VH), 0.0);
        let p = pixel(&column(&[0.6931]), ImageFormation::VH);
        assert!((p - (1.0 - (-0.6931f64).exp())).abs() < 1e-15);
        assert!((p - 0.5).abs() < 1e-4);
    }

    #[test]
    fn ao_examples() {
        assert!((pixel(&column(&[0.5, 0.5]), ImageFormation::AO) - 0.75).abs() < 1e-15);
        assert_eq!(pixel(&column(&[0.3, 1.0, 0.2]), ImageFormation::AO), 1.0);
        let p = pixel(&column(&[0.1; 8]), ImageFormation::AO);
        assert!((p - (1.0 - 0.9f64.powi(8))).abs() < 1e-14);
        assert!((p - 0.5695).abs() < 1e-4);
    }

    #[test]
    fn ea_examples() {
        let opaque = ea_column(&[1.0], &[0.8]);
        assert_eq!(pixel(&opaque, ImageFormation::EA_PAPER), 0.8);
        assert_eq!(pixel(&opaque, ImageFormation::EA_COMPOSITE), 0.8);
        let two = ea_column(&[0.5, 0.5], &[1.0, 1.0]);
        assert!((pixel(&two, ImageFormation::EA_PAPER) - 1.25).abs() < 1e-15);
        assert!((pixel(&two, ImageFormation::EA_COMPOSITE) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn log_domain_agrees_with_cumprod() {
        let g = ea_column(&[0.2, 0.7, 0.4, 0.9], &[0.3, 0.6, 1.0, 0.1]);
        for f in [ImageFormation::EA_PAPER, ImageFormation::EA_COMPOSITE] {
            let a = project(&g, f).unwrap();
            let b = project(&g, f.with_scan(ScanKind::LogCumSum)).unwrap();
            assert!(a.array().max_abs_diff(b.array()) < 1e-12);
        }
        let d = column(&[0.2, 0.7, 0.4, 0.9]);
        let a = project(&d, ImageFormation::AO).unwrap();
        let b = project(&d, ImageFormation::AO.with_scan(ScanKind::LogCumSum)).unwrap();
        assert!(a.array().max_abs_diff(b.array()) < 1e-12);
    }

    #[test]
    fn channel_mismatch_is_shape_error() {
        let g = VoxelGrid::<f64>::zeros(1, 2);
        assert!(matches!(project(&g, ImageFormation::EA_PAPER), Err(Error::Shape(_))));
        let g4 = VoxelGrid::<f64>::zeros(4, 2);
        assert!(matches!(project(&g4, ImageFormation::AO), Err(Error::Shape(_))));
    }
}
