//! Finite-difference checks of the differentiable pipeline, run by the
//! `gradcheck` subcommand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diffcore::{finite_difference_check, finite_difference_check_at, GradCheck, NdArray};
use crate::error::{Error, Result};
use crate::networks::{Architecture, Networks};
use crate::render::{project_var, ImageFormation};
use crate::training::{generator_objective_var, reconstruction_loss_var, TrainConfig};
use crate::volume::{rotate_resample_var, ViewDirection};

/// Central-difference step used throughout.
pub const STEP: f64 = 1e-4;
/// Tolerance for renderers and losses.
pub const TIGHT: f64 = 1e-4;
/// Tolerance for resampling and network paths.
pub const LOOSE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteEntry {
    pub name: String,
    pub check: GradCheck,
    pub tolerance: f64,
}

impl SuiteEntry {
    pub fn passes(&self) -> bool {
        self.check.passes(self.tolerance)
    }
}

fn uniform(rng: &mut ChaCha8Rng, dims: &[usize], lo: f64, hi: f64) -> NdArray<f64> {
    let n = dims.iter().product();
    NdArray::from_vec(dims, (0..n).map(|_| rng.random_range(lo..hi)).collect())
}

/// A network small enough for coordinate-wise checks at resolution `n`.
pub fn tiny_architecture(formation: ImageFormation, n: usize) -> Architecture {
    Architecture {
        resolution: n,
        image_channels: formation.image_channels(),
        voxel_channels: formation.voxel_channels(),
        z_dim: 3,
        encoder: vec![2],
        generator: vec![3, 2],
        discriminator: vec![2],
    }
}

/// Checks, in 64-bit with step [`STEP`]: cumulative product (with exact
/// zeros), the projection of `formation`, rotation resampling at an
/// off-axis view, the reconstruction loss, and the full encoder/generator
/// objective on tiny networks (with respect to the generator output and to
/// sampled generator weights).
pub fn gradient_suite(formation: ImageFormation, n: usize, seed: u64) -> Result<Vec<SuiteEntry>> {
    let arch = tiny_architecture(formation, n);
    arch.validate()
        .map_err(|_| Error::Config(format!("gradcheck resolution {n} must be a positive multiple of 4")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = formation.voxel_channels();
    let grid_dims = [c, n, n, n];
    let image_dims = [formation.image_channels(), n, n];
    let mut out = Vec::new();
    let mut push = |name: String, check: GradCheck, tolerance: f64| out.push(SuiteEntry { name, check, tolerance });

    let mut rays = uniform(&mut rng, &[3, 8], -1.5, 1.5);
    rays.as_mut_slice()[3] = 0.0;
    rays.as_mut_slice()[9] = 0.0;
    rays.as_mut_slice()[10] = 0.0;
    let w = uniform(&mut rng, &[3, 8], -1.0, 1.0);
    push(
        "cumulative_product".into(),
        finite_difference_check(|t, x| x.cumprod(1).mul(&t.constant(w.clone())).sum(), &rays, STEP),
        TIGHT,
    );
    push(
        "cumulative_product_exclusive".into(),
        finite_difference_check(|t, x| x.cumprod_exclusive(1).mul(&t.constant(w.clone())).sum(), &rays, STEP),
        TIGHT,
    );

    let v = uniform(&mut rng, &grid_dims, 0.05, 0.95);
    let wi = uniform(&mut rng, &image_dims, -1.0, 1.0);
    push(
        format!("projection_{}", formation.name()),
        finite_difference_check(
            |t, x| project_var(x, formation).unwrap().mul(&t.constant(wi.clone())).sum(),
            &v,
            STEP,
        ),
        TIGHT,
    );

    let view = ViewDirection::from_angles(37.0, 23.0)?;
    let wg = uniform(&mut rng, &grid_dims, -1.0, 1.0);
    push(
        "rotate_resample".into(),
        finite_difference_check(|t, x| rotate_resample_var(x, &view).mul(&t.constant(wg.clone())).sum(), &v, STEP),
        LOOSE,
    );

    let target = uniform(&mut rng, &image_dims, 0.0, 1.0);
    push(
        "reconstruction_loss".into(),
        finite_difference_check(
            |t, x| reconstruction_loss_var(t.constant(target.clone()), x, formation).unwrap(),
            &v,
            STEP,
        ),
        TIGHT,
    );

    let mut nets = Networks::<f64>::init(arch, &mut rng)?;
    // Larger weights and nonzero biases keep leaky-rectifier inputs away from
    // zero, where central differences straddle the kink.
    for i in 0..nets.params().len() {
        let p = nets.params().param(i);
        let value = if p.name.ends_with(".b") {
            uniform(&mut rng, p.value.dims(), -0.5, 0.5)
        } else {
            p.value.scale(10.0)
        };
        nets.params_mut().set(i, value);
    }
    let config = TrainConfig {
        resolution: n,
        formation,
        ..TrainConfig::default()
    };
    let image = target.clone();
    let objective_view = ViewDirection::from_angles(-61.0, 14.0)?;
    push(
        "generator_objective_wrt_volume".into(),
        finite_difference_check(
            |t, x| {
                let b = nets.bind(t);
                generator_objective_var(&nets, &b, t.constant(image.clone()), x, &objective_view, &config).unwrap()
            },
            &v,
            STEP,
        ),
        LOOSE,
    );
    for (k, p) in nets.params().iter().enumerate() {
        if !p.name.starts_with("gen.") && !p.name.starts_with("enc.") {
            continue;
        }
        let x = (*p.value).clone();
        let coords: Vec<usize> = (0..x.len().min(6)).map(|i| (i * 7919 + 11) % x.len()).collect();
        let check = finite_difference_check_at(
            |t, param| {
                let mut b = nets.bind(t);
                b.replace(k, param);
                let img = t.constant(image.clone());
                let v = nets.generate_var(&b, nets.encode_var(&b, img));
                generator_objective_var(&nets, &b, img, v, &objective_view, &config).unwrap()
            },
            &x,
            STEP,
            &coords,
        );
        push(format!("generator_objective_wrt_{}", p.name), check, LOOSE);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_for_every_formation() {
        for f in [ImageFormation::VH, ImageFormation::AO, ImageFormation::EA_PAPER, ImageFormation::EA_COMPOSITE] {
            for e in gradient_suite(f, 4, 1).unwrap() {
                assert!(e.passes(), "{f} {}: {:?}", e.name, e.check);
            }
        }
    }

    #[test]
    fn bad_resolution_is_a_config_error() {
        assert!(matches!(gradient_suite(ImageFormation::AO, 6, 0), Err(Error::Config(_))));
    }
}
