use crate::diffcore::{log_sigmoid, Real, Tape, Var};
use crate::error::{Error, Result};
use crate::render::{project_var, ImageFormation};
use crate::volume::{Image, VoxelGrid};

/// Squared L2 distance between `image` and the canonical-view render of `v`.
pub fn reconstruction_loss_var<'t, T: Real>(
    image: Var<'t, T>,
    v: Var<'t, T>,
    formation: ImageFormation,
) -> Result<Var<'t, T>> {
    let front = project_var(v, formation)?;
    if front.dims() != image.dims() {
        return Err(Error::Shape(format!(
            "image {:?} does not match render {:?}",
            image.dims(),
            front.dims()
        )));
    }
    let d = front.sub(&image);
    Ok(d.mul(&d).sum())
}

pub fn reconstruction_loss<T: Real>(image: &Image<T>, v: &VoxelGrid<T>, formation: ImageFormation) -> Result<T> {
    let tape = Tape::new();
    let l = reconstruction_loss_var(
        tape.constant(image.array().clone()),
        tape.constant(v.array().clone()),
        formation,
    )?;
    let value = l.value().item();
    Ok(value)
}

/// `log D(real) + log(1 - D(fake))` from logits; the discriminator ascends it.
pub fn discriminator_loss(real_logit: f64, fake_logit: f64) -> f64 {
    log_sigmoid(real_logit) + log_sigmoid(-fake_logit)
}

pub fn discriminator_loss_var<'t, T: Real>(real_logit: Var<'t, T>, fake_logit: Var<'t, T>) -> Var<'t, T> {
    real_logit.log_sigmoid().add(&(-fake_logit).log_sigmoid())
}

/// `log(1 - D(fake))`, or `-log D(fake)` when `non_saturating`; minimized.
pub fn generator_loss(fake_logit: f64, non_saturating: bool) -> f64 {
    if non_saturating {
        -log_sigmoid(fake_logit)
    } else {
        log_sigmoid(-fake_logit)
    }
}

pub fn generator_loss_var<'t, T: Real>(fake_logit: Var<'t, T>, non_saturating: bool) -> Var<'t, T> {
    if non_saturating {
        -fake_logit.log_sigmoid()
    } else {
        (-fake_logit).log_sigmoid()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::finite_difference_check;
    use crate::render::project;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_sigmoid(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    #[test]
    fn discriminator_loss_examples() {
        assert!((discriminator_loss(0.0, 0.0) - 2.0 * 0.5f64.ln()).abs() < 1e-12);
        assert!((discriminator_loss(-1e-4, 1e-4) + 1.3863).abs() < 1e-3);
        assert!(discriminator_loss(800.0, -800.0).abs() < 1e-300);
        assert!(discriminator_loss(-800.0, 800.0).is_finite());
    }

    #[test]
    fn generator_loss_examples() {
        assert!((generator_loss(0.0, false) - 0.5f64.ln()).abs() < 1e-12);
        assert!(generator_loss(10.0, false) < generator_loss(-10.0, false));
        assert!(generator_loss(10.0, true) < generator_loss(-10.0, true));
    }

    #[test]
    fn losses_match_naive_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let (r, f) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let naive_d = naive_sigmoid(r).ln() + (1.0 - naive_sigmoid(f)).ln();
            assert!((discriminator_loss(r, f) - naive_d).abs() < 1e-10);
            assert!((generator_loss(f, false) - (1.0 - naive_sigmoid(f)).ln()).abs() < 1e-10);
            assert!((generator_loss(f, true) + naive_sigmoid(f).ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn var_forms_agree_with_scalar_forms() {
        let tape = Tape::<f64>::new();
        let r = tape.constant(crate::diffcore::NdArray::scalar(1.3));
        let f = tape.constant(crate::diffcore::NdArray::scalar(-0.4));
        assert!((discriminator_loss_var(r, f).value().item() - discriminator_loss(1.3, -0.4)).abs() < 1e-15);
        for ns in [false, true] {
            assert!((generator_loss_var(f, ns).value().item() - generator_loss(-0.4, ns)).abs() < 1e-15);
        }
    }

    #[test]
    fn reconstruction_examples() {
        let v = VoxelGrid::<f64>::from_fn(1, 2, |_, z, y, x| ((z + y + x) % 3) as f64 / 3.0);
        let own = project(&v, ImageFormation::AO).unwrap();
        assert_eq!(reconstruction_loss(&own, &v, ImageFormation::AO).unwrap(), 0.0);

        let ones = VoxelGrid::<f64>::from_fn(1, 2, |_, _, _, _| 1.0);
        let zeros = Image::<f64>::zeros(1, 2);
        assert_eq!(reconstruction_loss(&zeros, &ones, ImageFormation::AO).unwrap(), 4.0);
        assert!(matches!(
            reconstruction_loss(&Image::<f64>::zeros(1, 4), &ones, ImageFormation::AO),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn reconstruction_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for formation in [ImageFormation::VH, ImageFormation::AO, ImageFormation::EA_PAPER, ImageFormation::EA_COMPOSITE] {
            let c = formation.voxel_channels();
            let v: Vec<f64> = (0..c * 64).map(|_| rng.random_range(0.05..0.95)).collect();
            let img: Vec<f64> = (0..formation.image_channels() * 16).map(|_| rng.random()).collect();
            let img = crate::diffcore::NdArray::from_vec(&[formation.image_channels(), 4, 4], img);
            let x = crate::diffcore::NdArray::from_vec(&[c, 4, 4, 4], v);
            let check = finite_difference_check(
                |tape, v| reconstruction_loss_var(tape.constant(img.clone()), v, formation).unwrap(),
                &x,
                1e-4,
            );
            assert!(check.passes(1e-4), "{formation}: {check:?}");
        }
    }
}
