//! Property tests for the compositing layers, rotation and metrics.

use platonic::metrics::{chamfer_weighted, iou, rmse, ssim, Chamfer};
use platonic::render::{project, render, ImageFormation};
use platonic::volume::{resample_by, rotate_resample, Image, ViewDirection, VoxelGrid};
use proptest::prelude::*;

const N: usize = 4;

fn unit_values(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0..=1.0f64], len)
}

fn grid(channels: usize) -> impl Strategy<Value = VoxelGrid<f64>> {
    unit_values(channels * N * N * N).prop_map(move |v| VoxelGrid::new(channels, N, v).unwrap())
}

fn density_modes() -> [ImageFormation; 2] {
    [ImageFormation::VH, ImageFormation::AO]
}

/// Reorders every depth column by `perm`.
fn permute_depth(g: &VoxelGrid<f64>, perm: &[usize]) -> VoxelGrid<f64> {
    VoxelGrid::from_fn(g.channels(), N, |c, z, y, x| g.get(c, perm[z], y, x))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn density_projections_stay_in_unit_range(g in grid(1)) {
        for f in density_modes() {
            prop_assert!(project(&g, f).unwrap().values().iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }

    #[test]
    fn density_projections_ignore_depth_order(g in grid(1), perm in Just((0..N).collect::<Vec<_>>()).prop_shuffle()) {
        let h = permute_depth(&g, &perm);
        for f in density_modes() {
            let a = project(&g, f).unwrap();
            let b = project(&h, f).unwrap();
            prop_assert!(a.array().max_abs_diff(b.array()) <= 1e-12);
        }
    }

    #[test]
    fn density_projections_are_monotone(g in grid(1), bump in unit_values(N * N * N)) {
        let h = VoxelGrid::from_fn(1, N, |c, z, y, x| {
            let v = g.get(c, z, y, x);
            v + (1.0 - v) * bump[(z * N + y) * N + x]
        });
        for f in density_modes() {
            let a = project(&g, f).unwrap();
            let b = project(&h, f).unwrap();
            prop_assert!(a.values().iter().zip(b.values()).all(|(p, q)| q >= p));
        }
    }

    #[test]
    fn single_opaque_voxel_shows_its_emission(
        color in proptest::array::uniform3(0.0..=1.0f64),
        depth in 0..N,
        behind in unit_values(4 * N),
    ) {
        // opaque voxel at `depth`, arbitrary matter behind it, nothing in front
        let g = VoxelGrid::from_fn(4, N, |c, z, y, x| {
            if (y, x) != (0, 0) || z < depth {
                0.0
            } else if z == depth {
                if c == 3 { 1.0 } else { color[c] }
            } else {
                behind[c * N + z]
            }
        });
        let img = project(&g, ImageFormation::EA_COMPOSITE).unwrap();
        for c in 0..3 {
            prop_assert!((img.get(c, 0, 0) - color[c]).abs() <= 1e-12);
        }
        if depth == N - 1 {
            let img = project(&g, ImageFormation::EA_PAPER).unwrap();
            for c in 0..3 {
                prop_assert!((img.get(c, 0, 0) - color[c]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn identity_rotation_is_exact(g in grid(4)) {
        prop_assert_eq!(rotate_resample(&g, &ViewDirection::canonical()), g.clone());
        prop_assert_eq!(rotate_resample(&g, &ViewDirection::from_angles(0.0, 0.0).unwrap()), g);
    }

    #[test]
    fn metric_identities(g in grid(4), img in unit_values(3 * N * N)) {
        let img = Image::new(3, N, img).unwrap();
        prop_assert!((ssim(&img, &img).unwrap() - 1.0).abs() <= 1e-12);
        prop_assert_eq!(rmse(&g, &g).unwrap(), 0.0);
        prop_assert_eq!(iou(&g, &g, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn chamfer_ignores_target_density_where_source_is_present(g in grid(1)) {
        // every occupied source voxel is matched at distance zero
        prop_assert_eq!(chamfer_weighted(&g, &g, 1e-3).unwrap(), Chamfer::Distance(0.0));
    }
}

#[test]
fn emission_absorption_depends_on_order() {
    let column = |a: [f64; 2], e: [f64; 2]| {
        VoxelGrid::from_fn(4, 2, |c, z, y, x| {
            if (y, x) != (0, 0) {
                0.0
            } else if c == 3 {
                a[z]
            } else {
                e[z]
            }
        })
    };
    for f in [ImageFormation::EA_PAPER, ImageFormation::EA_COMPOSITE] {
        let front = project(&column([0.9, 0.2], [1.0, 0.0]), f).unwrap().get(0, 0, 0);
        let back = project(&column([0.2, 0.9], [0.0, 1.0]), f).unwrap().get(0, 0, 0);
        assert!((front - back).abs() > 1e-2, "{f}: {front} vs {back}");
    }
}

#[test]
fn paper_and_composite_weights_on_two_voxels() {
    let g = VoxelGrid::from_fn(4, 2, |c, _, y, x| {
        if (y, x) != (0, 0) {
            0.0
        } else if c == 3 {
            0.5
        } else {
            1.0
        }
    });
    assert_eq!(project(&g, ImageFormation::EA_PAPER).unwrap().get(0, 0, 0), 1.25);
    assert_eq!(project(&g, ImageFormation::EA_COMPOSITE).unwrap().get(0, 0, 0), 0.75);
}

#[test]
fn full_density_grids_have_zero_self_distance() {
    let g = VoxelGrid::<f64>::from_fn(1, N, |_, _, _, _| 1.0);
    assert_eq!(chamfer_weighted(&g, &g, 1e-3).unwrap(), Chamfer::Distance(0.0));
}

fn blob(n: usize, center: [f64; 3], sigma: f64) -> VoxelGrid<f64> {
    let c = |i: usize| (i as f64 + 0.5) / n as f64 * 2.0 - 1.0;
    VoxelGrid::from_fn(1, n, |_, z, y, x| {
        let d2 = (c(x) - center[0]).powi(2) + (c(y) - center[1]).powi(2) + (c(z) - center[2]).powi(2);
        (-d2 / (2.0 * sigma * sigma)).exp()
    })
}

#[test]
fn antipodal_absorption_views_are_mirror_images() {
    let n = 12;
    let g = blob(n, [0.2, -0.1, 0.3], 0.3);
    for (az, el) in [(0.0, 0.0), (37.0, 23.0), (-120.0, -50.0), (90.0, 10.0)] {
        let v = ViewDirection::from_angles(az, el).unwrap();
        let a = render(&v, &g, ImageFormation::AO).unwrap();
        let b = render(&v.antipode(), &g, ImageFormation::AO).unwrap();
        for y in 0..n {
            for x in 0..n {
                let (p, q) = (a.get(0, y, x), b.get(0, y, n - 1 - x));
                assert!((p - q).abs() <= 1e-9, "({az},{el}) at ({y},{x}): {p} vs {q}");
            }
        }
    }
}

#[test]
fn rotation_preserves_blob_mass() {
    let n = 32;
    let g = blob(n, [0.05, -0.1, 0.08], 0.2);
    let mass: f64 = g.values().iter().sum();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(4);
    for _ in 0..8 {
        let v = platonic::volume::sample_view(&mut rng);
        let r: f64 = rotate_resample(&g, &v).values().iter().sum();
        assert!((r / mass - 1.0).abs() < 0.02, "mass ratio {}", r / mass);
    }
}

#[test]
fn rotation_round_trip_is_faithful() {
    let n = 32;
    let g = blob(n, [0.0, 0.1, -0.05], 0.25);
    for (az, el) in [(30.0, 20.0), (135.0, -40.0), (-75.0, 65.0)] {
        let rot = ViewDirection::from_angles(az, el).unwrap().rotation();
        let back = resample_by(&resample_by(&g, &rot), &rot.inverse());
        let mse = g.values().iter().zip(back.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
            / g.values().len() as f64;
        let psnr = 10.0 * (1.0 / mse).log10();
        assert!(psnr > 30.0, "({az},{el}): {psnr:.1} dB");
    }
}
