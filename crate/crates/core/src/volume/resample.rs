//! Rotation into camera space by trilinear resampling.
//!
//! Voxel centers sit at `(i + 0.5) / n` scaled to `[-1, 1]`. Each output
//! center is mapped back through the inverse rotation and interpolated from
//! the input grid; taps outside the cube read zero.

use std::sync::Arc;

use crate::diffcore::{GatherMap, Real, Tape, Var, TAPS};

use super::{Rotation, ViewDirection, VoxelGrid};

/// Continuous indices this close to an integer snap onto it, so exact
/// permutations (identity, axis-aligned quarter turns) carry no
/// interpolation error.
const INDEX_SNAP: f64 = 1e-9;

fn center(i: usize, n: usize) -> f64 {
    (i as f64 + 0.5) / n as f64 * 2.0 - 1.0
}

fn continuous_index(p: f64, n: usize) -> f64 {
    let u = (p + 1.0) * 0.5 * n as f64 - 0.5;
    let r = u.round();
    if (u - r).abs() < INDEX_SNAP {
        r
    } else {
        u
    }
}

/// The trilinear gather that takes a world-space grid of resolution `n` to
/// camera space under `rotation`.
pub fn resample_map<T: Real>(n: usize, rotation: &Rotation) -> GatherMap<T> {
    let n3 = n * n * n;
    let mut index = Vec::with_capacity(n3);
    let mut weight = Vec::with_capacity(n3);
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let w = rotation.apply_inverse([center(x, n), center(y, n), center(z, n)]);
                let u = [
                    continuous_index(w[0], n),
                    continuous_index(w[1], n),
                    continuous_index(w[2], n),
                ];
                let base = u.map(|v| v.floor());
                let frac = [u[0] - base[0], u[1] - base[1], u[2] - base[2]];
                let mut idx = [0u32; TAPS];
                let mut wt = [T::zero(); TAPS];
                for t in 0..TAPS {
                    let (dx, dy, dz) = (t & 1, (t >> 1) & 1, (t >> 2) & 1);
                    let ix = base[0] as i64 + dx as i64;
                    let iy = base[1] as i64 + dy as i64;
                    let iz = base[2] as i64 + dz as i64;
                    let inside = |i: i64| i >= 0 && i < n as i64;
                    if !(inside(ix) && inside(iy) && inside(iz)) {
                        continue;
                    }
                    let f = |d: usize, fr: f64| if d == 1 { fr } else { 1.0 - fr };
                    let w = f(dx, frac[0]) * f(dy, frac[1]) * f(dz, frac[2]);
                    if w == 0.0 {
                        continue;
                    }
                    idx[t] = ((iz as usize * n + iy as usize) * n + ix as usize) as u32;
                    wt[t] = T::from_f64_lossy(w);
                }
                index.push(idx);
                weight.push(wt);
            }
        }
    }
    GatherMap::new(n3, index, weight)
}

/// Tape-registered rotation of a `[n_c, n, n, n]` grid into the camera
/// frame of `view`. The identity view returns `grid` itself.
pub fn rotate_resample_var<'t, T: Real>(grid: Var<'t, T>, view: &ViewDirection) -> Var<'t, T> {
    let rotation = view.rotation();
    if rotation.is_identity() {
        return grid;
    }
    let dims = grid.dims();
    assert_eq!(dims.len(), 4, "rotate_resample needs [n_c, n, n, n]");
    let map = Arc::new(resample_map::<T>(dims[1], &rotation));
    grid.gather(map, &dims)
}

pub fn rotate_resample<T: Real>(grid: &VoxelGrid<T>, view: &ViewDirection) -> VoxelGrid<T> {
    resample_by(grid, &view.rotation())
}

/// Resamples `grid` under an arbitrary rotation, e.g. the inverse of a view.
pub fn resample_by<T: Real>(grid: &VoxelGrid<T>, rotation: &Rotation) -> VoxelGrid<T> {
    if rotation.is_identity() {
        return grid.clone();
    }
    let tape = Tape::new();
    let input = tape.constant(grid.array().clone());
    let dims = input.dims();
    let out = input.gather(Arc::new(resample_map::<T>(dims[1], rotation)), &dims);
    // Weights are convex, so anything outside [0, 1] is rounding.
    let values = out.value().map(|v| v.max(T::zero()).min(T::one()));
    VoxelGrid::from_array(values).expect("clamped to the unit range")
}
