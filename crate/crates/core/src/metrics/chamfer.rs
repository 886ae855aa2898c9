//! Weighted directional chamfer distance
//! `d(T, O) = 1/N sum_{p in T} min_{q in O} w_q |p - q|^2`
//! over voxel centers (in voxel units) whose density exceeds a small cutoff;
//! `w_q` is the density of `q` and `N` the voxel count of the grid.

use std::fmt;

use crate::diffcore::Real;
use crate::error::{Error, Result};
use crate::volume::VoxelGrid;

use super::density_channel;

pub const DEFAULT_OCCUPANCY_CUTOFF: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Chamfer {
    Distance(f64),
    /// `T` has points but `O` has none; the distance is unbounded.
    EmptyTarget,
}

impl Chamfer {
    pub fn value(&self) -> f64 {
        match self {
            Chamfer::Distance(d) => *d,
            Chamfer::EmptyTarget => f64::INFINITY,
        }
    }
}

impl fmt::Display for Chamfer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Chamfer::Distance(d) => write!(f, "{d}"),
            Chamfer::EmptyTarget => f.write_str("inf(empty-target)"),
        }
    }
}

fn occupied<T: Real>(g: &VoxelGrid<T>, cutoff: f64) -> Vec<([i64; 3], f64)> {
    let n = g.resolution();
    density_channel(g)
        .iter()
        .enumerate()
        .filter_map(|(i, &v)| {
            let v = v.to_f64_lossy();
            (v > cutoff).then(|| {
                let p = [(i % n) as i64, ((i / n) % n) as i64, (i / (n * n)) as i64];
                (p, v)
            })
        })
        .collect()
}

pub fn chamfer_weighted<T: Real>(t: &VoxelGrid<T>, o: &VoxelGrid<T>, cutoff: f64) -> Result<Chamfer> {
    if t.resolution() != o.resolution() {
        return Err(Error::Shape(format!(
            "chamfer of resolution {} vs {}",
            t.resolution(),
            o.resolution()
        )));
    }
    let n = t.resolution();
    let sources = occupied(t, cutoff);
    let mut targets = occupied(o, cutoff);
    if sources.is_empty() {
        return Ok(Chamfer::Distance(0.0));
    }
    if targets.is_empty() {
        return Ok(Chamfer::EmptyTarget);
    }
    let mut in_target = vec![false; n * n * n];
    for (p, _) in &targets {
        in_target[((p[2] as usize * n) + p[1] as usize) * n + p[0] as usize] = true;
    }
    // Ascending weight: distinct voxels are at least one unit apart, so a
    // candidate can only improve on `best` while its weight is below it.
    targets.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut total = 0.0;
    for (p, _) in &sources {
        if in_target[((p[2] as usize * n) + p[1] as usize) * n + p[0] as usize] {
            continue;
        }
        let mut best = f64::INFINITY;
        for (q, w) in &targets {
            if *w >= best {
                break;
            }
            let d2 = (0..3).map(|k| ((p[k] - q[k]) as f64).powi(2)).sum::<f64>();
            best = best.min(w * d2);
        }
        total += best;
    }
    Ok(Chamfer::Distance(total / (n * n * n) as f64))
}
