use crate::diffcore::Real;
use crate::error::{Error, Result};
use crate::volume::VoxelGrid;

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

fn same_dims<T: Real>(a: &VoxelGrid<T>, b: &VoxelGrid<T>, what: &str) -> Result<()> {
    if a.array().dims() == b.array().dims() {
        Ok(())
    } else {
        Err(Error::Shape(format!(
            "{what} of {:?} vs {:?}",
            a.array().dims(),
            b.array().dims()
        )))
    }
}

/// The density field of a grid: the only channel, or the absorption
/// channel (last) of an emission grid.
pub fn density_channel<T: Real>(g: &VoxelGrid<T>) -> &[T] {
    let n3 = g.resolution().pow(3);
    let c = g.channels() - 1;
    &g.values()[c * n3..(c + 1) * n3]
}

/// Root mean squared difference over all channels and voxels.
pub fn rmse<T: Real>(a: &VoxelGrid<T>, b: &VoxelGrid<T>) -> Result<f64> {
    same_dims(a, b, "rmse")?;
    let sq: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| (x - y).to_f64_lossy().powi(2))
        .sum();
    Ok((sq / a.values().len() as f64).sqrt())
}

/// Intersection over union of the density fields binarized at
/// `value >= threshold`. Two empty occupancies count as identical (1).
pub fn iou<T: Real>(a: &VoxelGrid<T>, b: &VoxelGrid<T>, threshold: f64) -> Result<f64> {
    same_dims(a, b, "iou")?;
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Value(format!("iou threshold {threshold} not in (0, 1)")));
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in density_channel(a).iter().zip(density_channel(b)) {
        let (p, q) = (x.to_f64_lossy() >= threshold, y.to_f64_lossy() >= threshold);
        inter += (p && q) as usize;
        union += (p || q) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_examples() {
        let z = VoxelGrid::<f64>::zeros(1, 3);
        let o = VoxelGrid::<f64>::from_fn(1, 3, |_, _, _, _| 1.0);
        assert_eq!(rmse(&z, &z).unwrap(), 0.0);
        assert_eq!(rmse(&z, &o).unwrap(), 1.0);
        assert!(rmse(&z, &VoxelGrid::zeros(1, 2)).is_err());
    }

    #[test]
    fn iou_examples() {
        let a = VoxelGrid::<f64>::from_fn(1, 2, |_, z, _, _| if z == 0 { 1.0 } else { 0.0 });
        let b = VoxelGrid::<f64>::from_fn(1, 2, |_, z, _, _| if z == 1 { 1.0 } else { 0.0 });
        assert_eq!(iou(&a, &a, 0.5).unwrap(), 1.0);
        assert_eq!(iou(&a, &b, 0.5).unwrap(), 0.0);
        let empty = VoxelGrid::<f64>::zeros(1, 2);
        assert_eq!(iou(&empty, &empty, 0.5).unwrap(), 1.0);
        assert!(iou(&a, &b, 1.0).is_err());
    }

    #[test]
    fn emission_grids_use_absorption_channel() {
        let g = VoxelGrid::<f64>::from_fn(4, 2, |c, _, _, _| if c == 3 { 0.25 } else { 0.9 });
        assert!(density_channel(&g).iter().all(|&v| v == 0.25));
    }
}
