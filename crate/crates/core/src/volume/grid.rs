use crate::diffcore::{NdArray, Real};
use crate::error::{Error, Result};

/// Excursions this far outside `[0, 1]` are rounding noise and get clamped.
const RANGE_SLACK: f64 = 1e-9;

fn check_unit_range<T: Real>(values: &mut [T]) -> Result<()> {
    for v in values.iter_mut() {
        let f = v.to_f64_lossy();
        if !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&f) {
            return Err(Error::Value(format!("voxel value {f} outside [0, 1]")));
        }
        *v = v.max(T::zero()).min(T::one());
    }
    Ok(())
}

/// Cubic `n_c x n_p^3` field of densities (and emissions), layout
/// channel-major then z, y, x. Values lie in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid<T = f32> {
    data: NdArray<T>,
}

impl<T: Real> VoxelGrid<T> {
    pub fn new(channels: usize, resolution: usize, values: Vec<T>) -> Result<Self> {
        let arr = NdArray::new(vec![channels, resolution, resolution, resolution], values)?;
        Self::from_array(arr)
    }

    /// Wraps a `[n_c, n, n, n]` array, validating the value range.
    pub fn from_array(mut data: NdArray<T>) -> Result<Self> {
        let d = data.dims();
        if d.len() != 4 || d[1] != d[2] || d[2] != d[3] {
            return Err(Error::Shape(format!(
                "voxel grid must be [n_c, n, n, n], got {d:?}"
            )));
        }
        check_unit_range(data.as_mut_slice())?;
        Ok(Self { data })
    }

    pub fn zeros(channels: usize, resolution: usize) -> Self {
        Self {
            data: NdArray::zeros(&[channels, resolution, resolution, resolution]),
        }
    }

    /// Fills from `f(channel, z, y, x)`; values are clamped into `[0, 1]`.
    pub fn from_fn(
        channels: usize,
        resolution: usize,
        mut f: impl FnMut(usize, usize, usize, usize) -> T,
    ) -> Self {
        let n = resolution;
        let data = NdArray::from_fn(&[channels, n, n, n], |i| {
            let (c, r) = (i / (n * n * n), i % (n * n * n));
            f(c, r / (n * n), (r / n) % n, r % n)
                .max(T::zero())
                .min(T::one())
        });
        Self { data }
    }

    pub fn channels(&self) -> usize {
        self.data.dims()[0]
    }

    pub fn resolution(&self) -> usize {
        self.data.dims()[1]
    }

    pub fn values(&self) -> &[T] {
        self.data.as_slice()
    }

    pub fn array(&self) -> &NdArray<T> {
        &self.data
    }

    pub fn into_array(self) -> NdArray<T> {
        self.data
    }

    pub fn get(&self, c: usize, z: usize, y: usize, x: usize) -> T {
        let n = self.resolution();
        self.data.as_slice()[((c * n + z) * n + y) * n + x]
    }

    pub fn set(&mut self, c: usize, z: usize, y: usize, x: usize, v: T) {
        let n = self.resolution();
        self.data.as_mut_slice()[((c * n + z) * n + y) * n + x] = v.max(T::zero()).min(T::one());
    }

    /// One channel as a single-channel grid.
    pub fn channel(&self, c: usize) -> VoxelGrid<T> {
        let n3 = self.resolution().pow(3);
        let n = self.resolution();
        Self {
            data: NdArray::from_vec(&[1, n, n, n], self.values()[c * n3..(c + 1) * n3].to_vec()),
        }
    }

    pub fn cast<U: Real>(&self) -> VoxelGrid<U> {
        VoxelGrid {
            data: self.data.cast(),
        }
    }
}

/// `n_c x n_p^2` raster, layout channel-major then y (up), x (right).
#[derive(Debug, Clone, PartialEq)]
pub struct Image<T = f32> {
    data: NdArray<T>,
}

impl<T: Real> Image<T> {
    pub fn new(channels: usize, resolution: usize, values: Vec<T>) -> Result<Self> {
        Self::from_array(NdArray::new(vec![channels, resolution, resolution], values)?)
    }

    pub fn from_array(data: NdArray<T>) -> Result<Self> {
        let d = data.dims();
        if d.len() != 3 || d[1] != d[2] {
            return Err(Error::Shape(format!("image must be [n_c, n, n], got {d:?}")));
        }
        Ok(Self { data })
    }

    pub fn zeros(channels: usize, resolution: usize) -> Self {
        Self {
            data: NdArray::zeros(&[channels, resolution, resolution]),
        }
    }

    pub fn from_fn(channels: usize, resolution: usize, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let n = resolution;
        Self {
            data: NdArray::from_fn(&[channels, n, n], |i| f(i / (n * n), (i / n) % n, i % n)),
        }
    }

    pub fn channels(&self) -> usize {
        self.data.dims()[0]
    }

    pub fn resolution(&self) -> usize {
        self.data.dims()[1]
    }

    pub fn values(&self) -> &[T] {
        self.data.as_slice()
    }

    pub fn array(&self) -> &NdArray<T> {
        &self.data
    }

    pub fn into_array(self) -> NdArray<T> {
        self.data
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> T {
        let n = self.resolution();
        self.data.as_slice()[(c * n + y) * n + x]
    }

    pub fn is_unit_range(&self) -> bool {
        self.values().iter().all(|&v| v >= T::zero() && v <= T::one())
    }

    /// Copy with every value clamped into `[0, 1]`.
    pub fn clamped(&self) -> Self {
        Self {
            data: self.data.map(|v| v.max(T::zero()).min(T::one())),
        }
    }

    pub fn cast<U: Real>(&self) -> Image<U> {
        Image {
            data: self.data.cast(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_enforces_shape_and_range() {
        assert!(VoxelGrid::<f32>::new(1, 2, vec![0.5; 8]).is_ok());
        assert!(VoxelGrid::<f32>::new(1, 2, vec![0.5; 7]).is_err());
        assert!(VoxelGrid::<f32>::new(1, 2, vec![1.5; 8]).is_err());
        assert!(VoxelGrid::<f64>::new(1, 1, vec![f64::NAN]).is_err());
        let g = VoxelGrid::<f64>::new(1, 1, vec![1.0 + 1e-12]).unwrap();
        assert_eq!(g.values(), &[1.0]);
    }

    #[test]
    fn grid_indexing_is_channel_major_zyx() {
        let g = VoxelGrid::<f64>::from_fn(2, 3, |c, z, y, x| {
            (c * 27 + z * 9 + y * 3 + x) as f64 / 100.0
        });
        assert_eq!(g.get(1, 2, 0, 1), (27 + 18 + 1) as f64 / 100.0);
        assert_eq!(g.values()[27 + 18 + 1], g.get(1, 2, 0, 1));
        assert_eq!(g.channel(1).get(0, 2, 0, 1), g.get(1, 2, 0, 1));
    }

    #[test]
    fn image_value_count() {
        assert!(Image::<f32>::new(3, 4, vec![0.0; 48]).is_ok());
        assert!(Image::<f32>::new(3, 4, vec![0.0; 47]).is_err());
    }
}
