use super::{NdArray, Real};

/// Taps per output sample; eight covers trilinear interpolation.
pub const TAPS: usize = 8;

/// Fixed-arity sparse linear map `out[o] = sum_t weight[o][t] * in[index[o][t]]`,
/// applied independently to every leading channel of the operand.
///
/// Unused taps carry weight zero. The adjoint scatters with the same weights.
#[derive(Debug, Clone)]
pub struct GatherMap<T> {
    in_len: usize,
    out_len: usize,
    index: Vec<[u32; TAPS]>,
    weight: Vec<[T; TAPS]>,
}

impl<T: Real> GatherMap<T> {
    pub fn new(in_len: usize, index: Vec<[u32; TAPS]>, weight: Vec<[T; TAPS]>) -> Self {
        assert_eq!(index.len(), weight.len(), "gather map index/weight length");
        assert!(
            index.iter().flatten().all(|&i| (i as usize) < in_len),
            "gather map index out of range"
        );
        Self {
            in_len,
            out_len: index.len(),
            index,
            weight,
        }
    }

    pub fn in_len(&self) -> usize {
        self.in_len
    }

    pub fn out_len(&self) -> usize {
        self.out_len
    }

    pub fn taps(&self, out: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        self.index[out]
            .iter()
            .zip(&self.weight[out])
            .map(|(&i, &w)| (i as usize, w))
    }

    fn channels(&self, len: usize, per: usize) -> usize {
        assert!(len % per == 0, "gather operand length {len} not a multiple of {per}");
        len / per
    }

    /// Applies the map to `x` whose trailing extent equals `in_len`; the
    /// result keeps the leading dims and replaces the spatial part with
    /// `out_dims`.
    pub fn apply(&self, x: &NdArray<T>, out_dims: &[usize]) -> NdArray<T> {
        let ch = self.channels(x.len(), self.in_len);
        let src = x.as_slice();
        let mut out = Vec::with_capacity(ch * self.out_len);
        for c in 0..ch {
            let plane = &src[c * self.in_len..(c + 1) * self.in_len];
            out.extend(self.index.iter().zip(&self.weight).map(|(idx, w)| {
                idx.iter()
                    .zip(w)
                    .fold(T::zero(), |acc, (&i, &wt)| acc + wt * plane[i as usize])
            }));
        }
        NdArray::from_vec(out_dims, out)
    }

    /// Transpose of [`GatherMap::apply`].
    pub fn adjoint(&self, grad: &NdArray<T>, in_dims: &[usize]) -> NdArray<T> {
        let ch = self.channels(grad.len(), self.out_len);
        let g = grad.as_slice();
        let mut out = vec![T::zero(); ch * self.in_len];
        for c in 0..ch {
            let dst = &mut out[c * self.in_len..(c + 1) * self.in_len];
            let gp = &g[c * self.out_len..(c + 1) * self.out_len];
            for ((idx, w), &go) in self.index.iter().zip(&self.weight).zip(gp) {
                for (&i, &wt) in idx.iter().zip(w) {
                    dst[i as usize] = dst[i as usize] + wt * go;
                }
            }
        }
        NdArray::from_vec(in_dims, out)
    }
}
