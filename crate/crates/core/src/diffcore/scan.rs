//! Prefix scans along one axis and their adjoints.
//!
//! The cumulative-product adjoint never divides by the input: for upstream
//! adjoint `g` it forms the exclusive prefix product `P_j = prod_{i<j} x_i`
//! and the right-to-left recurrence `S_j = g_j + x_{j+1} S_{j+1}`, giving
//! `dL/dx_j = P_j * S_j`. Zeros in `x` therefore yield exact gradients.

use super::{NdArray, Real};

fn for_each_lane<T: Real>(
    dims: &[usize],
    axis: usize,
    src: &[T],
    dst: &mut [T],
    mut lane: impl FnMut(&mut dyn Iterator<Item = usize>, &[T], &mut [T], usize),
) {
    let (outer, n, inner) = super::array::axis_split(dims, axis);
    for o in 0..outer {
        for i in 0..inner {
            let base = o * n * inner + i;
            let mut idx = (0..n).map(|k| base + k * inner);
            lane(&mut idx, src, dst, n);
        }
    }
}

pub fn cumsum<T: Real>(x: &NdArray<T>, axis: usize) -> NdArray<T> {
    let mut out = NdArray::zeros(x.dims());
    for_each_lane(x.dims(), axis, x.as_slice(), out.as_mut_slice(), |idx, src, dst, _| {
        let mut acc = T::zero();
        for k in idx {
            acc = acc + src[k];
            dst[k] = acc;
        }
    });
    out
}

/// Adjoint of [`cumsum`]: a suffix sum of the upstream adjoint.
pub fn cumsum_backward<T: Real>(grad: &NdArray<T>, axis: usize) -> NdArray<T> {
    let mut out = NdArray::zeros(grad.dims());
    for_each_lane(grad.dims(), axis, grad.as_slice(), out.as_mut_slice(), |idx, src, dst, n| {
        let lane: Vec<usize> = idx.collect();
        let mut acc = T::zero();
        for &k in lane.iter().rev().take(n) {
            acc = acc + src[k];
            dst[k] = acc;
        }
    });
    out
}

/// Inclusive (`out_k = prod_{j<=k} x_j`) or exclusive (`prod_{j<k}`)
/// cumulative product along `axis`.
pub fn cumprod<T: Real>(x: &NdArray<T>, axis: usize, exclusive: bool) -> NdArray<T> {
    let mut out = NdArray::zeros(x.dims());
    for_each_lane(x.dims(), axis, x.as_slice(), out.as_mut_slice(), |idx, src, dst, _| {
        let mut acc = T::one();
        for k in idx {
            if exclusive {
                dst[k] = acc;
                acc = acc * src[k];
            } else {
                acc = acc * src[k];
                dst[k] = acc;
            }
        }
    });
    out
}

pub fn cumprod_backward<T: Real>(
    x: &NdArray<T>,
    grad: &NdArray<T>,
    axis: usize,
    exclusive: bool,
) -> NdArray<T> {
    assert_eq!(x.dims(), grad.dims(), "cumprod_backward shape mismatch");
    let (outer, n, inner) = x.axis_split(axis);
    let xs = x.as_slice();
    let gs = grad.as_slice();
    let mut out = NdArray::zeros(x.dims());
    let dst = out.as_mut_slice();
    let mut suffix = vec![T::zero(); n];
    for o in 0..outer {
        for i in 0..inner {
            let at = |k: usize| o * n * inner + i + k * inner;
            // suffix[j] = sum over outputs k that depend on x_j of g_k times
            // the product of the x's strictly between j and k (inclusive of k
            // for the inclusive scan).
            if exclusive {
                suffix[n - 1] = T::zero();
                for j in (0..n - 1).rev() {
                    suffix[j] = gs[at(j + 1)] + xs[at(j + 1)] * suffix[j + 1];
                }
            } else {
                suffix[n - 1] = gs[at(n - 1)];
                for j in (0..n - 1).rev() {
                    suffix[j] = gs[at(j)] + xs[at(j + 1)] * suffix[j + 1];
                }
            }
            let mut prefix = T::one();
            for (j, s) in suffix.iter().enumerate() {
                dst[at(j)] = prefix * *s;
                prefix = prefix * xs[at(j)];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arr(v: &[f64]) -> NdArray<f64> {
        NdArray::from_vec(&[v.len()], v.to_vec())
    }

    #[test]
    fn cumprod_examples() {
        assert_eq!(cumprod(&arr(&[1.0, 1.0, 1.0]), 0, false).as_slice(), &[1.0, 1.0, 1.0]);
        assert_eq!(cumprod(&arr(&[0.5, 0.5]), 0, false).as_slice(), &[0.5, 0.25]);
        assert_eq!(cumprod(&arr(&[0.5, 0.5, 2.0]), 0, true).as_slice(), &[1.0, 0.5, 0.25]);
    }

    #[test]
    fn cumsum_examples() {
        assert_eq!(cumsum(&arr(&[0.0, 0.0, 0.0]), 0).as_slice(), &[0.0, 0.0, 0.0]);
        assert_eq!(cumsum(&arr(&[1.0, 2.0, 3.0]), 0).as_slice(), &[1.0, 3.0, 6.0]);
        assert_eq!(
            cumsum_backward(&arr(&[1.0; 4]), 0).as_slice(),
            &[4.0, 3.0, 2.0, 1.0]
        );
    }

    #[test]
    fn scans_respect_axis() {
        let x = NdArray::<f64>::from_fn(&[2, 3], |i| (i + 1) as f64);
        // [[1,2,3],[4,5,6]]
        assert_eq!(cumsum(&x, 0).as_slice(), &[1.0, 2.0, 3.0, 5.0, 7.0, 9.0]);
        assert_eq!(cumsum(&x, 1).as_slice(), &[1.0, 3.0, 6.0, 4.0, 9.0, 15.0]);
        assert_eq!(cumprod(&x, 1, false).as_slice(), &[1.0, 2.0, 6.0, 4.0, 20.0, 120.0]);
    }

    #[test]
    fn cumprod_backward_with_zero_is_finite() {
        let x = arr(&[0.2, 0.0, 0.7]);
        let g = arr(&[1.0, 1.0, 1.0]);
        let d = cumprod_backward(&x, &g, 0, false);
        // d/dx0 = 1 + x1 + x1 x2 = 1 ; d/dx1 = x0 + x0 x2 = 0.34 ; d/dx2 = x0 x1 = 0
        let want = [1.0, 0.2 + 0.2 * 0.7, 0.0];
        for (a, b) in d.as_slice().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
