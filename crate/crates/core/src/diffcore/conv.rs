//! Strided convolution (2D) and transposed convolution (3D) via
//! im2col / col2im and a single GEMM each way.
//!
//! Both share one geometry: a "coarse" grid and a "fine" grid related by
//! `fine = coarse * stride - pad + offset`. For a forward convolution the
//! output is coarse; for a transposed convolution the input is coarse.
//! A 2D convolution runs as 3D with unit depth.

use super::real::matmul;
use super::{NdArray, Real};

#[derive(Debug, Clone)]
struct Geometry {
    coarse: [usize; 3],
    fine: [usize; 3],
    kernel: [usize; 3],
    stride: [usize; 3],
    pad: [usize; 3],
}

impl Geometry {
    fn kernel_len(&self) -> usize {
        self.kernel.iter().product()
    }

    fn coarse_len(&self) -> usize {
        self.coarse.iter().product()
    }

    fn fine_len(&self) -> usize {
        self.fine.iter().product()
    }

    /// Per axis: `table[c * k + o]` is the fine index hit by coarse index
    /// `c` at kernel offset `o`, or -1 outside the grid.
    fn tables(&self) -> [Vec<isize>; 3] {
        std::array::from_fn(|a| {
            let (nc, k) = (self.coarse[a], self.kernel[a]);
            let mut t = Vec::with_capacity(nc * k);
            for c in 0..nc {
                for o in 0..k {
                    let f = (c * self.stride[a] + o) as isize - self.pad[a] as isize;
                    t.push(if f >= 0 && (f as usize) < self.fine[a] { f } else { -1 });
                }
            }
            t
        })
    }

    /// Visits every (kernel offset, coarse index, fine index) triple that
    /// lands inside the fine grid.
    fn for_each_tap(&self, mut f: impl FnMut(usize, usize, usize)) {
        let [tz, ty, tx] = self.tables();
        let [kz, ky, kx] = self.kernel;
        let [cz, cy, cx] = self.coarse;
        let [_, fy, fx] = self.fine;
        for oz in 0..kz {
            for oy in 0..ky {
                for ox in 0..kx {
                    let kk = (oz * ky + oy) * kx + ox;
                    for z in 0..cz {
                        let iz = tz[z * kz + oz];
                        if iz < 0 {
                            continue;
                        }
                        for y in 0..cy {
                            let iy = ty[y * ky + oy];
                            if iy < 0 {
                                continue;
                            }
                            let row = (z * cy + y) * cx;
                            let frow = (iz as usize * fy + iy as usize) * fx;
                            for x in 0..cx {
                                let ix = tx[x * kx + ox];
                                if ix >= 0 {
                                    f(kk, row + x, frow + ix as usize);
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    /// `[channels, fine] -> [channels * K, coarse]`
    fn im2col<T: Real>(&self, fine: &[T], channels: usize) -> Vec<T> {
        let (k, nc, nf) = (self.kernel_len(), self.coarse_len(), self.fine_len());
        let mut cols = vec![T::zero(); channels * k * nc];
        self.for_each_tap(|kk, ci, fi| {
            for c in 0..channels {
                cols[(c * k + kk) * nc + ci] = fine[c * nf + fi];
            }
        });
        cols
    }

    /// `[channels * K, coarse] -> [channels, fine]`, summing overlaps.
    fn col2im<T: Real>(&self, cols: &[T], channels: usize) -> Vec<T> {
        let (k, nc, nf) = (self.kernel_len(), self.coarse_len(), self.fine_len());
        let mut fine = vec![T::zero(); channels * nf];
        self.for_each_tap(|kk, ci, fi| {
            for c in 0..channels {
                fine[c * nf + fi] = fine[c * nf + fi] + cols[(c * k + kk) * nc + ci];
            }
        });
        fine
    }
}

fn add_bias<T: Real>(out: &mut [T], bias: &[T], spatial: usize) {
    for (chunk, &b) in out.chunks_mut(spatial).zip(bias) {
        for v in chunk {
            *v = *v + b;
        }
    }
}

fn bias_grad<T: Real>(grad: &[T], channels: usize, spatial: usize) -> NdArray<T> {
    NdArray::from_vec(
        &[channels],
        grad.chunks(spatial).map(|c| c.iter().copied().sum()).collect(),
    )
}

fn conv2d_geometry(x: &[usize], w: &[usize], stride: usize, pad: usize) -> Geometry {
    assert_eq!(x.len(), 3, "conv2d input must be [C, H, W]");
    assert_eq!(w.len(), 4, "conv2d weight must be [O, C, k, k]");
    assert_eq!(x[0], w[1], "conv2d channel mismatch");
    let k = w[2];
    assert_eq!(k, w[3], "conv2d kernel must be square");
    let out = |n: usize| {
        assert!(n + 2 * pad >= k, "conv2d input smaller than kernel");
        (n + 2 * pad - k) / stride + 1
    };
    Geometry {
        coarse: [1, out(x[1]), out(x[2])],
        fine: [1, x[1], x[2]],
        kernel: [1, k, k],
        stride: [1, stride, stride],
        pad: [0, pad, pad],
    }
}

/// `x: [C, H, W]`, `w: [O, C, k, k]`, `b: [O]` -> `[O, H', W']`.
pub fn conv2d<T: Real>(
    x: &NdArray<T>,
    w: &NdArray<T>,
    b: &NdArray<T>,
    stride: usize,
    pad: usize,
) -> NdArray<T> {
    let g = conv2d_geometry(x.dims(), w.dims(), stride, pad);
    let (o, c) = (w.dims()[0], w.dims()[1]);
    assert_eq!(b.dims(), [o], "conv2d bias must be [O]");
    let cols = g.im2col(x.as_slice(), c);
    let (ck, n) = (c * g.kernel_len(), g.coarse_len());
    let mut out = vec![T::zero(); o * n];
    matmul(o, ck, n, w.as_slice(), false, &cols, false, T::zero(), &mut out);
    add_bias(&mut out, b.as_slice(), n);
    NdArray::from_vec(&[o, g.coarse[1], g.coarse[2]], out)
}

/// Returns `(dx, dw, db)` for upstream adjoint `grad: [O, H', W']`.
pub fn conv2d_backward<T: Real>(
    x: &NdArray<T>,
    w: &NdArray<T>,
    grad: &NdArray<T>,
    stride: usize,
    pad: usize,
) -> (NdArray<T>, NdArray<T>, NdArray<T>) {
    let g = conv2d_geometry(x.dims(), w.dims(), stride, pad);
    let (o, c) = (w.dims()[0], w.dims()[1]);
    let (ck, n) = (c * g.kernel_len(), g.coarse_len());
    assert_eq!(grad.len(), o * n, "conv2d grad shape mismatch");
    let cols = g.im2col(x.as_slice(), c);
    let mut dw = vec![T::zero(); o * ck];
    matmul(o, n, ck, grad.as_slice(), false, &cols, true, T::zero(), &mut dw);
    let mut dcols = vec![T::zero(); ck * n];
    matmul(ck, o, n, w.as_slice(), true, grad.as_slice(), false, T::zero(), &mut dcols);
    let dx = g.col2im(&dcols, c);
    (
        NdArray::from_vec(x.dims(), dx),
        NdArray::from_vec(w.dims(), dw),
        bias_grad(grad.as_slice(), o, n),
    )
}

fn deconv3d_geometry(x: &[usize], w: &[usize], stride: usize, pad: usize) -> Geometry {
    assert_eq!(x.len(), 4, "conv_transpose3d input must be [C, D, H, W]");
    assert_eq!(w.len(), 5, "conv_transpose3d weight must be [C, O, k, k, k]");
    assert_eq!(x[0], w[0], "conv_transpose3d channel mismatch");
    let k = w[2];
    assert!(w[3] == k && w[4] == k, "conv_transpose3d kernel must be cubic");
    let out = |n: usize| {
        let full = (n - 1) * stride + k;
        assert!(full > 2 * pad, "conv_transpose3d padding too large");
        full - 2 * pad
    };
    Geometry {
        coarse: [x[1], x[2], x[3]],
        fine: [out(x[1]), out(x[2]), out(x[3])],
        kernel: [k; 3],
        stride: [stride; 3],
        pad: [pad; 3],
    }
}

/// `x: [C, D, H, W]`, `w: [C, O, k, k, k]`, `b: [O]` -> `[O, D', H', W']`.
pub fn conv_transpose3d<T: Real>(
    x: &NdArray<T>,
    w: &NdArray<T>,
    b: &NdArray<T>,
    stride: usize,
    pad: usize,
) -> NdArray<T> {
    let g = deconv3d_geometry(x.dims(), w.dims(), stride, pad);
    let (c, o) = (w.dims()[0], w.dims()[1]);
    assert_eq!(b.dims(), [o], "conv_transpose3d bias must be [O]");
    let (ok, n) = (o * g.kernel_len(), g.coarse_len());
    let mut cols = vec![T::zero(); ok * n];
    matmul(ok, c, n, w.as_slice(), true, x.as_slice(), false, T::zero(), &mut cols);
    let mut out = g.col2im(&cols, o);
    add_bias(&mut out, b.as_slice(), g.fine_len());
    NdArray::from_vec(&[o, g.fine[0], g.fine[1], g.fine[2]], out)
}

/// Returns `(dx, dw, db)` for upstream adjoint `grad: [O, D', H', W']`.
pub fn conv_transpose3d_backward<T: Real>(
    x: &NdArray<T>,
    w: &NdArray<T>,
    grad: &NdArray<T>,
    stride: usize,
    pad: usize,
) -> (NdArray<T>, NdArray<T>, NdArray<T>) {
    let g = deconv3d_geometry(x.dims(), w.dims(), stride, pad);
    let (c, o) = (w.dims()[0], w.dims()[1]);
    let (ok, n) = (o * g.kernel_len(), g.coarse_len());
    assert_eq!(grad.len(), o * g.fine_len(), "conv_transpose3d grad shape mismatch");
    let gcols = g.im2col(grad.as_slice(), o);
    let mut dx = vec![T::zero(); c * n];
    matmul(c, ok, n, w.as_slice(), false, &gcols, false, T::zero(), &mut dx);
    let mut dw = vec![T::zero(); c * ok];
    matmul(c, n, ok, x.as_slice(), false, &gcols, true, T::zero(), &mut dw);
    (
        NdArray::from_vec(x.dims(), dx),
        NdArray::from_vec(w.dims(), dw),
        bias_grad(grad.as_slice(), o, g.fine_len()),
    )
}
