//! Structural similarity with an 11x11 Gaussian window (sigma 1.5),
//! `K1 = 0.01`, `K2 = 0.03` and unit dynamic range.
//!
//! Near the border the window is truncated to the image and renormalized,
//! so every pixel contributes and small images remain measurable.

use crate::diffcore::Real;
use crate::error::{Error, Result};
use crate::volume::Image;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Unnormalized 1D Gaussian taps, centered at index `SSIM_WINDOW / 2`.
pub fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let r = (SSIM_WINDOW / 2) as f64;
    std::array::from_fn(|i| {
        let d = i as f64 - r;
        (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
    })
}

/// Separable weighted mean along one axis with per-position renormalization.
fn blur_axis(src: &[f64], n: usize, along_x: bool, win: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as isize;
    let mut out = vec![0.0; n * n];
    for y in 0..n {
        for x in 0..n {
            let (mut acc, mut norm) = (0.0, 0.0);
            for (k, &w) in win.iter().enumerate() {
                let off = k as isize - r;
                let (sy, sx) = if along_x {
                    (y as isize, x as isize + off)
                } else {
                    (y as isize + off, x as isize)
                };
                if sy < 0 || sx < 0 || sy >= n as isize || sx >= n as isize {
                    continue;
                }
                acc += w * src[sy as usize * n + sx as usize];
                norm += w;
            }
            out[y * n + x] = acc / norm;
        }
    }
    out
}

fn local_mean(src: &[f64], n: usize, win: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    blur_axis(&blur_axis(src, n, true, win), n, false, win)
}

fn ssim_plane(a: &[f64], b: &[f64], n: usize) -> f64 {
    let win = gaussian_window();
    let c1 = (SSIM_K1 * 1.0).powi(2);
    let c2 = (SSIM_K2 * 1.0).powi(2);
    let prod = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(x, y)| x * y).collect::<Vec<_>>();
    let mu_a = local_mean(a, n, &win);
    let mu_b = local_mean(b, n, &win);
    let aa = local_mean(&prod(a, a), n, &win);
    let bb = local_mean(&prod(b, b), n, &win);
    let ab = local_mean(&prod(a, b), n, &win);
    let mut total = 0.0;
    for i in 0..n * n {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = aa[i] - ma * ma;
        let vb = bb[i] - mb * mb;
        let cov = ab[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
            / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    total / (n * n) as f64
}

/// Mean local SSIM, averaged over channels.
pub fn ssim<T: Real>(a: &Image<T>, b: &Image<T>) -> Result<f64> {
    if a.array().dims() != b.array().dims() {
        return Err(Error::Shape(format!(
            "ssim of {:?} vs {:?}",
            a.array().dims(),
            b.array().dims()
        )));
    }
    let n = a.resolution();
    let plane = n * n;
    let to64 = |v: &[T]| v.iter().map(|x| x.to_f64_lossy()).collect::<Vec<f64>>();
    let (av, bv) = (to64(a.values()), to64(b.values()));
    let sum: f64 = (0..a.channels())
        .map(|c| ssim_plane(&av[c * plane..(c + 1) * plane], &bv[c * plane..(c + 1) * plane], n))
        .sum();
    Ok(sum / a.channels() as f64)
}

/// Structural dissimilarity `(1 - ssim) / 2`.
pub fn dssim<T: Real>(a: &Image<T>, b: &Image<T>) -> Result<f64> {
    Ok((1.0 - ssim(a, b)?) / 2.0)
}
