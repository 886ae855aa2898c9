//! Minimal reverse-mode differentiation over dense arrays.
//!
//! Provides exactly the primitives the rendering layers and networks need:
//! elementwise arithmetic, exp/log, sigmoid and leaky rectifier, dense and
//! (transposed) convolution maps, axis reductions, prefix sums and prefix
//! products, and a sparse gather used for trilinear resampling.

mod array;
pub mod conv;
mod gather;
pub mod gradcheck;
mod real;
pub mod scan;
mod tape;

pub use array::NdArray;
pub use gather::{GatherMap, TAPS};
pub use gradcheck::{finite_difference_check, finite_difference_check_at, GradCheck};
pub use real::Real;
pub use tape::{Gradients, Tape, Var};

pub(crate) use tape::{log_sigmoid, sigmoid};

/// Inclusive cumulative product along `axis` (no tape).
pub fn cumulative_product<T: Real>(x: &NdArray<T>, axis: usize) -> NdArray<T> {
    scan::cumprod(x, axis, false)
}

/// Cumulative sum along `axis` (no tape).
pub fn cumulative_sum<T: Real>(x: &NdArray<T>, axis: usize) -> NdArray<T> {
    scan::cumsum(x, axis)
}
