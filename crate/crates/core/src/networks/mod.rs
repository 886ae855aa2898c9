//! The three learned maps: an image encoder, a voxel generator and an image
//! discriminator, built DCGAN-style from stride-2 kernel-4 (transposed)
//! convolutions with leaky rectifiers.

mod arch;
pub mod checkpoint;
mod model;
mod params;

pub use arch::Architecture;
pub use model::{Bound, LatentCode, Networks, LEAKY_SLOPE};
pub use params::{Param, ParamGroup, ParamStore};
