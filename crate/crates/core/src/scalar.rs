//! Floating point abstraction for layout coordinates.

use num_traits::{Float, NumCast};
use std::fmt;

/// Scalar used for unit-space layout coordinates and spatial queries.
///
/// Implemented for `f32` (compact point buffers for very large datasets) and
/// `f64` (the default used by the renderer and the server).
pub trait Scalar: Float + Send + Sync + Default + fmt::Debug + fmt::Display + 'static {
    fn from_i64(v: i64) -> Self {
        <Self as NumCast>::from(v).expect("i64 is representable in every float type")
    }

    fn from_usize(v: usize) -> Self {
        <Self as NumCast>::from(v).expect("usize is representable in every float type")
    }

    fn from_f64(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("f64 converts to every float type")
    }

    fn to_f64(self) -> f64 {
        <f64 as NumCast>::from(self).expect("float converts to f64")
    }

    fn half() -> Self {
        Self::from_f64(0.5)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
