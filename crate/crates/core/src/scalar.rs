//! Scalar abstraction shared by the numeric kernels.
//!
//! The HMM recursions, impurity computation and signal filters are written
//! once against [`Scalar`] and instantiated for `f64` (the default used by the
//! pipeline) and `f32`.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from `f64`, used for literals and tolerances.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Scalar")
    }

    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count is representable in every Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }

    /// Absolute tolerance for "sums to one" checks at this precision.
    fn unit_tolerance() -> Self;
}

impl Scalar for f64 {
    fn unit_tolerance() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    fn unit_tolerance() -> Self {
        1e-4
    }
}
