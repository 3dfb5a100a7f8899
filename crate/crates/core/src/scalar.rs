use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used by the geometric and calibration math.
///
/// Implemented for `f32` and `f64`. The simulation engine itself runs on
/// `f64`; see the aliases at the crate root.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + rstar::RTreeNum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; constants in this crate are all exactly
    /// representable in `f32`.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 converts to every Scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + rstar::RTreeNum
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}
