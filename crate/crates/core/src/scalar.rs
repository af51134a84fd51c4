use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar the regression code is generic over.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts a count or other small value; panics only for values the
    /// target type cannot represent at all.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("value representable in scalar type")
    }

    /// Relative threshold below which a column is treated as linearly
    /// dependent on the ones before it.
    fn rank_tolerance() -> Self {
        Self::epsilon().sqrt()
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}
