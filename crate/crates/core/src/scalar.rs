//! Scalar abstraction shared by every engine.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type a likelihood batch can be stored in.
///
/// The engines only need ordered addition and `max`, but the sentinel
/// arithmetic (a large finite negative value standing in for minus
/// infinity) ties the choice to IEEE floats.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Default infeasibility sentinel, `-1e32`.
    const DEFAULT_SENTINEL: Self;
    /// Sentinels must be at or below this value (`-1e30`).
    const SENTINEL_CEILING: Self;
}

macro_rules! impl_scalar {
    ($($t:ty),*) => {$(
        impl Scalar for $t {
            const DEFAULT_SENTINEL: Self = -1e32;
            const SENTINEL_CEILING: Self = -1e30;
        }
    )*};
}

impl_scalar!(f32, f64);
