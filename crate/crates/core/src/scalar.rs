use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Floating point type the solvers are written against.
pub trait Scalar:
    Float + FromPrimitive + Debug + Display + LowerExp + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only for types that cannot hold an `f64`
    /// approximation at all, which no `Float` implementor does.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    /// Stable hash key for caches keyed by a step length.
    #[inline]
    fn cache_key(self) -> u64 {
        self.to_f64().unwrap_or(f64::NAN).to_bits()
    }
}

impl Scalar for f64 {}
impl Scalar for f32 {}
