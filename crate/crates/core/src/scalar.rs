//! Scalar abstractions.
//!
//! Everything that needs transcendental functions (Cauchy sampling, CES
//! powers, arctan CDF) is generic over [`Real`]. The coordination game only
//! needs field arithmetic and ordering, so it is generic over [`Field`],
//! which exact rationals also satisfy.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, Num, ToPrimitive};

/// Ordered field with a lossy conversion from `f64` for tolerances and grid steps.
pub trait Field: Num + Copy + PartialOrd + FromPrimitive + Debug {
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn abs_val(self) -> Self {
        if self < Self::zero() {
            Self::zero() - self
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl<T: Num + Copy + PartialOrd + FromPrimitive + Debug> Field for T {}

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Field + Display + Default + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}
