//! Floating-point abstraction the numeric core is generic over.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::{de::DeserializeOwned, Serialize};

/// Scalar type for probabilities, logits, and metrics.
///
/// `f64` is what the CLI and the test suites use; `f32` is available for
/// callers that trade accuracy for footprint.
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
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 converts to Scalar")
    }

    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("usize converts to Scalar")
    }

    fn of_u64(x: u64) -> Self {
        Self::from_u64(x).expect("u64 converts to Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
