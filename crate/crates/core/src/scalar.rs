//! Floating-point abstraction shared by the decoders and the trainer.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar used for LLRs, messages and trainable parameters.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + LowerExp
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; exact for `f64` itself.
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite f64 converts to every Scalar")
    }

    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).expect("Scalar converts to f64")
    }

    /// Sign with the `sgn(0) = +1` convention used by hard decisions and min-sum.
    fn sign_pos(self) -> Self {
        if self < Self::zero() {
            -Self::one()
        } else {
            Self::one()
        }
    }

    /// Clamp into `[-bound, bound]`; infinities saturate.
    fn clip(self, bound: Self) -> Self {
        self.max(-bound).min(bound)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
