//! Floating-point abstraction for the numeric pipeline.
//!
//! Model training, feature engineering, and metrics are generic over
//! [`Scalar`] so the same code runs in `f32` or `f64`. The shipped CLI and
//! the oracle tests pin `f64` (see the `Real` alias at the crate root).

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssignOps};
use serde::{de::DeserializeOwned, Serialize};

/// Scalar type for all model and feature math: `f32` or `f64`.
///
/// `Display`/`FromStr` are required because exchanged payloads carry floats
/// as shortest round-trip decimals, which both primitive types guarantee.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumAssignOps
    + Sum
    + Display
    + FromStr
    + Debug
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Shorthand for lifting an `f64` constant into the working scalar type.
pub(crate) fn c<F: Scalar>(value: f64) -> F {
    F::from_f64(value).expect("finite constant")
}
