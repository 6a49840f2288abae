//! Scalar abstraction: the scoring math (BM25, cosine similarity, recall
//! aggregation) is generic over the floating-point type. `f64` is the default
//! throughout the CLI; `f32` is available for memory-bound vector indexes.

use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar used by index scoring and metric computation.
pub trait Scalar:
    num_traits::Float + num_traits::FromPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 convertible to scalar")
    }

    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize convertible to scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
