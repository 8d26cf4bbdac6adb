//! Scalar abstraction: the numeric kernels are generic over the float type so
//! the f32 production path and the f64 shadow used by oracles share one
//! implementation.

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar for features, weights, and losses: f32 or f64.
pub trait Scalar:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Default
    + Send
    + Sync
    + std::fmt::Debug
    + std::fmt::Display
    + 'static
{
    /// Lossy conversion from f64 (exact for f64, rounded for f32).
    fn of_f64(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("finite f64 converts to any Scalar")
    }

    /// Widening conversion to f64 for exact accumulation and reporting.
    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).expect("any Scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Dot product in the scalar's own precision.
pub(crate) fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = F::zero();
    for (x, y) in a.iter().zip(b) {
        acc += *x * *y;
    }
    acc
}

/// Euclidean norm, accumulated in f64 for accuracy regardless of `F`.
pub(crate) fn norm<F: Scalar>(v: &[F]) -> F {
    let mut acc = 0.0f64;
    for x in v {
        let x = x.as_f64();
        acc += x * x;
    }
    F::of_f64(acc.sqrt())
}

/// Scales `v` to unit norm. Returns false (leaving `v` untouched) on zero norm.
pub(crate) fn normalize<F: Scalar>(v: &mut [F]) -> bool {
    let n = norm(v);
    if n == F::zero() {
        return false;
    }
    for x in v.iter_mut() {
        *x /= n;
    }
    true
}
