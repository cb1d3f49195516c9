//! Scalar abstraction for the geometric core.
//!
//! Geometry, hull construction, and the mosaic are written once against
//! [`Real`] and instantiated for `f64` (the default used by the experiment
//! layer) and `f32`. Tolerances scale with the precision of the type.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar usable by the geometric core.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Threshold for singular Gram systems, great-sphere caps, facet
    /// visibility, and Delaunay flags.
    const RANK_TOL: Self;
    /// Threshold for a point lying on the boundary of a circumscribed cap.
    const INCIDENCE_TOL: Self;
    /// Allowed deviation of a unit vector's norm from one.
    const UNIT_TOL: Self;

    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f64 {
    const RANK_TOL: Self = 1e-9;
    const INCIDENCE_TOL: Self = 1e-11;
    const UNIT_TOL: Self = 1e-9;
}

impl Real for f32 {
    const RANK_TOL: Self = 1e-4;
    const INCIDENCE_TOL: Self = 1e-5;
    const UNIT_TOL: Self = 1e-5;
}

#[inline]
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub(crate) fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerances_are_ordered() {
        assert!(f64::INCIDENCE_TOL <= f64::RANK_TOL);
        assert!(f32::INCIDENCE_TOL <= f32::RANK_TOL);
        assert!(f32::RANK_TOL > f32::epsilon());
    }

    #[test]
    fn dot_and_norm() {
        assert_eq!(dot(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]), 32.0);
        assert!((norm(&[3.0f32, 4.0]) - 5.0).abs() < 1e-6);
    }
}
