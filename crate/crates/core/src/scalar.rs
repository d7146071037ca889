//! Scalar abstraction shared by every geometric routine in the crate.

use nalgebra::{RealField, Vector3};
use num_traits::ToPrimitive;

/// Floating point type the reconstruction can run on (`f32` or `f64`).
///
/// Tolerances throughout the crate are expressed as `f64` literals and
/// converted with [`Real::lit`]; with `f32` they saturate to the nearest
/// representable value, so the tight `1e-12` style checks only make sense
/// for `f64`.
pub trait Real: RealField + Copy + ToPrimitive + Send + Sync + Default {
    /// Converts an `f64` constant into this scalar.
    fn lit(v: f64) -> Self;

    /// Lossy conversion back to `f64` for I/O and reporting.
    fn as_f64(self) -> f64;

    fn of_usize(v: usize) -> Self {
        Self::lit(v as f64)
    }
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn lit(v: f64) -> Self {
                v as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

pub type Vec3<T> = Vector3<T>;

/// Builds a vector from `f64` components.
pub fn vec3<T: Real>(x: f64, y: f64, z: f64) -> Vec3<T> {
    Vec3::new(T::lit(x), T::lit(y), T::lit(z))
}

pub fn is_finite_vec<T: Real>(v: &Vec3<T>) -> bool {
    v.iter().all(|c| c.is_finite())
}
