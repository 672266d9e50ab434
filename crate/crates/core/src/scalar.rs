//! Scalar abstraction shared by every numeric routine in the crate.

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    /// Converts an `f64` literal or intermediate into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("value representable in target scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::lit(n as f64)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`] scalar.
pub type Cx<T> = Complex<T>;

/// `exp(j·theta)`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Cx<T> {
    Cx::new(theta.cos(), theta.sin())
}

/// `exp(j·theta)` evaluated in `f64` and rounded once into `T`.
#[inline]
pub fn cis_f64<T: Real>(theta: f64) -> Cx<T> {
    Cx::new(T::lit(theta.cos()), T::lit(theta.sin()))
}

#[inline]
pub fn abs2<T: Real>(z: Cx<T>) -> T {
    z.re * z.re + z.im * z.im
}

#[inline]
pub fn czero<T: Real>() -> Cx<T> {
    Cx::new(T::zero(), T::zero())
}

#[inline]
pub fn creal<T: Real>(x: T) -> Cx<T> {
    Cx::new(x, T::zero())
}
