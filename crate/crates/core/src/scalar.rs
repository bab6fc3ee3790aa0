//! Scalar abstractions: the real floating type the toolkit is generic over, and
//! the real-or-complex element type accepted by the dense matrix kernels.

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display};
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

/// Real scalar (`f32` or `f64`).
pub trait RealScalar:
    Float + FromPrimitive + NumAssign + Send + Sync + Debug + Display + 'static
{
}

impl RealScalar for f32 {}
impl RealScalar for f64 {}

/// Converts an `f64` constant into the working scalar type.
#[inline]
pub fn real<T: RealScalar>(x: f64) -> T {
    T::from_f64(x).expect("representable constant")
}

/// Element of a matrix kernel: the real scalar itself or a complex pair of it.
///
/// Only the handful of operations the Hermitian kernels need is abstracted;
/// real instantiations compile down to plain arithmetic (conjugation is the
/// identity, `im` is zero).
pub trait Field:
    Copy
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + Send
    + Sync
    + Debug
    + 'static
{
    type Real: RealScalar;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_real(r: Self::Real) -> Self;
    fn conj(self) -> Self;
    fn re(self) -> Self::Real;
    fn im(self) -> Self::Real;
    /// Squared magnitude |x|².
    fn abs_sq(self) -> Self::Real;
    /// Scales by a real factor.
    fn scale(self, r: Self::Real) -> Self;
    fn is_finite(self) -> bool;

    #[inline]
    fn abs(self) -> Self::Real {
        self.abs_sq().sqrt()
    }
    /// x · conj(y), the elementary product of Hermitian accumulation.
    #[inline]
    fn mul_conj(self, y: Self) -> Self {
        self * y.conj()
    }
}

macro_rules! real_field {
    ($t:ty) => {
        impl Field for $t {
            type Real = $t;

            #[inline]
            fn zero() -> Self {
                0.0
            }
            #[inline]
            fn one() -> Self {
                1.0
            }
            #[inline]
            fn from_real(r: $t) -> Self {
                r
            }
            #[inline]
            fn conj(self) -> Self {
                self
            }
            #[inline]
            fn re(self) -> $t {
                self
            }
            #[inline]
            fn im(self) -> $t {
                0.0
            }
            #[inline]
            fn abs_sq(self) -> $t {
                self * self
            }
            #[inline]
            fn scale(self, r: $t) -> Self {
                self * r
            }
            #[inline]
            fn is_finite(self) -> bool {
                <$t>::is_finite(self)
            }
        }
    };
}

macro_rules! complex_field {
    ($t:ty) => {
        impl Field for Complex<$t> {
            type Real = $t;

            #[inline]
            fn zero() -> Self {
                Complex::new(0.0, 0.0)
            }
            #[inline]
            fn one() -> Self {
                Complex::new(1.0, 0.0)
            }
            #[inline]
            fn from_real(r: $t) -> Self {
                Complex::new(r, 0.0)
            }
            #[inline]
            fn conj(self) -> Self {
                Complex::conj(&self)
            }
            #[inline]
            fn re(self) -> $t {
                self.re
            }
            #[inline]
            fn im(self) -> $t {
                self.im
            }
            #[inline]
            fn abs_sq(self) -> $t {
                self.norm_sqr()
            }
            #[inline]
            fn scale(self, r: $t) -> Self {
                self * r
            }
            #[inline]
            fn is_finite(self) -> bool {
                self.re.is_finite() && self.im.is_finite()
            }
        }
    };
}

real_field!(f32);
real_field!(f64);
complex_field!(f32);
complex_field!(f64);
