//! Scalar abstraction: the whole crate is generic over the real floating-point
//! type through [`Scalar`], with `f64` as the production instantiation.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Real floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + NumAssign + FromPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Shorthand for converting an `f64` literal (tolerances, physical
    /// constants written in the source) into `Self`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable in this scalar type")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Complex number over the crate scalar.
pub type C<T> = Complex<T>;

/// Complex constant from `f64` literals.
pub fn c<T: Scalar>(re: f64, im: f64) -> C<T> {
    Complex::new(T::lit(re), T::lit(im))
}

/// Purely real complex value.
pub fn cr<T: Scalar>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

/// `i` times a real value.
pub fn ci<T: Scalar>(im: T) -> C<T> {
    Complex::new(T::zero(), im)
}
