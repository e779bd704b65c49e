//! Double-double complex helpers.
//!
//! `TwoFloat / TwoFloat` in twofloat 0.8 forms its reciprocal residual
//! without a fused multiply-add and is only about as accurate as a double.
//! Division here goes through the accurate `TwoFloat / f64` path plus one
//! correction step.

use num_complex::{Complex, Complex64};
use twofloat::TwoFloat;

pub type ComplexDd = Complex<TwoFloat>;

pub fn widen(z: Complex64) -> ComplexDd {
    Complex::new(TwoFloat::from(z.re), TwoFloat::from(z.im))
}

pub fn narrow(z: ComplexDd) -> Complex64 {
    Complex64::new(z.re.hi() + z.re.lo(), z.im.hi() + z.im.lo())
}

/// |z| from the leading words.
pub fn magnitude(z: &ComplexDd) -> f64 {
    Complex64::new(z.re.hi(), z.im.hi()).norm()
}

pub fn div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a / b.hi();
    let r = a - q1 * b;
    q1 + r / b.hi()
}

pub fn cdiv(a: ComplexDd, b: ComplexDd) -> ComplexDd {
    let den = b.re * b.re + b.im * b.im;
    let num = a * b.conj();
    Complex::new(div(num.re, den), div(num.im, den))
}

pub fn cinv(b: ComplexDd) -> ComplexDd {
    cdiv(Complex::new(TwoFloat::from(1.0), TwoFloat::from(0.0)), b)
}
