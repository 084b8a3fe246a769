//! Double-double arithmetic (about 106 significand bits).
//!
//! `Dd` is an unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`; `DdComplex`
//! pairs two of them. Only the operations the lemma residuals need are
//! provided.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::projective::C64;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        // one Newton step from the double root doubles the precision
        let x = self.hi.sqrt();
        let xx = Dd::new(x) * Dd::new(x);
        Dd::new(x) + (self - xx) / Dd::new(2.0 * x)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::new(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::new(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::new(q3)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DdComplex {
    pub re: Dd,
    pub im: Dd,
}

impl DdComplex {
    pub fn norm_sqr(self) -> Dd {
        self.re * self.re + self.im * self.im
    }
}

impl Add for DdComplex {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        DdComplex { re: self.re + o.re, im: self.im + o.im }
    }
}

impl Sub for DdComplex {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        DdComplex { re: self.re - o.re, im: self.im - o.im }
    }
}

impl Mul for DdComplex {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        DdComplex { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }
}

impl Div for DdComplex {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let d = o.norm_sqr();
        let n = self * DdComplex { re: o.re, im: -o.im };
        DdComplex { re: n.re / d, im: n.im / d }
    }
}

impl Neg for DdComplex {
    type Output = Self;
    fn neg(self) -> Self {
        DdComplex { re: -self.re, im: -self.im }
    }
}

/// Complex field operations shared by `C64` and `DdComplex`.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    /// Significand bits.
    const BITS: u32;
    fn from_c64(z: C64) -> Self;
    fn to_c64(self) -> C64;
    fn norm(self) -> f64;
    /// Principal square root.
    fn sqrt(self) -> Self;
}

impl Scalar for C64 {
    const BITS: u32 = 53;
    fn from_c64(z: C64) -> Self {
        z
    }
    fn to_c64(self) -> C64 {
        self
    }
    fn norm(self) -> f64 {
        num_complex::Complex::norm(self)
    }
    fn sqrt(self) -> Self {
        num_complex::Complex::sqrt(self)
    }
}

impl Scalar for DdComplex {
    const BITS: u32 = 106;
    fn from_c64(z: C64) -> Self {
        DdComplex { re: Dd::new(z.re), im: Dd::new(z.im) }
    }
    fn to_c64(self) -> C64 {
        C64::new(self.re.to_f64(), self.im.to_f64())
    }
    fn norm(self) -> f64 {
        self.norm_sqr().sqrt().to_f64()
    }
    fn sqrt(self) -> Self {
        let r = self.norm_sqr().sqrt();
        if r.hi == 0.0 {
            return self;
        }
        let half = Dd::new(0.5);
        if self.re.hi >= 0.0 {
            let a = ((r + self.re) * half).sqrt();
            DdComplex { re: a, im: self.im / (a * Dd::new(2.0)) }
        } else {
            let mut b = ((r - self.re) * half).sqrt();
            if self.im.hi < 0.0 {
                b = -b;
            }
            DdComplex { re: self.im / (b * Dd::new(2.0)), im: b }
        }
    }
}

/// `t_λ = 2λ / (1 + sqrt(1 - 4λ))` in the scalar type `S`.
pub fn t_fixed_in<S: Scalar>(lambda: C64) -> S {
    let one = S::from_c64(C64::new(1.0, 0.0));
    let l = S::from_c64(lambda);
    let four = S::from_c64(C64::new(4.0, 0.0));
    let two = S::from_c64(C64::new(2.0, 0.0));
    two * l / (one + (one - four * l).sqrt())
}

/// `h_λ^n(z)`.
pub fn h_iter<S: Scalar>(lambda: S, z: S, n: usize) -> S {
    (0..n).fold(z, |x, _| x * x + lambda)
}
