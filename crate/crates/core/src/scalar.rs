//! Real scalar abstraction over `f64` and a double-double type.
//!
//! Jets, recursions and effective Hamiltonians are generic over [`Real`], so
//! the same code runs in plain double precision or in double-double
//! (about 31 significant digits) when cancellations demand it.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, RemAssign, Sub, SubAssign};

use num_complex::Complex;
use num_traits::{Num, One, Zero};

/// Real number type usable as the coefficient field of jets.
pub trait Real:
    Copy + fmt::Debug + fmt::Display + PartialOrd + Num + Neg<Output = Self> + AddAssign + SubAssign + MulAssign + DivAssign + Send + Sync + 'static
{
    /// Human-readable name of the precision, used in provenance records.
    const NAME: &'static str;

    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn from_dd(x: DoubleDouble) -> Self;
    fn to_dd(self) -> DoubleDouble;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn atan2(self, x: Self) -> Self;
    fn pi() -> Self;
    /// Unit roundoff of the representation.
    fn epsilon() -> f64;

    fn from_usize(n: usize) -> Self {
        Self::from_f64(n as f64)
    }

    fn abs(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }

    fn powi(self, n: i32) -> Self {
        let mut base = if n < 0 { Self::one() / self } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base *= base;
            e >>= 1;
        }
        acc
    }

    fn is_finite(self) -> bool {
        self.to_f64().is_finite()
    }
}

impl Real for f64 {
    const NAME: &'static str = "double";

    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn from_dd(x: DoubleDouble) -> Self {
        x.hi + x.lo
    }
    fn to_dd(self) -> DoubleDouble {
        DoubleDouble::from_f64(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn epsilon() -> f64 {
        f64::EPSILON
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

// ---------------------------------------------------------------------------
// Complex helpers (num-complex only provides transcendental functions for Float)

/// Modulus of a complex number without overflow in the intermediate square.
pub fn cabs<R: Real>(z: Complex<R>) -> R {
    let a = z.re.abs();
    let b = z.im.abs();
    let (big, small) = if a > b { (a, b) } else { (b, a) };
    if big == R::zero() {
        return R::zero();
    }
    let r = small / big;
    big * (R::one() + r * r).sqrt()
}

/// Principal argument in (-pi, pi].
pub fn carg<R: Real>(z: Complex<R>) -> R {
    z.im.atan2(z.re)
}

pub fn cexp<R: Real>(z: Complex<R>) -> Complex<R> {
    let m = z.re.exp();
    Complex::new(m * z.im.cos(), m * z.im.sin())
}

/// Principal logarithm.
pub fn cln<R: Real>(z: Complex<R>) -> Complex<R> {
    Complex::new(cabs(z).ln(), carg(z))
}

/// Principal power `z^p` for a real exponent.
pub fn cpowf<R: Real>(z: Complex<R>, p: R) -> Complex<R> {
    if z.re == R::zero() && z.im == R::zero() {
        return Complex::new(R::zero(), R::zero());
    }
    cexp(cln(z) * p)
}

/// Principal square root.
pub fn csqrt<R: Real>(z: Complex<R>) -> Complex<R> {
    let r = cabs(z);
    if r == R::zero() {
        return z;
    }
    let half = R::from_f64(0.5);
    let a = ((r + z.re.abs()) * half).sqrt();
    if z.re >= R::zero() {
        Complex::new(a, z.im / (a + a))
    } else {
        let b = if z.im < R::zero() { -a } else { a };
        Complex::new(z.im.abs() / (a + a), b)
    }
}

pub fn cpowi<R: Real>(z: Complex<R>, n: i32) -> Complex<R> {
    let mut base = if n < 0 { Complex::new(R::one(), R::zero()) / z } else { z };
    let mut e = n.unsigned_abs();
    let mut acc = Complex::new(R::one(), R::zero());
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base;
        }
        base = base * base;
        e >>= 1;
    }
    acc
}

pub fn c_from_f64<R: Real>(z: Complex<f64>) -> Complex<R> {
    Complex::new(R::from_f64(z.re), R::from_f64(z.im))
}

pub fn c_to_f64<R: Real>(z: Complex<R>) -> Complex<f64> {
    Complex::new(z.re.to_f64(), z.im.to_f64())
}

// ---------------------------------------------------------------------------
// Double-double

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
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
fn split(a: f64) -> (f64, f64) {
    const SPLITTER: f64 = 134_217_729.0;
    if a.abs() > 6.69692879491417e299 {
        let a = a * 3.725_290_298_461_914e-9;
        let t = SPLITTER * a;
        let hi = t - (t - a);
        let lo = a - hi;
        (hi * 268_435_456.0, lo * 268_435_456.0)
    } else {
        let t = SPLITTER * a;
        let hi = t - (t - a);
        (hi, a - hi)
    }
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

const DD_PI: DoubleDouble = DoubleDouble { hi: std::f64::consts::PI, lo: 1.224_646_799_147_353_207e-16 };
const DD_2PI: DoubleDouble = DoubleDouble { hi: std::f64::consts::TAU, lo: 2.449_293_598_294_706_414e-16 };
const DD_PI2: DoubleDouble = DoubleDouble { hi: std::f64::consts::FRAC_PI_2, lo: 6.123_233_995_736_766_036e-17 };
const DD_LN2: DoubleDouble = DoubleDouble { hi: std::f64::consts::LN_2, lo: 2.319_046_813_846_299_558e-17 };

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }
}

impl DoubleDouble {
    pub const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };
    pub const ONE: DoubleDouble = DoubleDouble { hi: 1.0, lo: 0.0 };

    pub const fn new(hi: f64, lo: f64) -> Self {
        DoubleDouble { hi, lo }
    }

    pub fn from_sum(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, b);
        DoubleDouble { hi, lo }
    }

    fn mul_f64(self, b: f64) -> Self {
        let (p1, p2) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p1, p2 + self.lo * b);
        DoubleDouble { hi, lo }
    }

    fn sqr(self) -> Self {
        self * self
    }

    fn ldexp(self, e: i32) -> Self {
        let f = 2f64.powi(e);
        DoubleDouble { hi: self.hi * f, lo: self.lo * f }
    }

    pub fn round(self) -> Self {
        let hi = self.hi.round();
        if hi == self.hi {
            let lo = self.lo.round();
            let (hi, lo) = quick_two_sum(hi, lo);
            DoubleDouble { hi, lo }
        } else if (hi - self.hi).abs() == 0.5 && self.lo != 0.0 {
            let hi = if self.lo < 0.0 && hi > self.hi {
                hi - 1.0
            } else if self.lo > 0.0 && hi < self.hi {
                hi + 1.0
            } else {
                hi
            };
            DoubleDouble { hi, lo: 0.0 }
        } else {
            DoubleDouble { hi, lo: 0.0 }
        }
    }

    pub fn trunc(self) -> Self {
        if self.hi >= 0.0 {
            let hi = self.hi.floor();
            if hi == self.hi {
                let (hi, lo) = quick_two_sum(hi, self.lo.floor());
                DoubleDouble { hi, lo }
            } else {
                DoubleDouble { hi, lo: 0.0 }
            }
        } else {
            -((-self).trunc())
        }
    }

    /// Taylor series of sin and cos for |r| <= pi/4.
    fn sin_cos_small(r: Self) -> (Self, Self) {
        let r2 = r.sqr();
        let tiny = 1e-34;
        let mut s = r;
        let mut term = r;
        let mut k = 1.0;
        loop {
            term = -(term * r2) / DoubleDouble::from_f64((k + 1.0) * (k + 2.0));
            s += term;
            k += 2.0;
            if term.hi.abs() < tiny {
                break;
            }
        }
        let mut c = DoubleDouble::ONE;
        let mut term = DoubleDouble::ONE;
        let mut k = 0.0;
        loop {
            term = -(term * r2) / DoubleDouble::from_f64((k + 1.0) * (k + 2.0));
            c += term;
            k += 2.0;
            if term.hi.abs() < tiny {
                break;
            }
        }
        (s, c)
    }

    pub fn sin_cos(self) -> (Self, Self) {
        if self.hi == 0.0 {
            return (DoubleDouble::ZERO, DoubleDouble::ONE);
        }
        let z = (self / DD_2PI).round();
        let r = self - DD_2PI * z;
        let j = (r / DD_PI2).round();
        let r = r - DD_PI2 * j;
        let (s, c) = Self::sin_cos_small(r);
        match (j.hi as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }
}

impl fmt::Debug for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DD({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.hi, f)
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        DoubleDouble { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    #[inline]
    fn add(self, b: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        DoubleDouble { hi, lo }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    #[inline]
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    #[inline]
    fn mul(self, b: Self) -> Self {
        let (p1, p2) = two_prod(self.hi, b.hi);
        let p2 = p2 + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p1, p2);
        DoubleDouble { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        if !q1.is_finite() {
            return DoubleDouble { hi: q1, lo: 0.0 };
        }
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DoubleDouble { hi, lo } + DoubleDouble::from_f64(q3)
    }
}

impl Rem for DoubleDouble {
    type Output = Self;
    fn rem(self, b: Self) -> Self {
        self - b * (self / b).trunc()
    }
}

macro_rules! assign_ops {
    ($($tr:ident $m:ident $op:tt),*) => {$(
        impl $tr for DoubleDouble {
            #[inline]
            fn $m(&mut self, b: Self) {
                *self = *self $op b;
            }
        }
    )*};
}
assign_ops!(AddAssign add_assign +, SubAssign sub_assign -, MulAssign mul_assign *, DivAssign div_assign /, RemAssign rem_assign %);

impl Zero for DoubleDouble {
    fn zero() -> Self {
        DoubleDouble::ZERO
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0
    }
}

impl One for DoubleDouble {
    fn one() -> Self {
        DoubleDouble::ONE
    }
}

impl Num for DoubleDouble {
    type FromStrRadixErr = std::num::ParseFloatError;
    fn from_str_radix(s: &str, _radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        s.parse::<f64>().map(DoubleDouble::from_f64)
    }
}

impl Real for DoubleDouble {
    const NAME: &'static str = "extended";

    fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn from_dd(x: DoubleDouble) -> Self {
        x
    }

    fn to_dd(self) -> DoubleDouble {
        self
    }

    fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 { DoubleDouble::ZERO } else { DoubleDouble::from_f64(f64::NAN) };
        }
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let ax_dd = DoubleDouble::from_f64(ax);
        let diff = (self - ax_dd.sqr()).hi * (x * 0.5);
        ax_dd + DoubleDouble::from_f64(diff)
    }

    fn exp(self) -> Self {
        if self.hi > 709.7 {
            return DoubleDouble::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return DoubleDouble::ZERO;
        }
        let k = (self.hi / DD_LN2.hi).round();
        let r = (self - DD_LN2.mul_f64(k)).ldexp(-10);
        // exp(r) - 1 by Taylor, then square back up
        let mut term = r;
        let mut sum = r;
        let mut i = 2.0;
        while term.hi.abs() > 1e-36 {
            term = term * r / DoubleDouble::from_f64(i);
            sum += term;
            i += 1.0;
        }
        for _ in 0..10 {
            // (1+s)^2 - 1 = 2s + s^2
            sum = sum.ldexp(1) + sum.sqr();
        }
        (sum + DoubleDouble::ONE).ldexp(k as i32)
    }

    fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return DoubleDouble::from_f64(if self.hi == 0.0 { f64::NEG_INFINITY } else { f64::NAN });
        }
        let mut y = DoubleDouble::from_f64(self.hi.ln());
        for _ in 0..2 {
            y = y + self * (-y).exp() - DoubleDouble::ONE;
        }
        y
    }

    fn sin(self) -> Self {
        self.sin_cos().0
    }

    fn cos(self) -> Self {
        self.sin_cos().1
    }

    fn atan2(self, x: Self) -> Self {
        let y = self;
        if x.hi == 0.0 && y.hi == 0.0 {
            return DoubleDouble::ZERO;
        }
        let mut z = DoubleDouble::from_f64(y.hi.atan2(x.hi));
        let r = (x.sqr() + y.sqr()).sqrt();
        let xx = x / r;
        let yy = y / r;
        for _ in 0..2 {
            let (s, c) = z.sin_cos();
            if xx.hi.abs() > yy.hi.abs() {
                z += (yy - s) / c;
            } else {
                z -= (xx - c) / s;
            }
        }
        z
    }

    fn pi() -> Self {
        DD_PI
    }

    fn epsilon() -> f64 {
        4.93038065763132e-32
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type DD = DoubleDouble;

    fn close(a: DD, b: DD, tol: f64) -> bool {
        let d = (a - b).to_f64().abs();
        d <= tol * b.to_f64().abs().max(1e-300)
    }

    #[test]
    fn arithmetic_beats_double() {
        let third = DD::ONE / DD::from_f64(3.0);
        let back = third * DD::from_f64(3.0);
        assert!((back - DD::ONE).to_f64().abs() < 1e-31);
        let s = DD::from_f64(2.0).sqrt();
        assert!(((s * s) - DD::from_f64(2.0)).to_f64().abs() < 1e-31);
    }

    #[test]
    fn transcendental_identities() {
        let x = DD::from_f64(0.7) / DD::from_f64(3.0);
        assert!(close(x.exp().ln(), x, 1e-30));
        let (s, c) = x.sin_cos();
        assert!(((s * s + c * c) - DD::ONE).to_f64().abs() < 1e-30);
        assert!(close(s.atan2(c), x, 1e-30));
        // exp(1) against a 32-digit reference
        let e = DD::ONE.exp();
        let e_ref = DD::new(std::f64::consts::E, 1.445_646_891_729_250_2e-16);
        assert!(close(e, e_ref, 1e-30));
        // sin(pi/6) = 1/2
        let v = (DD::pi() / DD::from_f64(6.0)).sin();
        assert!(close(v, DD::from_f64(0.5), 1e-30));
        let big = DD::from_f64(100.25);
        assert!((big.sin().to_f64() - 100.25f64.sin()).abs() < 1e-13);
    }

    #[test]
    fn complex_helpers_match_num_complex() {
        let z = Complex::new(0.3, -1.2);
        let p = cpowf(z, -1.0 / 3.0);
        let q = z.powf(-1.0 / 3.0);
        assert!((p - q).norm() < 1e-14);
        let w = csqrt(Complex::new(-4.0, -1e-20));
        assert!((w - Complex::new(0.0, -2.0)).norm() < 1e-14);
        assert!((cpowi(z, -3) - z.powi(-3)).norm() < 1e-13);
    }
}
