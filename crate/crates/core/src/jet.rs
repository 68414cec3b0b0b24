//! Truncated Taylor series ("jets") with complex coefficients.
//!
//! A jet of order `K` at base point `t` stores `c_k = f^(k)(t)/k!` for
//! `k = 0..=K`. Binary operations on jets of different orders truncate to
//! the smaller order; operands must share the base point.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cpowf, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct Jet<R: Real = f64> {
    base: f64,
    coeffs: Vec<Complex<R>>,
}

/// Anything that can produce a jet of a function at a real point.
pub trait JetSource<R: Real> {
    fn jet_at(&self, t: f64, order: usize) -> Result<Jet<R>>;
}

impl<R: Real, F> JetSource<R> for F
where
    F: Fn(f64, usize) -> Result<Jet<R>>,
{
    fn jet_at(&self, t: f64, order: usize) -> Result<Jet<R>> {
        self(t, order)
    }
}

pub(crate) fn czero<R: Real>() -> Complex<R> {
    Complex::new(R::zero(), R::zero())
}

pub(crate) fn cone<R: Real>() -> Complex<R> {
    Complex::new(R::one(), R::zero())
}

pub(crate) fn creal<R: Real>(x: R) -> Complex<R> {
    Complex::new(x, R::zero())
}

impl<R: Real> Jet<R> {
    /// Build from raw Taylor coefficients. At least one coefficient is required.
    pub fn new(base: f64, coeffs: Vec<Complex<R>>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::usage("a jet needs at least one coefficient"));
        }
        Ok(Jet { base, coeffs })
    }

    pub fn zero(base: f64, order: usize) -> Self {
        Jet { base, coeffs: vec![czero(); order + 1] }
    }

    pub fn constant(base: f64, value: Complex<R>, order: usize) -> Self {
        let mut j = Self::zero(base, order);
        j.coeffs[0] = value;
        j
    }

    /// The identity function `t` expanded at `base`.
    pub fn variable(base: f64, order: usize) -> Self {
        let mut j = Self::constant(base, creal(R::from_f64(base)), order);
        if order >= 1 {
            j.coeffs[1] = creal(R::one());
        }
        j
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex<R>] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Complex<R> {
        self.coeffs[k]
    }

    pub fn value(&self) -> Complex<R> {
        self.coeffs[0]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_zero() && c.im.is_zero())
    }

    /// k-th derivative at the base point.
    pub fn derivative_value(&self, k: usize) -> Complex<R> {
        let mut f = R::one();
        for i in 2..=k {
            f *= R::from_usize(i);
        }
        self.coeffs[k] * f
    }

    pub fn truncate(&self, order: usize) -> Self {
        let n = (order + 1).min(self.coeffs.len());
        Jet { base: self.base, coeffs: self.coeffs[..n].to_vec() }
    }

    /// Same coefficients rounded to `f64`.
    pub fn to_f64(&self) -> Jet<f64> {
        Jet { base: self.base, coeffs: self.coeffs.iter().map(|c| Complex::new(c.re.to_f64(), c.im.to_f64())).collect() }
    }

    /// Convert the coefficient type, keeping double-double precision when both sides have it.
    pub fn convert<S: Real>(&self) -> Jet<S> {
        Jet { base: self.base, coeffs: self.coeffs.iter().map(|c| Complex::new(S::from_dd(c.re.to_dd()), S::from_dd(c.im.to_dd()))).collect() }
    }

    fn check_base(&self, other: &Self) -> Result<()> {
        if self.base != other.base {
            return Err(Error::usage(format!("jet base points differ: {} vs {}", self.base, other.base)));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_base(other)?;
        let n = self.coeffs.len().min(other.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeffs[k] + other.coeffs[k]).collect();
        Ok(Jet { base: self.base, coeffs })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_base(other)?;
        let n = self.coeffs.len().min(other.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeffs[k] - other.coeffs[k]).collect();
        Ok(Jet { base: self.base, coeffs })
    }

    /// Cauchy product truncated to the smaller order.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_base(other)?;
        let n = self.coeffs.len().min(other.coeffs.len());
        let coeffs = mul_series(&self.coeffs[..n], &other.coeffs[..n]);
        Ok(Jet { base: self.base, coeffs })
    }

    pub fn try_div(&self, other: &Self) -> Result<Self> {
        self.check_base(other)?;
        let n = self.coeffs.len().min(other.coeffs.len());
        let coeffs = div_series(&self.coeffs[..n], &other.coeffs[..n])?;
        Ok(Jet { base: self.base, coeffs })
    }

    pub fn scale(&self, c: Complex<R>) -> Self {
        Jet { base: self.base, coeffs: self.coeffs.iter().map(|&a| a * c).collect() }
    }

    pub fn scale_real(&self, r: R) -> Self {
        Jet { base: self.base, coeffs: self.coeffs.iter().map(|&a| a * r).collect() }
    }

    pub fn add_constant(&self, c: Complex<R>) -> Self {
        let mut j = self.clone();
        j.coeffs[0] = j.coeffs[0] + c;
        j
    }

    /// Coefficient-wise complex conjugate: the jet of `conj(f(conj t))`.
    pub fn conj(&self) -> Self {
        Jet { base: self.base, coeffs: self.coeffs.iter().map(|c| c.conj()).collect() }
    }

    /// Jet of `f'`; the order drops by one.
    pub fn derivative(&self) -> Result<Self> {
        if self.order() == 0 {
            return Err(Error::usage("cannot differentiate an order-0 jet"));
        }
        let coeffs = (1..self.coeffs.len()).map(|k| self.coeffs[k] * R::from_usize(k)).collect();
        Ok(Jet { base: self.base, coeffs })
    }

    /// Jet of `F` with `F' = f` and `F(base) = constant`; the order rises by one.
    pub fn antiderivative(&self, constant: Complex<R>) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(constant);
        for (k, c) in self.coeffs.iter().enumerate() {
            coeffs.push(*c / R::from_usize(k + 1));
        }
        Jet { base: self.base, coeffs }
    }

    pub fn recip(&self) -> Result<Self> {
        let mut one = vec![czero(); self.coeffs.len()];
        one[0] = cone::<R>();
        Ok(Jet { base: self.base, coeffs: div_series(&one, &self.coeffs)? })
    }

    /// `f^p` using the principal branch at the base point.
    pub fn powf(&self, p: R) -> Result<Self> {
        let f0 = self.coeffs[0];
        if f0.re.is_zero() && f0.im.is_zero() {
            return Err(Error::domain("power of a jet whose value vanishes"));
        }
        let n = self.coeffs.len();
        let mut h = vec![czero::<R>(); n];
        h[0] = cpowf(f0, p);
        // f h' = p f' h, solved coefficient by coefficient
        for k in 1..n {
            let mut acc = czero::<R>();
            for j in 1..=k {
                let w = p * R::from_usize(j) - R::from_usize(k - j);
                acc = acc + self.coeffs[j] * h[k - j] * w;
            }
            h[k] = acc / (f0 * R::from_usize(k));
        }
        Ok(Jet { base: self.base, coeffs: h })
    }

    pub fn sqrt(&self) -> Result<Self> {
        self.powf(R::from_f64(0.5))
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut acc = Jet::constant(self.base, cone::<R>(), self.order());
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    pub fn exp(&self) -> Self {
        let n = self.coeffs.len();
        let mut e = vec![czero::<R>(); n];
        e[0] = crate::scalar::cexp(self.coeffs[0]);
        for k in 1..n {
            let mut acc = czero::<R>();
            for j in 1..=k {
                acc = acc + self.coeffs[j] * e[k - j] * R::from_usize(j);
            }
            e[k] = acc / R::from_usize(k);
        }
        Jet { base: self.base, coeffs: e }
    }

    /// Sine and cosine of a jet with real value.
    pub fn sin_cos(&self) -> (Self, Self) {
        let n = self.coeffs.len();
        let mut s = vec![czero::<R>(); n];
        let mut c = vec![czero::<R>(); n];
        let v = self.coeffs[0];
        // sin(a+ib) and cos(a+ib)
        let (sa, ca) = (v.re.sin(), v.re.cos());
        let (eb, emb) = (v.im.exp(), (-v.im).exp());
        let half = R::from_f64(0.5);
        let (chb, shb) = ((eb + emb) * half, (eb - emb) * half);
        s[0] = Complex::new(sa * chb, ca * shb);
        c[0] = Complex::new(ca * chb, -(sa * shb));
        for k in 1..n {
            let mut as_ = czero::<R>();
            let mut ac = czero::<R>();
            for j in 1..=k {
                let w = self.coeffs[j] * R::from_usize(j);
                as_ = as_ + w * c[k - j];
                ac = ac - w * s[k - j];
            }
            s[k] = as_ / R::from_usize(k);
            c[k] = ac / R::from_usize(k);
        }
        (Jet { base: self.base, coeffs: s }, Jet { base: self.base, coeffs: c })
    }

    /// Evaluate the truncated polynomial at `base + h`.
    pub fn evaluate(&self, h: Complex<R>) -> Complex<R> {
        let mut acc = czero::<R>();
        for c in self.coeffs.iter().rev() {
            acc = acc * h + *c;
        }
        acc
    }

    /// Re-expand the truncated polynomial at `base + h`.
    pub fn shift(&self, h: f64) -> Self {
        let hr = R::from_f64(h);
        let mut c = self.coeffs.clone();
        let n = c.len();
        // repeated synthetic division (Taylor shift)
        for i in 0..n {
            for k in (i..n - 1).rev() {
                let t = c[k + 1] * hr;
                c[k] = c[k] + t;
            }
        }
        Jet { base: self.base + h, coeffs: c }
    }

    /// Composition `self(inner(t))` where `inner(base_inner)` equals this
    /// jet's base point. Only the non-constant part of `inner` is used.
    pub fn compose(&self, inner: &Jet<R>) -> Self {
        let n = self.coeffs.len().min(inner.coeffs.len());
        let mut u = inner.coeffs[..n].to_vec();
        u[0] = czero();
        Jet { base: inner.base, coeffs: compose_series(&self.coeffs[..n], &u) }
    }

    /// Inverse function jet. With `y0 = self.value()` (must be real), returns
    /// the jet at `y0` of `g` with `self(g(y)) = y` and `g(y0) = base`.
    pub fn revert(&self) -> Result<Self> {
        let n = self.coeffs.len();
        if n < 2 {
            return Err(Error::usage("series reversion needs order >= 1"));
        }
        let f1 = self.coeffs[1];
        if f1.re.is_zero() && f1.im.is_zero() {
            return Err(Error::domain("series reversion needs a nonzero linear term"));
        }
        let y0 = self.coeffs[0].re.to_f64();
        let mut fs = self.coeffs.clone();
        fs[0] = czero();
        let fprime: Vec<Complex<R>> = {
            let mut d: Vec<Complex<R>> = (1..n).map(|k| fs[k] * R::from_usize(k)).collect();
            d.push(czero());
            d
        };
        let mut g = vec![czero::<R>(); n];
        g[1] = cone::<R>() / f1;
        let mut correct = 2usize;
        while correct < n {
            let fg = compose_series(&fs, &g);
            let dg = compose_series(&fprime, &g);
            let mut resid = fg;
            resid[1] = resid[1] - cone::<R>();
            let step = div_series(&resid, &dg)?;
            for k in 0..n {
                g[k] = g[k] - step[k];
            }
            g[0] = czero();
            correct *= 2;
        }
        g[0] = creal(R::from_f64(self.base));
        Ok(Jet { base: y0, coeffs: g })
    }
}

/// Truncated Cauchy product of two coefficient slices of equal length.
pub fn mul_series<R: Real>(a: &[Complex<R>], b: &[Complex<R>]) -> Vec<Complex<R>> {
    let n = a.len().min(b.len());
    let mut out = vec![czero::<R>(); n];
    for (i, ai) in a.iter().enumerate().take(n) {
        if ai.re.is_zero() && ai.im.is_zero() {
            continue;
        }
        for j in 0..n - i {
            out[i + j] = out[i + j] + *ai * b[j];
        }
    }
    out
}

pub fn div_series<R: Real>(a: &[Complex<R>], b: &[Complex<R>]) -> Result<Vec<Complex<R>>> {
    let n = a.len().min(b.len());
    let b0 = b[0];
    if b0.re.is_zero() && b0.im.is_zero() {
        return Err(Error::domain("division by a jet whose value vanishes"));
    }
    let inv = cone::<R>() / b0;
    let mut q = vec![czero::<R>(); n];
    for k in 0..n {
        let mut acc = a[k];
        for j in 1..=k {
            acc = acc - b[j] * q[k - j];
        }
        q[k] = acc * inv;
    }
    Ok(q)
}

/// Horner composition of `outer` with a series `inner` whose constant term is zero.
pub fn compose_series<R: Real>(outer: &[Complex<R>], inner: &[Complex<R>]) -> Vec<Complex<R>> {
    let n = outer.len().min(inner.len());
    let mut acc = vec![czero::<R>(); n];
    for k in (0..n).rev() {
        acc = mul_series(&acc, &inner[..n]);
        acc[0] = acc[0] + outer[k];
    }
    acc
}

impl<R: Real> Add for &Jet<R> {
    type Output = Jet<R>;
    /// Panics when the base points differ; use [`Jet::try_add`] to get an error instead.
    fn add(self, rhs: Self) -> Jet<R> {
        self.try_add(rhs).expect("jet addition")
    }
}

impl<R: Real> Sub for &Jet<R> {
    type Output = Jet<R>;
    fn sub(self, rhs: Self) -> Jet<R> {
        self.try_sub(rhs).expect("jet subtraction")
    }
}

impl<R: Real> Mul for &Jet<R> {
    type Output = Jet<R>;
    fn mul(self, rhs: Self) -> Jet<R> {
        self.try_mul(rhs).expect("jet multiplication")
    }
}

impl<R: Real> Neg for &Jet<R> {
    type Output = Jet<R>;
    fn neg(self) -> Jet<R> {
        Jet { base: self.base, coeffs: self.coeffs.iter().map(|c| -*c).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::DoubleDouble;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    fn exp_jet(t: f64, k: usize) -> Jet<f64> {
        // exp at t: c_k = e^t / k!
        let mut f = 1.0;
        let coeffs = (0..=k)
            .map(|i| {
                if i > 0 {
                    f *= i as f64;
                }
                c(t.exp() / f)
            })
            .collect();
        Jet::new(t, coeffs).unwrap()
    }

    #[test]
    fn leibniz_for_exp_times_t() {
        let e = exp_jet(0.3, 8);
        let t = Jet::variable(0.3, 8);
        let p = &e * &t;
        // (t e^t)^(k) = (t + k) e^t
        for k in 0..=8 {
            let want = (0.3 + k as f64) * 0.3f64.exp();
            assert!((p.derivative_value(k).re - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn orders_truncate_to_minimum() {
        let a = exp_jet(0.0, 5);
        let b = exp_jet(0.0, 3);
        assert_eq!((&a * &b).order(), 3);
        assert_eq!((&a + &b).order(), 3);
        assert_eq!(a.derivative().unwrap().order(), 4);
        assert_eq!(a.antiderivative(c(0.0)).order(), 6);
    }

    #[test]
    fn mismatched_base_is_usage_error() {
        let a = exp_jet(0.0, 3);
        let b = exp_jet(0.5, 3);
        assert!(matches!(a.try_mul(&b), Err(Error::Usage(_))));
        assert!(matches!(a.try_add(&b), Err(Error::Usage(_))));
    }

    #[test]
    fn derivative_of_order_zero_fails() {
        let a = Jet::constant(0.0, c(2.0), 0);
        assert!(a.derivative().is_err());
    }

    #[test]
    fn antiderivative_then_derivative_roundtrips() {
        let a = exp_jet(1.0, 6);
        let b = a.antiderivative(c(4.0)).derivative().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn recip_sqrt_powf() {
        // f = 1 + t at t = 0.5: 1/f, sqrt(f), f^(-1/3)
        let f = Jet::variable(0.5, 10).add_constant(c(1.0));
        let r = f.recip().unwrap();
        let s = f.sqrt().unwrap();
        let p = f.powf(-1.0 / 3.0).unwrap();
        for k in 0..=10 {
            let fk = 1.5f64;
            let mut binom_r = 1.0;
            let mut binom_s = 1.0;
            let mut binom_p = 1.0;
            for i in 0..k {
                binom_r *= (-1.0 - i as f64) / (i as f64 + 1.0);
                binom_s *= (0.5 - i as f64) / (i as f64 + 1.0);
                binom_p *= (-1.0 / 3.0 - i as f64) / (i as f64 + 1.0);
            }
            let kk = k as i32;
            assert!((r.coeff(k).re - binom_r * fk.powi(-1 - kk)).abs() < 1e-13);
            assert!((s.coeff(k).re - binom_s * fk.powf(0.5 - k as f64)).abs() < 1e-13);
            assert!((p.coeff(k).re - binom_p * fk.powf(-1.0 / 3.0 - k as f64)).abs() < 1e-13);
        }
    }

    #[test]
    fn sin_cos_and_exp_of_jets() {
        let x = Jet::<f64>::variable(0.7, 9);
        let (s, co) = x.sin_cos();
        let e = x.exp();
        for k in 0..=9 {
            // d^k sin = sin(x + k pi/2)
            let ds = (0.7 + k as f64 * std::f64::consts::FRAC_PI_2).sin();
            let dc = (0.7 + k as f64 * std::f64::consts::FRAC_PI_2).cos();
            assert!((s.derivative_value(k).re - ds).abs() < 1e-12);
            assert!((co.derivative_value(k).re - dc).abs() < 1e-12);
            assert!((e.derivative_value(k).re - 0.7f64.exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn shift_matches_direct_expansion() {
        let a = exp_jet(0.0, 12);
        let b = a.shift(0.25);
        let want = exp_jet(0.25, 12);
        assert_eq!(b.base(), 0.25);
        // truncation error of the shifted low coefficients is ~ h^(K+1-k)/(K+1-k)!
        for k in 0..4 {
            assert!((b.coeff(k) - want.coeff(k)).norm() < 1e-9);
        }
    }

    #[test]
    fn compose_and_revert() {
        // exp(log(1+u)) = 1+u
        let u = Jet::<f64>::variable(0.0, 12);
        let one_plus_u = u.add_constant(c(1.0));
        // log(1+u) series at 0
        let log_coeffs: Vec<_> = (0..=12).map(|k| if k == 0 { c(0.0) } else { c(if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64) }).collect();
        let log = Jet::new(0.0, log_coeffs).unwrap();
        let e = exp_jet(0.0, 12);
        let back = e.compose(&log);
        for k in 0..=12 {
            assert!((back.coeff(k) - one_plus_u.coeff(k)).norm() < 1e-13);
        }
        // reverting exp at 0 gives log(1 + v) at 1
        let inv = e.revert().unwrap();
        assert_eq!(inv.base(), 1.0);
        for k in 1..=12 {
            assert!((inv.coeff(k) - log.coeff(k)).norm() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn double_double_jets() {
        type DD = DoubleDouble;
        let x = Jet::<DD>::variable(0.0, 20).add_constant(Complex::new(DD::ONE, DD::ZERO));
        let r = x.recip().unwrap();
        let back = (&r * &x).to_f64();
        assert!((back.coeff(0).re - 1.0).abs() < 1e-30);
        for k in 1..=20 {
            assert!(back.coeff(k).norm() < 1e-30);
        }
    }
}
