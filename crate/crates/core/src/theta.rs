//! Models for the adiabatic mixing-angle derivative `theta'(t)`.
//!
//! The central model is the conjugate pole pair
//! `theta'_0(t) = i gamma (1/(t - t_r + i t_c) - 1/(t - t_r - i t_c))`
//! plus an optional remainder built from terms with exact jets.

use std::fmt;
use std::sync::Arc;

use num_complex::{Complex, Complex64};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{Jet, JetSource};
use crate::reparam::{ReparametrizedModel, XzSpec};
use crate::scalar::{c_from_f64, cln, cpowf, DoubleDouble, Real};

/// Location and strength of the singularity nearest to the real axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularityData {
    /// Real part of the critical time.
    pub t_r: f64,
    /// Distance of the critical time from the real axis.
    pub t_c: f64,
    /// Pole strength.
    pub gamma: f64,
    /// Regularity exponent of the remainder, in (0, 1).
    pub alpha: f64,
    /// Radius of the largest disk around t_r free of other singularities.
    pub radius: f64,
}

impl SingularityData {
    pub fn critical_time(&self) -> Complex64 {
        Complex64::new(self.t_r, self.t_c)
    }
}

// ---------------------------------------------------------------------------
// Remainder terms

/// One term of the remainder `theta'_r`. With `mirror` set, the term
/// `conj(f(conj t))` is added so the sum is real on the real axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RemainderTerm {
    /// `coefficient / (t - location)^order`
    Pole {
        location: Complex64,
        #[serde(default = "default_order")]
        order: u32,
        coefficient: Complex64,
        #[serde(default = "default_true")]
        mirror: bool,
    },
    /// `(t - center)^power * sum_j coefficients[j] (t - center)^j`, principal branch.
    Algebraic {
        center: Complex64,
        power: f64,
        coefficients: Vec<Complex64>,
        #[serde(default = "default_true")]
        mirror: bool,
    },
}

fn default_order() -> u32 {
    1
}

fn default_true() -> bool {
    true
}

impl RemainderTerm {
    fn singular_point(&self) -> Complex64 {
        match self {
            RemainderTerm::Pole { location, .. } => *location,
            RemainderTerm::Algebraic { center, .. } => *center,
        }
    }

    fn mirrored(&self) -> bool {
        match self {
            RemainderTerm::Pole { mirror, .. } | RemainderTerm::Algebraic { mirror, .. } => *mirror,
        }
    }

    /// Jet of the unmirrored term at real `t`.
    fn raw_jet<R: Real>(&self, t: f64, order: usize) -> Result<Jet<R>> {
        match self {
            RemainderTerm::Pole { location, order: m, coefficient, .. } => {
                let d = Complex::new(R::from_f64(t) - R::from_f64(location.re), -R::from_f64(location.im));
                let w = Complex::new(R::one(), R::zero()) / d;
                let a: Complex<R> = c_from_f64(*coefficient);
                // c_k = a (-1)^k binom(m+k-1, k) w^(m+k)
                let mut wp = crate::scalar::cpowi(w, *m as i32);
                let mut binom = R::one();
                let mut coeffs = Vec::with_capacity(order + 1);
                for k in 0..=order {
                    if k > 0 {
                        binom = binom * R::from_usize(*m as usize + k - 1) / R::from_usize(k);
                        wp = wp * w;
                    }
                    let sign = if k % 2 == 0 { R::one() } else { -R::one() };
                    coeffs.push(a * wp * (binom * sign));
                }
                Jet::new(t, coeffs)
            }
            RemainderTerm::Algebraic { center, power, coefficients, .. } => {
                let d = Complex::new(R::from_f64(t) - R::from_f64(center.re), -R::from_f64(center.im));
                let p = R::from_f64(*power);
                let w = Complex::new(R::one(), R::zero()) / d;
                let base = cpowf(d, p);
                let mut coeffs = Vec::with_capacity(order + 1);
                let mut b = R::one();
                let mut wk = Complex::new(R::one(), R::zero());
                for k in 0..=order {
                    if k > 0 {
                        b = b * (p - R::from_usize(k - 1)) / R::from_usize(k);
                        wk = wk * w;
                    }
                    coeffs.push(base * wk * b);
                }
                let singular = Jet::new(t, coeffs)?;
                // polynomial h(t - center + u) as a jet in u
                let hc: Vec<Complex<R>> = coefficients.iter().map(|c| c_from_f64(*c)).collect();
                let h = Jet::new(t, shifted_polynomial(&hc, d, order))?;
                Ok(&singular * &h)
            }
        }
    }

    fn jet<R: Real>(&self, t: f64, order: usize) -> Result<Jet<R>> {
        let j = self.raw_jet::<R>(t, order)?;
        if self.mirrored() {
            Ok(&j + &j.conj())
        } else {
            Ok(j)
        }
    }

    /// Closed-form antiderivative of the unmirrored term at real `t`.
    fn raw_primitive(&self, t: f64) -> Complex64 {
        match self {
            RemainderTerm::Pole { location, order, coefficient, .. } => {
                let d = Complex64::new(t, 0.0) - location;
                if *order == 1 {
                    coefficient * cln(d)
                } else {
                    let m = *order as f64;
                    coefficient * d.powf(1.0 - m) / (1.0 - m)
                }
            }
            RemainderTerm::Algebraic { center, power, coefficients, .. } => {
                let d = Complex64::new(t, 0.0) - center;
                coefficients
                    .iter()
                    .enumerate()
                    .map(|(j, h)| {
                        let e = power + j as f64 + 1.0;
                        if e.abs() < 1e-14 {
                            h * cln(d)
                        } else {
                            h * cpowf(d, e) / e
                        }
                    })
                    .sum()
            }
        }
    }

    fn primitive(&self, t: f64) -> f64 {
        let v = self.raw_primitive(t);
        if self.mirrored() {
            2.0 * v.re
        } else {
            v.re
        }
    }
}

/// Taylor coefficients in `u` of `sum_j h_j (d + u)^j`.
fn shifted_polynomial<R: Real>(h: &[Complex<R>], d: Complex<R>, order: usize) -> Vec<Complex<R>> {
    let mut c = h.to_vec();
    let n = c.len();
    for i in 0..n {
        for k in (i..n.saturating_sub(1)).rev() {
            let t = c[k + 1] * d;
            c[k] = c[k] + t;
        }
    }
    c.resize(order + 1, Complex::new(R::zero(), R::zero()));
    c.truncate(order + 1);
    c
}

// ---------------------------------------------------------------------------
// Pole pair

#[derive(Clone, Debug, PartialEq)]
pub struct PolePairModel {
    pub gamma: f64,
    pub t_r: f64,
    pub t_c: f64,
    pub remainder: Vec<RemainderTerm>,
    pub alpha: f64,
    pub domain: (f64, f64),
    pub anchor: f64,
    pub anchor_value: f64,
}

/// Default regularity exponent when no remainder term fixes it.
pub const DEFAULT_ALPHA: f64 = 0.99;

impl PolePairModel {
    /// Pure pole pair on the whole real line with `theta(t_r) = 0`.
    pub fn new(gamma: f64, t_r: f64, t_c: f64) -> Result<Self> {
        Self::with_remainder(gamma, t_r, t_c, Vec::new())
    }

    pub fn with_remainder(gamma: f64, t_r: f64, t_c: f64, remainder: Vec<RemainderTerm>) -> Result<Self> {
        if !(t_c > 0.0) || !t_c.is_finite() {
            return Err(Error::domain(format!("t_c must be positive, got {t_c}")));
        }
        if !gamma.is_finite() || gamma == 0.0 {
            return Err(Error::domain(format!("gamma must be finite and nonzero, got {gamma}")));
        }
        if !t_r.is_finite() {
            return Err(Error::domain("t_r must be finite"));
        }
        let mut alpha: f64 = 0.0;
        let z0 = Complex64::new(t_r, t_c);
        for term in &remainder {
            let z = term.singular_point();
            let dist = (z - Complex64::new(t_r, 0.0)).norm();
            if z.im == 0.0 || dist < t_c * (1.0 - 1e-12) {
                return Err(Error::Assumption(format!("remainder singularity at {z} lies closer to t_r than the pole pair")));
            }
            let near = (z - z0).norm().min((z - z0.conj()).norm()) < 1e-12 * t_c;
            if let RemainderTerm::Algebraic { power, .. } = term {
                if near {
                    if *power <= -1.0 {
                        return Err(Error::Assumption(format!("remainder exponent {power} is not weaker than the pole")));
                    }
                    alpha = alpha.max(-power);
                }
            }
            if let RemainderTerm::Pole { order, .. } = term {
                if near {
                    return Err(Error::Assumption(format!("a remainder pole of order {order} at the critical time changes the pole pair")));
                }
            }
        }
        let alpha = if alpha > 0.0 { alpha } else { DEFAULT_ALPHA };
        let m = PolePairModel { gamma, t_r, t_c, remainder, alpha, domain: (f64::NEG_INFINITY, f64::INFINITY), anchor: t_r, anchor_value: 0.0 };
        m.check_real()?;
        Ok(m)
    }

    fn check_real(&self) -> Result<()> {
        for k in -4..=4 {
            let t = self.t_r + 0.5 * k as f64 * self.t_c;
            let v = self.raw_jet::<f64>(t, 0)?.value();
            if v.im.abs() > 1e-10 * (1.0 + v.re.abs()) {
                return Err(Error::config(format!("theta' is not real at t = {t} (imaginary part {}); mirror the remainder terms", v.im)));
            }
        }
        Ok(())
    }

    pub fn singularity_data(&self) -> SingularityData {
        let mut radius = f64::INFINITY;
        let tr = Complex64::new(self.t_r, 0.0);
        for term in &self.remainder {
            let z = term.singular_point();
            let near = (z - Complex64::new(self.t_r, self.t_c)).norm().min((z - Complex64::new(self.t_r, -self.t_c)).norm()) < 1e-12 * self.t_c;
            if !near {
                radius = radius.min((z - tr).norm());
            }
        }
        SingularityData { t_r: self.t_r, t_c: self.t_c, gamma: self.gamma, alpha: self.alpha, radius: radius.max(self.t_c) }
    }

    fn raw_jet<R: Real>(&self, t: f64, order: usize) -> Result<Jet<R>> {
        let d = Complex::new(R::from_f64(t) - R::from_f64(self.t_r), R::from_f64(self.t_c));
        let w = Complex::new(R::one(), R::zero()) / d;
        let g2 = R::from_f64(2.0 * self.gamma);
        // c_k = i gamma (-1)^k (w^(k+1) - conj(w)^(k+1)) = -2 gamma (-1)^k Im(w^(k+1))
        let mut wp = w;
        let mut coeffs = Vec::with_capacity(order + 1);
        for k in 0..=order {
            if k > 0 {
                wp = wp * w;
            }
            let v = if k % 2 == 0 { -(g2 * wp.im) } else { g2 * wp.im };
            coeffs.push(Complex::new(v, R::zero()));
        }
        let mut j = Jet::new(t, coeffs)?;
        for term in &self.remainder {
            j = &j + &term.jet::<R>(t, order)?;
        }
        Ok(j)
    }

    pub fn theta_prime_jet<R: Real>(&self, t: f64, order: usize) -> Result<Jet<R>> {
        check_domain(t, self.domain)?;
        self.raw_jet(t, order)
    }

    pub fn theta_angle(&self, t: f64) -> Result<f64> {
        check_domain(t, self.domain)?;
        let pole = |s: f64| 2.0 * self.gamma * ((s - self.t_r) / self.t_c).atan();
        let rem = |s: f64| self.remainder.iter().map(|r| r.primitive(s)).sum::<f64>();
        Ok(self.anchor_value + pole(t) - pole(self.anchor) + rem(t) - rem(self.anchor))
    }
}

fn check_domain(t: f64, domain: (f64, f64)) -> Result<()> {
    if !t.is_finite() || t < domain.0 || t > domain.1 {
        return Err(Error::domain(format!("t = {t} outside model domain [{}, {}]", domain.0, domain.1)));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// User-supplied analytic model

type JetGenerator = dyn Fn(f64, usize) -> Result<Jet<DoubleDouble>> + Send + Sync;

/// A model given by an arbitrary jet generator (computed in double-double).
#[derive(Clone)]
pub struct AnalyticModel {
    generator: Arc<JetGenerator>,
    pub anchor: f64,
    pub anchor_value: f64,
    pub domain: (f64, f64),
    pub singularity: Option<SingularityData>,
}

impl fmt::Debug for AnalyticModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticModel").field("anchor", &self.anchor).field("domain", &self.domain).field("singularity", &self.singularity).finish()
    }
}

impl AnalyticModel {
    pub fn new<F>(generator: F, anchor: f64, domain: (f64, f64), singularity: Option<SingularityData>) -> Self
    where
        F: Fn(f64, usize) -> Result<Jet<DoubleDouble>> + Send + Sync + 'static,
    {
        AnalyticModel { generator: Arc::new(generator), anchor, anchor_value: 0.0, domain, singularity }
    }
}

// ---------------------------------------------------------------------------
// Model enum

#[derive(Clone, Debug)]
pub enum ThetaModel {
    PolePair(PolePairModel),
    Reparametrized(Box<ReparametrizedModel>),
    Analytic(AnalyticModel),
}

impl ThetaModel {
    /// Jet of `theta'` at `t` with `order + 1` coefficients.
    pub fn theta_prime_jet<R: Real>(&self, t: f64, order: usize) -> Result<Jet<R>> {
        match self {
            ThetaModel::PolePair(m) => m.theta_prime_jet(t, order),
            ThetaModel::Reparametrized(m) => m.theta_prime_jet(t, order),
            ThetaModel::Analytic(m) => {
                check_domain(t, m.domain)?;
                let j = (m.generator)(t, order)?;
                if j.order() < order || j.base() != t {
                    return Err(Error::numeric("jet generator returned a jet of the wrong order or base"));
                }
                Ok(j.truncate(order).convert())
            }
        }
    }

    pub fn theta_prime(&self, t: f64) -> Result<f64> {
        Ok(self.theta_prime_jet::<f64>(t, 0)?.value().re)
    }

    /// The mixing angle `theta(t)`, fixed by the anchor convention of the model.
    pub fn theta_angle(&self, t: f64) -> Result<f64> {
        match self {
            ThetaModel::PolePair(m) => m.theta_angle(t),
            ThetaModel::Reparametrized(m) => m.theta_angle(t),
            ThetaModel::Analytic(m) => {
                check_domain(t, m.domain)?;
                let v = crate::quad::integrate(|s| self.theta_prime(s), m.anchor, t, 1e-14, 1e-13)?;
                Ok(m.anchor_value + v)
            }
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        match self {
            ThetaModel::PolePair(m) => m.domain,
            ThetaModel::Reparametrized(m) => m.domain(),
            ThetaModel::Analytic(m) => m.domain,
        }
    }

    pub fn anchor(&self) -> f64 {
        match self {
            ThetaModel::PolePair(m) => m.anchor,
            ThetaModel::Reparametrized(m) => m.anchor(),
            ThetaModel::Analytic(m) => m.anchor,
        }
    }

    pub fn singularity_data(&self) -> Option<SingularityData> {
        match self {
            ThetaModel::PolePair(m) => Some(m.singularity_data()),
            ThetaModel::Reparametrized(m) => Some(m.singularity_data()),
            ThetaModel::Analytic(m) => m.singularity,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        spec.build()
    }
}

impl<R: Real> JetSource<R> for ThetaModel {
    fn jet_at(&self, t: f64, order: usize) -> Result<Jet<R>> {
        self.theta_prime_jet(t, order)
    }
}

/// Serialisable description of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelSpec {
    PolePair {
        gamma: f64,
        t_r: f64,
        t_c: f64,
        #[serde(default)]
        remainder: Vec<RemainderTerm>,
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default)]
        domain: Option<[f64; 2]>,
        #[serde(default)]
        anchor: Option<f64>,
        #[serde(default)]
        anchor_value: Option<f64>,
    },
    LandauZener {
        delta: f64,
        #[serde(default)]
        domain: Option<[f64; 2]>,
    },
    RationalXz(XzSpec),
}

impl ModelSpec {
    pub fn build(&self) -> Result<ThetaModel> {
        match self {
            ModelSpec::PolePair { gamma, t_r, t_c, remainder, alpha, domain, anchor, anchor_value } => {
                let mut m = PolePairModel::with_remainder(*gamma, *t_r, *t_c, remainder.clone())?;
                if let Some(a) = alpha {
                    if !(*a > 0.0 && *a < 1.0) {
                        return Err(Error::config(format!("alpha must lie in (0, 1), got {a}")));
                    }
                    m.alpha = *a;
                }
                if let Some([a, b]) = domain {
                    if !(a < b) {
                        return Err(Error::config("domain must satisfy a < b"));
                    }
                    m.domain = (*a, *b);
                }
                if let Some(a) = anchor {
                    m.anchor = *a;
                }
                if let Some(v) = anchor_value {
                    m.anchor_value = *v;
                }
                check_domain(m.anchor, m.domain).map_err(|e| Error::config(e.to_string()))?;
                Ok(ThetaModel::PolePair(m))
            }
            ModelSpec::LandauZener { delta, domain } => {
                let dom = domain.map(|[a, b]| (a, b));
                Ok(ThetaModel::Reparametrized(Box::new(ReparametrizedModel::landau_zener(*delta, dom)?)))
            }
            ModelSpec::RationalXz(spec) => Ok(ThetaModel::Reparametrized(Box::new(ReparametrizedModel::from_spec(spec)?))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::DoubleDouble;

    #[test]
    fn pole_pair_jet_matches_closed_form() {
        let m = PolePairModel::new(1.0, 0.0, 1.0).unwrap();
        let j = m.theta_prime_jet::<f64>(0.0, 10).unwrap();
        // 2/(1+t^2) = 2 sum (-1)^k t^(2k)
        for k in 0..=10 {
            let want = if k % 2 == 0 { 2.0 * if (k / 2) % 2 == 0 { 1.0 } else { -1.0 } } else { 0.0 };
            assert!((j.coeff(k).re - want).abs() < 1e-14);
            assert_eq!(j.coeff(k).im, 0.0);
        }
    }

    #[test]
    fn pole_pair_theta_against_quadrature() {
        let m = PolePairModel::new(0.7, 0.3, 0.8).unwrap();
        let model = ThetaModel::PolePair(m.clone());
        for &t in &[-2.0, -0.1, 0.3, 1.7] {
            let q = crate::quad::integrate(|s| model.theta_prime(s), 0.3, t, 1e-15, 1e-14).unwrap();
            assert!((model.theta_angle(t).unwrap() - q).abs() < 1e-10);
        }
    }

    #[test]
    fn remainder_jets_are_real_and_consistent() {
        let rem = vec![
            RemainderTerm::Algebraic {
                center: Complex64::new(0.0, 1.0),
                power: -1.0 / 3.0,
                coefficients: vec![Complex64::new(0.2, 0.1), Complex64::new(0.0, 0.05)],
                mirror: true,
            },
            RemainderTerm::Pole { location: Complex64::new(0.5, 2.0), order: 2, coefficient: Complex64::new(0.3, 0.0), mirror: true },
        ];
        let m = PolePairModel::with_remainder(1.0, 0.0, 1.0, rem).unwrap();
        assert!((m.alpha - 1.0 / 3.0).abs() < 1e-15);
        let model = ThetaModel::PolePair(m);
        let j = model.theta_prime_jet::<f64>(0.2, 6).unwrap();
        // finite-difference check of the first derivative
        let h = 1e-5;
        let fd = (model.theta_prime(0.2 + h).unwrap() - model.theta_prime(0.2 - h).unwrap()) / (2.0 * h);
        assert!((j.coeff(1).re - fd).abs() < 1e-8);
        for c in j.coeffs() {
            assert!(c.im.abs() < 1e-14);
        }
        let q = crate::quad::integrate(|s| model.theta_prime(s), 0.0, 0.9, 1e-15, 1e-14).unwrap();
        assert!((model.theta_angle(0.9).unwrap() - q).abs() < 1e-10);
        let jd = model.theta_prime_jet::<DoubleDouble>(0.2, 6).unwrap().to_f64();
        for k in 0..=6 {
            assert!((jd.coeff(k) - j.coeff(k)).norm() < 1e-13);
        }
    }

    #[test]
    fn unmirrored_complex_remainder_rejected() {
        let rem = vec![RemainderTerm::Pole { location: Complex64::new(0.0, 2.0), order: 1, coefficient: Complex64::new(1.0, 0.0), mirror: false }];
        assert!(matches!(PolePairModel::with_remainder(1.0, 0.0, 1.0, rem), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_parameters() {
        assert!(matches!(PolePairModel::new(1.0, 0.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(PolePairModel::new(1.0, 0.0, -1.0), Err(Error::Domain(_))));
        let spec = r#"{"type":"pole_pair","gamma":1,"t_r":0,"t_c":1,"domain":[-1,1]}"#;
        let m = ThetaModel::from_json(spec).unwrap();
        assert!(matches!(m.theta_prime_jet::<f64>(2.0, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn json_round_trip() {
        let spec = r#"{"type":"pole_pair","gamma":0.5,"t_r":0.1,"t_c":2.0,
            "remainder":[{"type":"algebraic","center":[0.1,2.0],"power":-0.5,"coefficients":[[0.1,0.0]]}]}"#;
        let s: ModelSpec = serde_json::from_str(spec).unwrap();
        let again: ModelSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(s, again);
        let m = s.build().unwrap();
        let sd = m.singularity_data().unwrap();
        assert_eq!(sd.t_c, 2.0);
        assert!((sd.alpha - 0.5).abs() < 1e-15);
    }
}
