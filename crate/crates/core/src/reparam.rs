//! Reparametrisation of `H(s) = [[Z, X], [X, -Z]]` to natural time.
//!
//! Natural time is `tau(s) = 2 int_{s_r}^s sqrt(rho^2)` with `rho^2 = X^2 + Z^2`;
//! in that variable the gap is constant and the mixing angle obeys
//! `theta'(tau(s)) = (X'Z - Z'X) / (2 rho^3)`.

use num_complex::{Complex, Complex64};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::quad::{gauss_legendre, integrate};
use crate::scalar::Real;
use crate::theta::SingularityData;

// ---------------------------------------------------------------------------
// Rational functions with real coefficients

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalSpec {
    /// Numerator coefficients in ascending powers of s.
    pub num: Vec<f64>,
    /// Denominator coefficients in ascending powers of s.
    #[serde(default = "unit_den")]
    pub den: Vec<f64>,
}

fn unit_den() -> Vec<f64> {
    vec![1.0]
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rational {
    num: Vec<f64>,
    den: Vec<f64>,
}

fn poly_eval_d(c: &[f64], s: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &a in c.iter().rev() {
        dp = dp * s + p;
        p = p * s + a;
    }
    (p, dp)
}

fn poly_jet<R: Real>(c: &[f64], s: f64, order: usize) -> Vec<Complex<R>> {
    let sr = R::from_f64(s);
    let mut a: Vec<R> = c.iter().map(|&x| R::from_f64(x)).collect();
    let n = a.len();
    for i in 0..n {
        for k in (i..n.saturating_sub(1)).rev() {
            let t = a[k + 1] * sr;
            a[k] += t;
        }
    }
    let mut out: Vec<Complex<R>> = a.into_iter().map(|x| Complex::new(x, R::zero())).collect();
    out.resize(order + 1, Complex::new(R::zero(), R::zero()));
    out.truncate(order + 1);
    out
}

impl Rational {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        if num.is_empty() || den.is_empty() || den.iter().all(|&d| d == 0.0) {
            return Err(Error::config("rational function needs a numerator and a nonzero denominator"));
        }
        if num.iter().chain(&den).any(|v| !v.is_finite()) {
            return Err(Error::config("rational function coefficients must be finite"));
        }
        Ok(Rational { num, den })
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        Self::new(coeffs, vec![1.0])
    }

    pub fn from_spec(spec: &RationalSpec) -> Result<Self> {
        Self::new(spec.num.clone(), spec.den.clone())
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.eval_d(s).0
    }

    /// Value and first derivative.
    pub fn eval_d(&self, s: Complex64) -> (Complex64, Complex64) {
        let (n, dn) = poly_eval_d(&self.num, s);
        let (d, dd) = poly_eval_d(&self.den, s);
        (n / d, (dn * d - n * dd) / (d * d))
    }

    pub fn jet<R: Real>(&self, s: f64, order: usize) -> Result<Jet<R>> {
        let n = Jet::new(s, poly_jet::<R>(&self.num, s, order))?;
        if self.den.len() == 1 {
            return Ok(n.scale_real(R::one() / R::from_f64(self.den[0])));
        }
        let d = Jet::new(s, poly_jet::<R>(&self.den, s, order))?;
        n.try_div(&d)
    }
}

// ---------------------------------------------------------------------------
// Critical points

/// Local data of a zero or pole of `rho^2` in the complex s-plane:
/// `X = (s-s0)^m f (1 + (s-s0)^n g_X)`, `Z = +-i (s-s0)^m f (1 + (s-s0)^n g_Z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub s0: Complex64,
    pub m: i32,
    pub n: u32,
    pub f0: Complex64,
    pub g_x0: Complex64,
    pub g_z0: Complex64,
    /// Orientation of the pole pair: `gamma = sign * n / (2m + n + 2)`.
    pub sign: i32,
    /// Intermediate vertices of the contour from `s_r` to `s0` (straight line if empty).
    #[serde(default)]
    pub path: Vec<Complex64>,
}

impl CriticalPoint {
    pub fn k_constant(&self) -> f64 {
        (self.f0 * self.f0 * (self.g_x0 - self.g_z0)).norm()
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("critical point exponent n must be positive"));
        }
        if (2 * self.m + self.n as i32) as f64 / 2.0 <= -1.0 {
            return Err(Error::Assumption(format!("critical point {}: (2m+n)/2 = {} must exceed -1", self.s0, (2 * self.m + self.n as i32) as f64 / 2.0)));
        }
        if !(self.k_constant() > 0.0) {
            return Err(Error::Assumption(format!("critical point {}: K = |f0^2 (gX0 - gZ0)| vanishes", self.s0)));
        }
        if self.sign != 1 && self.sign != -1 {
            return Err(Error::config("critical point sign must be +1 or -1"));
        }
        if self.s0.im == 0.0 {
            return Err(Error::Geometry(format!("critical point {} lies on the real axis", self.s0)));
        }
        Ok(())
    }
}

/// Singularity data extracted from one critical point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalTime {
    pub t0: Complex64,
    pub gamma: f64,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XzSpec {
    pub x: RationalSpec,
    pub z: RationalSpec,
    #[serde(default)]
    pub s_r: f64,
    pub domain: [f64; 2],
    pub critical_points: Vec<CriticalPoint>,
    #[serde(default)]
    pub alpha_floor: f64,
}

// ---------------------------------------------------------------------------
// Model

const TABLE_NODES: usize = 4001;

/// Gauss-Legendre nodes and weights.
type Rule = (Vec<f64>, Vec<f64>);

#[derive(Clone, Debug)]
struct TauTable {
    s: Vec<f64>,
    tau: Vec<f64>,
    theta: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ReparametrizedModel {
    x: Rational,
    z: Rational,
    s_r: f64,
    s_domain: (f64, f64),
    critical: Vec<CriticalPoint>,
    alpha_floor: f64,
    table: TauTable,
    singularity: SingularityData,
    critical_times: Vec<CriticalTime>,
}

impl ReparametrizedModel {
    /// `X = s`, `Z = delta` on `[-60 delta, 60 delta]` unless a domain is given.
    pub fn landau_zener(delta: f64, domain: Option<(f64, f64)>) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::domain(format!("Landau-Zener gap parameter must be positive, got {delta}")));
        }
        let dom = domain.unwrap_or((-60.0 * delta, 60.0 * delta));
        let cp = |sgn: f64| CriticalPoint {
            s0: Complex64::new(0.0, sgn * delta),
            m: 0,
            n: 1,
            f0: Complex64::new(0.0, sgn * delta),
            g_x0: Complex64::new(0.0, -sgn / delta),
            g_z0: Complex64::new(0.0, 0.0),
            sign: 1,
            path: Vec::new(),
        };
        Self::new(Rational::polynomial(vec![0.0, 1.0])?, Rational::polynomial(vec![delta])?, 0.0, dom, vec![cp(1.0), cp(-1.0)], 0.0)
    }

    pub fn from_spec(spec: &XzSpec) -> Result<Self> {
        Self::new(
            Rational::from_spec(&spec.x)?,
            Rational::from_spec(&spec.z)?,
            spec.s_r,
            (spec.domain[0], spec.domain[1]),
            spec.critical_points.clone(),
            spec.alpha_floor,
        )
    }

    pub fn new(x: Rational, z: Rational, s_r: f64, s_domain: (f64, f64), critical: Vec<CriticalPoint>, alpha_floor: f64) -> Result<Self> {
        if !(s_domain.0 < s_domain.1) || !(s_domain.0 <= s_r && s_r <= s_domain.1) {
            return Err(Error::config("s-domain must be an interval containing s_r"));
        }
        if critical.is_empty() {
            return Err(Error::config("at least one critical point must be declared"));
        }
        if !(0.0..1.0).contains(&alpha_floor) {
            return Err(Error::config("alpha floor must lie in [0, 1)"));
        }
        for c in &critical {
            c.validate()?;
        }
        let mut model = ReparametrizedModel {
            x,
            z,
            s_r,
            s_domain,
            critical,
            alpha_floor,
            table: TauTable { s: Vec::new(), tau: Vec::new(), theta: Vec::new() },
            singularity: SingularityData { t_r: 0.0, t_c: 1.0, gamma: 0.0, alpha: 0.5, radius: 1.0 },
            critical_times: Vec::new(),
        };
        model.build_table()?;
        let mut times = Vec::new();
        for c in model.critical.clone() {
            model.verify_local_form(&c)?;
            let ct = model.extract_singularity_data(&c)?;
            model.verify_residue(&c, &ct)?;
            times.push(ct);
        }
        model.singularity = governing_singularity(&times)?;
        model.critical_times = times;
        Ok(model)
    }

    pub fn x(&self) -> &Rational {
        &self.x
    }

    pub fn z(&self) -> &Rational {
        &self.z
    }

    pub fn s_r(&self) -> f64 {
        self.s_r
    }

    pub fn critical_points(&self) -> &[CriticalPoint] {
        &self.critical
    }

    pub fn critical_times(&self) -> &[CriticalTime] {
        &self.critical_times
    }

    pub fn singularity_data(&self) -> SingularityData {
        self.singularity
    }

    pub fn anchor(&self) -> f64 {
        0.0
    }

    /// Natural-time interval covered by the s-domain.
    pub fn domain(&self) -> (f64, f64) {
        (self.table.tau[0], *self.table.tau.last().expect("non-empty table"))
    }

    pub fn rho_squared(&self, s: Complex64) -> Complex64 {
        let x = self.x.eval(s);
        let z = self.z.eval(s);
        x * x + z * z
    }

    fn rho(&self, s: f64) -> Result<f64> {
        let r2 = self.rho_squared(Complex64::new(s, 0.0)).re;
        if !(r2 > 0.0) || !r2.is_finite() {
            return Err(Error::Assumption(format!("rho^2 = {r2} is not positive at s = {s}")));
        }
        Ok(r2.sqrt())
    }

    fn build_table(&mut self) -> Result<()> {
        let (a, b) = self.s_domain;
        let h = (b - a) / (TABLE_NODES - 1) as f64;
        let s: Vec<f64> = (0..TABLE_NODES).map(|i| if i + 1 == TABLE_NODES { b } else { a + h * i as f64 }).collect();
        let piece = |lo: f64, hi: f64| integrate(|u| self.rho(u).map(|r| 2.0 * r), lo, hi, 1e-300, 1e-15);
        // accumulate outwards from s_r so that tau stays accurate near the origin
        let j = (((self.s_r - a) / h).round() as usize).min(TABLE_NODES - 1);
        let mut tau = vec![0.0; TABLE_NODES];
        tau[j] = piece(self.s_r, s[j])?;
        for i in j + 1..TABLE_NODES {
            tau[i] = tau[i - 1] + piece(s[i - 1], s[i])?;
        }
        for i in (0..j).rev() {
            tau[i] = tau[i + 1] - piece(s[i], s[i + 1])?;
        }
        let mut theta = Vec::with_capacity(TABLE_NODES);
        for (i, &si) in s.iter().enumerate() {
            let raw = self.raw_angle(si);
            if i == 0 {
                theta.push(raw);
            } else {
                let prev: f64 = theta[i - 1];
                let k = ((prev - raw) / std::f64::consts::TAU).round();
                let v = raw + k * std::f64::consts::TAU;
                if (v - prev).abs() > 1.0 {
                    return Err(Error::numeric("mixing angle varies too fast for the natural-time table"));
                }
                theta.push(v);
            }
        }
        self.table = TauTable { s, tau, theta };
        Ok(())
    }

    fn raw_angle(&self, s: f64) -> f64 {
        let sc = Complex64::new(s, 0.0);
        self.x.eval(sc).re.atan2(self.z.eval(sc).re)
    }

    /// Natural time `tau(s)` by direct quadrature from `s_r`.
    pub fn natural_time(&self, s: f64) -> Result<f64> {
        if !(self.s_domain.0 <= s && s <= self.s_domain.1) {
            return Err(Error::domain(format!("s = {s} outside the model domain")));
        }
        integrate(|u| self.rho(u).map(|r| 2.0 * r), self.s_r, s, 1e-300, 1e-15)
    }

    /// Inverse of the natural-time map on the real domain.
    pub fn inverse_natural_time(&self, t: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if !t.is_finite() || t < lo || t > hi {
            return Err(Error::domain(format!("t = {t} outside natural-time domain [{lo}, {hi}]")));
        }
        let tab = &self.table;
        let i = match tab.tau.binary_search_by(|v| v.partial_cmp(&t).expect("finite table")) {
            Ok(i) => return Ok(tab.s[i]),
            Err(i) => i.clamp(1, tab.s.len() - 1) - 1,
        };
        let (s0, s1, t0, t1) = (tab.s[i], tab.s[i + 1], tab.tau[i], tab.tau[i + 1]);
        // cubic Hermite in t with slopes ds/dt = 1/(2 rho)
        let (d0, d1) = (1.0 / (2.0 * self.rho(s0)?), 1.0 / (2.0 * self.rho(s1)?));
        let ht = t1 - t0;
        let u = (t - t0) / ht;
        let h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
        let h10 = u * (1.0 - u) * (1.0 - u);
        let h01 = u * u * (3.0 - 2.0 * u);
        let h11 = u * u * (u - 1.0);
        let mut s = h00 * s0 + h10 * ht * d0 + h01 * s1 + h11 * ht * d1;
        let (xg, wg) = gauss_legendre(16);
        for _ in 0..8 {
            let half = 0.5 * (s - s0);
            let mid = 0.5 * (s + s0);
            let mut acc = 0.0;
            for (xi, wi) in xg.iter().zip(&wg) {
                acc += wi * 2.0 * self.rho(mid + half * xi)?;
            }
            let f = t0 + acc * half - t;
            let ds = f / (2.0 * self.rho(s)?);
            s -= ds;
            if ds.abs() <= 1e-16 * (1.0 + s.abs()) {
                break;
            }
        }
        Ok(s)
    }

    pub fn theta_angle(&self, t: f64) -> Result<f64> {
        let s = self.inverse_natural_time(t)?;
        Ok(self.angle_at_s(s))
    }

    /// Mixing angle as a function of the original parameter, continuous along the real axis.
    pub fn angle_at_s(&self, s: f64) -> f64 {
        let tab = &self.table;
        let i = match tab.s.binary_search_by(|v| v.partial_cmp(&s).expect("finite")) {
            Ok(i) => return tab.theta[i],
            Err(i) => i.clamp(1, tab.s.len() - 1) - 1,
        };
        let w = (s - tab.s[i]) / (tab.s[i + 1] - tab.s[i]);
        let reference = tab.theta[i] * (1.0 - w) + tab.theta[i + 1] * w;
        let raw = self.raw_angle(s);
        raw + ((reference - raw) / std::f64::consts::TAU).round() * std::f64::consts::TAU
    }

    /// `theta'(tau(s))` as a jet in s.
    fn theta_prime_s_jet<R: Real>(&self, s: f64, order: usize) -> Result<Jet<R>> {
        let x = self.x.jet::<R>(s, order + 1)?;
        let z = self.z.jet::<R>(s, order + 1)?;
        let dx = x.derivative()?;
        let dz = z.derivative()?;
        let rho2 = &(&x * &x) + &(&z * &z);
        let rho = rho2.sqrt()?;
        let num = &(&dx * &z) - &(&dz * &x);
        let den = (&rho2 * &rho).scale_real(R::from_f64(2.0));
        num.truncate(order).try_div(&den.truncate(order))
    }

    /// Jet of `theta'` in natural time at `t`.
    pub fn theta_prime_jet<R: Real>(&self, t: f64, order: usize) -> Result<Jet<R>> {
        let s = self.inverse_natural_time(t)?;
        let g = self.theta_prime_s_jet::<R>(s, order)?;
        if order == 0 {
            return Jet::new(t, vec![g.value()]);
        }
        let x = self.x.jet::<R>(s, order)?;
        let z = self.z.jet::<R>(s, order)?;
        let rho = (&(&x * &x) + &(&z * &z)).sqrt()?;
        let tau = rho.scale_real(R::from_f64(2.0)).truncate(order - 1).antiderivative(Complex::new(R::from_f64(t), R::zero()));
        let s_of_t = tau.revert()?;
        Ok(g.compose(&s_of_t))
    }

    // -----------------------------------------------------------------------
    // Complex natural time

    /// `tau(s_end)` along the polyline `s_r -> via... -> s_end`, tracking the
    /// branch of `sqrt(rho^2)` by continuity from its positive value at `s_r`.
    /// Returns the natural time and the tracked square root at the end point.
    pub fn complex_natural_time(&self, s_end: Complex64, via: &[Complex64]) -> Result<(Complex64, Complex64)> {
        let mut verts = vec![Complex64::new(self.s_r, 0.0)];
        verts.extend_from_slice(via);
        verts.push(s_end);
        let mut prev = Complex64::new(self.rho(self.s_r)?, 0.0);
        let scale = verts.windows(2).map(|w| (w[1] - w[0]).norm()).sum::<f64>().max(1e-300);
        let mut total = Complex64::new(0.0, 0.0);
        let nseg = verts.len() - 1;
        for (k, w) in verts.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            if (b - a).norm() == 0.0 {
                continue;
            }
            let last = k + 1 == nseg;
            let end_is_critical = last && self.rho_squared(b).norm() < 1e-10 * self.rho_squared(a).norm().max(1e-300);
            if end_is_critical {
                // geometric grading towards the singular end point
                let mut lo = 0.0;
                let mut frac = 0.5;
                while frac > 1e-15 {
                    let hi = 1.0 - frac;
                    total += self.piece(a + (b - a) * lo, a + (b - a) * hi, &mut prev, scale, 0)?;
                    lo = hi;
                    frac *= 0.5;
                }
            } else {
                total += self.piece(a, b, &mut prev, scale, 0)?;
            }
        }
        Ok((total * 2.0, prev))
    }

    fn tracked_values(&self, a: Complex64, b: Complex64, nodes: &[f64], start: Complex64) -> Option<(Vec<Complex64>, Complex64)> {
        let mut prev = start;
        let mut vals = Vec::with_capacity(nodes.len());
        for &x in nodes.iter().chain(std::iter::once(&1.0)) {
            let s = a + (b - a) * (0.5 * (x + 1.0));
            let r2 = self.rho_squared(s);
            if !r2.re.is_finite() || !r2.im.is_finite() {
                return None;
            }
            let r = r2.sqrt();
            let cand = if (r * prev.conj()).re >= 0.0 { r } else { -r };
            let cos = (cand * prev.conj()).re / (cand.norm() * prev.norm()).max(1e-300);
            if cos < 0.5 {
                return None;
            }
            prev = cand;
            vals.push(cand);
        }
        let end = vals.pop().expect("end value");
        Some((vals, end))
    }

    fn piece(&self, a: Complex64, b: Complex64, prev: &mut Complex64, scale: f64, depth: usize) -> Result<Complex64> {
        thread_local! {
            static RULES: (Rule, Rule) = (gauss_legendre(20), gauss_legendre(10));
        }
        let r2a = self.rho_squared(a).norm();
        if depth > 40 {
            return Err(Error::Geometry(format!("contour passes too close to a critical point near {a}")));
        }
        let res = RULES.with(|((x20, w20), (x10, w10))| {
            let hi = self.tracked_values(a, b, x20, *prev)?;
            let lo = self.tracked_values(a, b, x10, *prev)?;
            let half = (b - a) * 0.5;
            let i20: Complex64 = hi.0.iter().zip(w20).map(|(v, w)| v * w).sum::<Complex64>() * half;
            let i10: Complex64 = lo.0.iter().zip(w10).map(|(v, w)| v * w).sum::<Complex64>() * half;
            Some((i20, i10, hi.1))
        });
        let ok = match res {
            Some((i20, i10, end)) => {
                let tol = 1e-15 * scale.max(i20.norm()) * (1.0 + r2a.sqrt());
                if (i20 - i10).norm() <= tol.max(1e-15 * i20.norm()) {
                    *prev = end;
                    return Ok(i20);
                }
                false
            }
            None => false,
        };
        debug_assert!(!ok);
        let m = (a + b) * 0.5;
        let left = self.piece(a, m, prev, scale, depth + 1)?;
        let right = self.piece(m, b, prev, scale, depth + 1)?;
        Ok(left + right)
    }

    /// Critical time, pole strength and regularity exponent of one critical point.
    pub fn extract_singularity_data(&self, c: &CriticalPoint) -> Result<CriticalTime> {
        let (t0, _) = self.complex_natural_time(c.s0, &c.path)?;
        let q = 2 * c.m + c.n as i32;
        let gamma = c.sign as f64 * c.n as f64 / (q + 2) as f64;
        let raw = q as f64 / (q + 2) as f64;
        let alpha = raw.max(self.alpha_floor).clamp(1e-3, 1.0 - 1e-12);
        Ok(CriticalTime { t0, gamma, alpha })
    }

    fn approach_direction(&self, c: &CriticalPoint) -> Complex64 {
        let from = c.path.last().copied().unwrap_or(Complex64::new(self.s_r, 0.0));
        let d = from - c.s0;
        d / d.norm()
    }

    /// Check `|rho^2| ~ 2K |s - s0|^(2m+n)` near the declared critical point.
    fn verify_local_form(&self, c: &CriticalPoint) -> Result<()> {
        let u = self.approach_direction(c);
        let dist = c.path.last().map_or((Complex64::new(self.s_r, 0.0) - c.s0).norm(), |p| (p - c.s0).norm());
        let (r1, r2) = (1e-4 * dist, 1e-5 * dist);
        let v1 = self.rho_squared(c.s0 + u * r1).norm();
        let v2 = self.rho_squared(c.s0 + u * r2).norm();
        let q = (2 * c.m + c.n as i32) as f64;
        let p = (v1 / v2).ln() / (r1 / r2).ln();
        if (p - q).abs() > 0.1 * q.abs().max(1.0) {
            return Err(Error::Assumption(format!("critical point {}: measured local exponent {p:.3} does not match 2m+n = {q}", c.s0)));
        }
        let predicted = 2.0 * c.k_constant() * r2.powf(q);
        if ((v2 - predicted) / predicted).abs() > 0.1 {
            return Err(Error::Assumption(format!("critical point {}: |rho^2| = {v2:e} but 2K r^(2m+n) = {predicted:e}", c.s0)));
        }
        Ok(())
    }

    /// Compare the declared pole strength with the residue of `theta'` at the critical time.
    fn verify_residue(&self, c: &CriticalPoint, ct: &CriticalTime) -> Result<()> {
        let u = self.approach_direction(c);
        let dist = c.path.last().map_or((Complex64::new(self.s_r, 0.0) - c.s0).norm(), |p| (p - c.s0).norm());
        let s = c.s0 + u * (1e-6 * dist);
        let (t, root) = self.complex_natural_time(s, &c.path)?;
        let (x, dx) = self.x.eval_d(s);
        let (z, dz) = self.z.eval_d(s);
        let g = (dx * z - dz * x) / (root * root * root * 2.0);
        let res = (t - ct.t0) * g;
        let i = Complex64::new(0.0, 1.0);
        let measured = if ct.t0.im > 0.0 { i * res } else { -i * res };
        if (measured.re - ct.gamma).abs() > 0.05 * ct.gamma.abs() || measured.im.abs() > 0.05 * ct.gamma.abs() {
            return Err(Error::Assumption(format!("critical point {}: declared gamma {} but the residue of theta' gives {measured}", c.s0, ct.gamma)));
        }
        Ok(())
    }
}

fn governing_singularity(times: &[CriticalTime]) -> Result<SingularityData> {
    let best = times
        .iter()
        .filter(|c| c.t0.im.abs() > 0.0)
        .min_by(|a, b| a.t0.im.abs().partial_cmp(&b.t0.im.abs()).expect("finite"))
        .ok_or_else(|| Error::Assumption("no critical time off the real axis".into()))?;
    let t_r = best.t0.re;
    let t_c = best.t0.im.abs();
    let tol = 1e-8 * t_c;
    let mut radius = f64::INFINITY;
    for c in times {
        let same = (c.t0 - best.t0).norm() < tol || (c.t0 - best.t0.conj()).norm() < tol;
        if same {
            if (c.gamma - best.gamma).abs() > 1e-12 {
                return Err(Error::Assumption("conjugate critical times carry different pole strengths".into()));
            }
            continue;
        }
        radius = radius.min((c.t0 - Complex64::new(t_r, 0.0)).norm());
    }
    if radius < t_c {
        return Err(Error::Assumption(format!("another critical time lies within distance {radius} < t_c = {t_c} of t_r")));
    }
    Ok(SingularityData { t_r, t_c, gamma: best.gamma, alpha: best.alpha, radius })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::DoubleDouble;
    use std::f64::consts::PI;

    #[test]
    fn landau_zener_natural_time() {
        let m = ReparametrizedModel::landau_zener(1.0, None).unwrap();
        // tau(1) = sqrt(2) + asinh(1)
        let want = 2f64.sqrt() + 1f64.asinh();
        assert!((m.natural_time(1.0).unwrap() - want).abs() < 1e-13);
        let s = m.inverse_natural_time(want).unwrap();
        assert!((s - 1.0).abs() < 1e-13, "s = {s:e}");
        let sd = m.singularity_data();
        assert!((sd.t_c - PI / 2.0).abs() < 1e-10, "t_c = {}", sd.t_c);
        assert!(sd.t_r.abs() < 1e-12);
        assert!((sd.gamma - 1.0 / 3.0).abs() < 1e-15);
        assert!((sd.alpha - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn landau_zener_t_c_scales_quadratically() {
        for &d in &[0.5, 2.0] {
            let m = ReparametrizedModel::landau_zener(d, None).unwrap();
            let t_c = m.singularity_data().t_c;
            assert!((t_c - PI * d * d / 2.0).abs() < 1e-9 * t_c, "delta {d}: {t_c}");
        }
    }

    #[test]
    fn theta_prime_jets_in_natural_time() {
        let m = ReparametrizedModel::landau_zener(1.0, None).unwrap();
        let j = m.theta_prime_jet::<f64>(0.0, 6).unwrap();
        assert!((j.value().re - 0.5).abs() < 1e-14);
        // compare derivatives with finite differences of theta'(t)
        for &t in &[0.0, 0.7, -1.3] {
            let j = m.theta_prime_jet::<f64>(t, 3).unwrap();
            let f = |u: f64| m.theta_prime_jet::<f64>(u, 0).unwrap().value().re;
            let h = 1e-4;
            let d1 = (f(t + h) - f(t - h)) / (2.0 * h);
            let d2 = (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h);
            assert!((j.coeff(1).re - d1).abs() < 1e-8);
            assert!((2.0 * j.coeff(2).re - d2).abs() < 1e-5);
            // theta from the table matches quadrature of theta'
            let q = integrate(|u| Ok(f(u)), 0.0, t, 1e-15, 1e-13).unwrap();
            assert!((m.theta_angle(t).unwrap() - q).abs() < 1e-10);
        }
        let jd = m.theta_prime_jet::<DoubleDouble>(0.4, 8).unwrap().to_f64();
        let jf = m.theta_prime_jet::<f64>(0.4, 8).unwrap();
        for k in 0..=8 {
            assert!((jd.coeff(k) - jf.coeff(k)).norm() < 1e-12 * (1.0 + jf.coeff(k).norm()));
        }
    }

    #[test]
    fn wrong_declared_exponent_is_rejected() {
        let cp = CriticalPoint {
            s0: Complex64::new(0.0, 1.0),
            m: 0,
            n: 2,
            f0: Complex64::new(0.0, 1.0),
            g_x0: Complex64::new(0.0, -1.0),
            g_z0: Complex64::new(0.0, 0.0),
            sign: 1,
            path: Vec::new(),
        };
        let r =
            ReparametrizedModel::new(Rational::polynomial(vec![0.0, 1.0]).unwrap(), Rational::polynomial(vec![1.0]).unwrap(), 0.0, (-5.0, 5.0), vec![cp], 0.0);
        assert!(matches!(r, Err(Error::Assumption(_))));
    }

    #[test]
    fn wrong_sign_is_rejected() {
        let spec = XzSpec {
            x: RationalSpec { num: vec![0.0, 1.0], den: vec![1.0] },
            z: RationalSpec { num: vec![1.0], den: vec![1.0] },
            s_r: 0.0,
            domain: [-5.0, 5.0],
            critical_points: vec![CriticalPoint {
                s0: Complex64::new(0.0, 1.0),
                m: 0,
                n: 1,
                f0: Complex64::new(0.0, 1.0),
                g_x0: Complex64::new(0.0, -1.0),
                g_z0: Complex64::new(0.0, 0.0),
                sign: -1,
                path: Vec::new(),
            }],
            alpha_floor: 0.0,
        };
        assert!(matches!(ReparametrizedModel::from_spec(&spec), Err(Error::Assumption(_))));
    }

    #[test]
    fn contour_through_critical_point_fails() {
        let m = ReparametrizedModel::landau_zener(1.0, None).unwrap();
        // path runs through i on its way to 2i
        let r = m.complex_natural_time(Complex64::new(0.0, 2.0), &[]);
        assert!(r.is_err());
    }
}
