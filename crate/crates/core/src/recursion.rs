//! Superadiabatic coefficient functions `x_n, y_n, z_n` as jets.
//!
//! `x_1 = -i theta'/2`, `y_1 = z_1 = 0` and for `n >= 2`
//! `x_n = -i (z'_{n-1} - theta' y_{n-1})`,
//! `y_n = sum_j (-x_j x_{n-j} + y_j y_{n-j} + z_j z_{n-j})`,
//! `z_n = -i x'_{n-1}`.

use num_complex::{Complex, Complex64};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::quad::integrate_complex;
use crate::scalar::{c_to_f64, Real};
use crate::special::ln_gamma;
use crate::theta::{SingularityData, ThetaModel};

/// Deliberate corruption of one recursion step, for sensitivity tests.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corruption {
    /// Index `n` whose `x_n` is perturbed.
    pub index: usize,
    /// Relative perturbation of the `theta' y_{n-1}` term.
    pub scale: f64,
}

#[derive(Clone, Debug)]
pub struct SuperadiabaticSequence<R: Real = f64> {
    base: f64,
    theta_prime: Jet<R>,
    x: Vec<Jet<R>>,
    y: Vec<Jet<R>>,
    z: Vec<Jet<R>>,
    anchor: Option<(f64, Vec<Complex<R>>)>,
}

pub fn default_seed_order(n_max: usize) -> usize {
    2 * n_max + 8
}

fn minus_i<R: Real>() -> Complex<R> {
    Complex::new(R::zero(), -R::one())
}

impl<R: Real> SuperadiabaticSequence<R> {
    /// Runs the recursion on a given jet of `theta'`. The seed order must be at least `n_max + 1`.
    pub fn from_theta_prime(theta_prime: Jet<R>, n_max: usize, corruption: Option<Corruption>) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::usage("the sequence needs n_max >= 1"));
        }
        if theta_prime.order() < n_max + 1 {
            return Err(Error::usage(format!("seed jet order {} is too small for n_max = {n_max} (need at least {})", theta_prime.order(), n_max + 1)));
        }
        let base = theta_prime.base();
        let k0 = theta_prime.order();
        let mut x = vec![theta_prime.scale(minus_i::<R>().scale(R::from_f64(0.5)))];
        let mut y = vec![Jet::zero(base, k0)];
        let mut z = vec![Jet::zero(base, k0)];
        for n in 2..=n_max {
            let mut ty = &theta_prime * &y[n - 2];
            if let Some(c) = corruption.filter(|c| c.index == n) {
                ty = ty.scale_real(R::one() + R::from_f64(c.scale));
            }
            let xn = (&z[n - 2].derivative()? - &ty).scale(minus_i());
            let mut yn = Jet::zero(base, k0);
            for j in 1..n {
                let term = &(&(&y[j - 1] * &y[n - j - 1]) + &(&z[j - 1] * &z[n - j - 1])) - &(&x[j - 1] * &x[n - j - 1]);
                yn = &yn + &term;
            }
            let zn = x[n - 2].derivative()?.scale(minus_i());
            x.push(xn);
            y.push(yn);
            z.push(zn);
        }
        Ok(SuperadiabaticSequence { base, theta_prime, x, y, z, anchor: None })
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn max_n(&self) -> usize {
        self.x.len()
    }

    pub fn theta_prime(&self) -> &Jet<R> {
        &self.theta_prime
    }

    fn check_index(&self, n: usize) {
        assert!(n >= 1 && n <= self.max_n(), "index {n} outside 1..={}", self.max_n());
    }

    pub fn x(&self, n: usize) -> &Jet<R> {
        self.check_index(n);
        &self.x[n - 1]
    }

    pub fn y(&self, n: usize) -> &Jet<R> {
        self.check_index(n);
        &self.y[n - 1]
    }

    pub fn z(&self, n: usize) -> &Jet<R> {
        self.check_index(n);
        &self.z[n - 1]
    }

    /// Anchor point and the values `y_n(anchor)`, if the sequence was built from a model.
    pub fn anchor_values(&self) -> Option<(f64, &[Complex<R>])> {
        self.anchor.as_ref().map(|(a, v)| (*a, v.as_slice()))
    }

    /// Exact parity check: `x_n = 0` for even `n`, `y_n = z_n = 0` for odd `n`.
    pub fn parity_holds(&self) -> bool {
        (1..=self.max_n()).all(|n| if n % 2 == 0 { self.x(n).is_zero() } else { self.y(n).is_zero() && self.z(n).is_zero() })
    }

    /// Largest relative violation of `x_n` imaginary and `y_n, z_n` real.
    pub fn realness_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        let mut check = |j: &Jet<R>, want_real: bool| {
            let scale = j.coeffs().iter().map(|c| c_to_f64(*c).norm()).fold(0.0, f64::max);
            if scale == 0.0 {
                return;
            }
            for c in j.coeffs() {
                let c = c_to_f64(*c);
                let off = if want_real { c.im.abs() } else { c.re.abs() };
                worst = worst.max(off / scale);
            }
        };
        for n in 1..=self.max_n() {
            check(self.x(n), false);
            check(self.y(n), true);
            check(self.z(n), true);
        }
        worst
    }
}

/// Builds the sequence at `t` from a seed jet of order `k0`, plus the anchor values `y_n(anchor)`.
pub fn build_sequence<R: Real>(model: &ThetaModel, t: f64, n_max: usize, k0: usize) -> Result<SuperadiabaticSequence<R>> {
    build_sequence_with(model, t, n_max, k0, None)
}

pub fn build_sequence_with<R: Real>(model: &ThetaModel, t: f64, n_max: usize, k0: usize, corruption: Option<Corruption>) -> Result<SuperadiabaticSequence<R>> {
    if k0 < n_max + 1 {
        return Err(Error::usage(format!("seed order {k0} is too small for n_max = {n_max}")));
    }
    let mut seq = SuperadiabaticSequence::from_theta_prime(model.theta_prime_jet::<R>(t, k0)?, n_max, corruption)?;
    let a = model.anchor();
    let at_anchor = if a == t { seq.clone() } else { SuperadiabaticSequence::from_theta_prime(model.theta_prime_jet::<R>(a, n_max + 1)?, n_max, corruption)? };
    seq.anchor = Some((a, at_anchor.y.iter().map(|j| j.value()).collect()));
    Ok(seq)
}

/// `z_{n+2}` via the integro-differential form
/// `-z_{n+2} = z_n'' + theta'^2 z_n + theta'' (int_a^t theta' z_n - y_n(a))`.
pub fn oracle_z_next<R: Real>(model: &ThetaModel, seq: &SuperadiabaticSequence<R>, n: usize) -> Result<Jet<R>> {
    if !n.is_multiple_of(2) || n < 2 {
        return Err(Error::usage("the integro-differential route needs an even index n >= 2"));
    }
    if n > seq.max_n() {
        return Err(Error::usage(format!("index {n} exceeds the sequence length {}", seq.max_n())));
    }
    let (a, ya) = seq.anchor_values().ok_or_else(|| Error::usage("sequence carries no anchor values"))?;
    let t = seq.base();
    let zn = seq.z(n);
    let tp = seq.theta_prime();
    let definite = if a == t {
        Complex64::new(0.0, 0.0)
    } else {
        integrate_complex(
            |s| {
                let q = SuperadiabaticSequence::from_theta_prime(model.theta_prime_jet::<R>(s, n + 1)?, n, None)?;
                Ok(c_to_f64(q.theta_prime().value() * q.z(n).value()))
            },
            a,
            t,
            1e-300,
            1e-14,
        )?
    };
    let c = Complex::new(R::from_f64(definite.re), R::from_f64(definite.im)) - ya[n - 1];
    let integral = (tp * zn).antiderivative(c);
    let tpp = tp.derivative()?;
    let rhs = &(&zn.derivative()?.derivative()? + &(&(tp * tp) * zn)) + &(&tpp * &integral);
    Ok(-&rhs)
}

/// `sup_k |(y_n' + theta' z_n)_k|` relative to the coefficient scale of `y_n`.
pub fn diffeq_residual<R: Real>(seq: &SuperadiabaticSequence<R>, n: usize) -> Result<f64> {
    let yn = seq.y(n);
    if yn.is_zero() && seq.z(n).is_zero() {
        return Ok(0.0);
    }
    let r = &yn.derivative()? + &(seq.theta_prime() * seq.z(n));
    let scale = yn.coeffs().iter().map(|c| c_to_f64(*c).norm()).fold(0.0, f64::max);
    let sup = r.coeffs().iter().map(|c| c_to_f64(*c).norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(sup);
    }
    Ok(sup / scale)
}

/// `c_gamma = 2 sin(gamma pi / 2) / pi`.
pub fn c_gamma(gamma: f64) -> f64 {
    2.0 * (gamma * std::f64::consts::FRAC_PI_2).sin() / std::f64::consts::PI
}

/// Leading asymptotics of `x_n` divided by `(n-1)!/t_c^n`.
pub fn asymptotic_reference_x_scaled(data: &SingularityData, n: usize, t: f64) -> Complex64 {
    let w = Complex64::new(1.0, -(t - data.t_r) / data.t_c).powi(-(n as i32));
    Complex64::new(0.0, -c_gamma(data.gamma) * w.re)
}

/// Leading asymptotics of `z_n` divided by `(n-1)!/t_c^n`.
pub fn asymptotic_reference_z_scaled(data: &SingularityData, n: usize, t: f64) -> Complex64 {
    let w = Complex64::new(1.0, -(t - data.t_r) / data.t_c).powi(-(n as i32));
    Complex64::new(c_gamma(data.gamma) * w.im, 0.0)
}

/// `ln((n-1)!/t_c^n)`.
pub fn ln_factorial_scale(n: usize, t_c: f64) -> f64 {
    ln_gamma(n as f64) - n as f64 * t_c.ln()
}

/// Leading asymptotics of `x_n(t)` for odd `n`; errors if the value overflows.
pub fn asymptotic_reference_x(data: &SingularityData, n: usize, t: f64) -> Result<Complex64> {
    if n.is_multiple_of(2) || n == 0 {
        return Err(Error::usage("x_n vanishes for even n"));
    }
    let scale = ln_factorial_scale(n, data.t_c);
    if scale > 700.0 {
        return Err(Error::numeric(format!("(n-1)!/t_c^n overflows at n = {n}; use the scaled reference")));
    }
    Ok(asymptotic_reference_x_scaled(data, n, t) * scale.exp())
}

/// Logarithms of the a priori bounds on `sup|x_n|, sup|z_n|` and on `sup|y_n|`.
pub fn apriori_log_bounds(n: usize, tau: f64, theta_norm: f64) -> (f64, f64) {
    let e = 42.0 * theta_norm * theta_norm;
    // ln(exp(e) - c) without overflow
    let ln_em = |c: f64| e + (-c * (-e).exp()).ln_1p();
    let nf = n as f64;
    let xz = ln_gamma(nf) - nf * tau.ln() + theta_norm.ln() + ln_em(0.5);
    let y = if n >= 2 { ln_gamma(nf - 1.0) - nf * tau.ln() + ln_em(1.0) } else { f64::INFINITY };
    (xz, y)
}

/// Natural logarithm of `|c|`, for comparisons against log-space bounds.
pub fn ln_abs<R: Real>(c: Complex<R>) -> f64 {
    let v = c_to_f64(c).norm();
    if v == 0.0 {
        f64::NEG_INFINITY
    } else {
        v.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::DoubleDouble;
    use crate::theta::PolePairModel;

    fn pole(gamma: f64) -> ThetaModel {
        ThetaModel::PolePair(PolePairModel::new(gamma, 0.0, 1.0).unwrap())
    }

    #[test]
    fn zero_seed_gives_zero_sequence() {
        let s = SuperadiabaticSequence::from_theta_prime(Jet::<f64>::zero(0.3, 12), 10, None).unwrap();
        for n in 1..=10 {
            assert!(s.x(n).is_zero() && s.y(n).is_zero() && s.z(n).is_zero());
        }
    }

    #[test]
    fn low_order_terms_by_hand() {
        let m = pole(1.0);
        let t = 0.37;
        let s = build_sequence::<f64>(&m, t, 3, 10).unwrap();
        let tp = m.theta_prime_jet::<f64>(t, 10).unwrap();
        let y2 = (&tp * &tp).scale_real(0.25);
        let z2 = tp.derivative().unwrap().scale_real(-0.5);
        let x3 = (&z2.derivative().unwrap() - &(&(&tp * &tp) * &tp).scale_real(0.25)).scale(Complex64::new(0.0, -1.0));
        for k in 0..=7 {
            assert!((s.y(2).coeff(k) - y2.coeff(k)).norm() < 1e-13 * (1.0 + y2.coeff(k).norm()));
            assert!((s.z(2).coeff(k) - z2.coeff(k)).norm() < 1e-13 * (1.0 + z2.coeff(k).norm()));
            assert!((s.x(3).coeff(k) - x3.coeff(k)).norm() < 1e-12 * (1.0 + x3.coeff(k).norm()));
        }
    }

    #[test]
    fn parity_and_realness() {
        let s = build_sequence::<f64>(&pole(1.0 / 3.0), 0.4, 20, 48).unwrap();
        assert!(s.parity_holds());
        assert!(s.realness_defect() < 1e-14, "{:e}", s.realness_defect());
    }

    #[test]
    fn insufficient_seed_order() {
        assert!(matches!(build_sequence::<f64>(&pole(1.0), 0.0, 20, 15), Err(Error::Usage(_))));
    }

    #[test]
    fn oracle_matches_recursion() {
        let m = pole(1.0);
        for &t in &[-0.5, 0.0, 0.5] {
            let s = build_sequence::<DoubleDouble>(&m, t, 20, 48).unwrap();
            for n in (2..=18).step_by(2) {
                let o = oracle_z_next(&m, &s, n).unwrap();
                let r = s.z(n + 2);
                let scale = r.coeffs().iter().take(4).map(|c| c_to_f64(*c).norm()).fold(0.0, f64::max);
                for k in 0..4 {
                    let d = c_to_f64(o.coeff(k) - r.coeff(k)).norm();
                    assert!(d <= 1e-10 * scale, "t {t} n {n} k {k}: {d:e} vs {scale:e}");
                }
            }
        }
    }

    #[test]
    fn diffeq_residual_small_and_sensitive() {
        let m = pole(1.0);
        let s = build_sequence::<DoubleDouble>(&m, 0.2, 20, 48).unwrap();
        for n in 1..=20 {
            let r = diffeq_residual(&s, n).unwrap();
            if n % 2 == 1 {
                assert_eq!(r, 0.0);
            } else {
                assert!(r < 1e-20, "n {n}: {r:e}");
            }
        }
        let c = Corruption { index: 5, scale: 1e-3 };
        let bad = build_sequence_with::<DoubleDouble>(&m, 0.2, 20, 48, Some(c)).unwrap();
        assert!(diffeq_residual(&bad, 6).unwrap() > 1e-8);
    }

    #[test]
    fn approaches_leading_asymptotics() {
        let m = pole(1.0);
        let d = m.singularity_data().unwrap();
        for &t in &[0.0, 0.5] {
            let s = build_sequence::<DoubleDouble>(&m, t, 42, 44).unwrap();
            let sx = ln_factorial_scale(41, 1.0).exp();
            let sz = ln_factorial_scale(42, 1.0).exp();
            let dx = c_to_f64(s.x(41).value()) / sx - asymptotic_reference_x_scaled(&d, 41, t);
            let dz = c_to_f64(s.z(42).value()) / sz - asymptotic_reference_z_scaled(&d, 42, t);
            assert!(dx.norm() < 0.05 && dz.norm() < 0.05, "t {t}: {dx} {dz}");
        }
    }

    #[test]
    fn reference_on_axis() {
        let d = SingularityData { t_r: 0.0, t_c: 2.0, gamma: 1.0, alpha: 0.5, radius: 2.0 };
        let v = asymptotic_reference_x(&d, 5, 0.0).unwrap();
        assert!((v.im.abs() - c_gamma(1.0) * 24.0 / 32.0).abs() < 1e-14);
        let off = asymptotic_reference_x_scaled(&d, 4, 2.0);
        // |(1 - i)^{-4}| = 1/4 and the value is real there
        assert!((off.im.abs() - c_gamma(1.0) / 4.0).abs() < 1e-14);
    }
}
