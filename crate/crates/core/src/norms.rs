//! Truncated estimates of the factorial-weighted norms
//! `||f||_{(I, alpha, t_c)} = sup_{t in I} sup_k |f^(k)(t)| t_c^(alpha+k) / Gamma(alpha+k)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{Jet, JetSource};
use crate::quad::integrate_complex;
use crate::scalar::{c_to_f64, Real};
use crate::special::{beta, ln_gamma};

pub const DEFAULT_GRID: usize = 33;
pub const DEFAULT_ORDER_CAP: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub alpha: f64,
    pub t_c: f64,
    pub interval: (f64, f64),
    pub order_cap: usize,
    pub grid_points: usize,
    pub value: f64,
    /// Grid point and derivative order where the supremum is attained.
    pub argmax: (f64, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub slack: f64,
    pub holds: bool,
}

impl InequalityReport {
    fn new(lhs: f64, rhs: f64) -> Self {
        let holds = lhs <= rhs * (1.0 + 1e-12) + 1e-300;
        InequalityReport { lhs, rhs, slack: rhs - lhs, holds }
    }
}

/// Uniform grid on `[a, b]` with `points` nodes (a single node if `a == b`).
pub fn grid(interval: (f64, f64), points: usize) -> Vec<f64> {
    let (a, b) = interval;
    if a == b || points < 2 {
        return vec![a];
    }
    (0..points).map(|i| if i + 1 == points { b } else { a + (b - a) * i as f64 / (points - 1) as f64 }).collect()
}

fn check_params(alpha: f64, t_c: f64, interval: (f64, f64)) -> Result<()> {
    if !(alpha > 0.0) || !(t_c > 0.0) || !alpha.is_finite() || !t_c.is_finite() {
        return Err(Error::usage(format!("norm parameters need alpha > 0 and t_c > 0, got {alpha}, {t_c}")));
    }
    if !(interval.0 <= interval.1) {
        return Err(Error::usage("norm interval must satisfy a <= b"));
    }
    Ok(())
}

/// Weighted sup over the coefficients of one jet: returns (value, k).
pub fn jet_weighted_sup<R: Real>(jet: &Jet<R>, alpha: f64, t_c: f64, order_cap: usize) -> (f64, usize) {
    let mut best = (0.0, 0);
    let lt = t_c.ln();
    for k in 0..=order_cap.min(jet.order()) {
        let c = c_to_f64(jet.coeff(k)).norm();
        if c == 0.0 {
            continue;
        }
        let kf = k as f64;
        let v = (c.ln() + ln_gamma(kf + 1.0) + (alpha + kf) * lt - ln_gamma(alpha + kf)).exp();
        if v > best.0 {
            best = (v, k);
        }
    }
    best
}

fn estimate_from_jets<R: Real>(
    jets: impl Iterator<Item = Result<Jet<R>>>,
    alpha: f64,
    t_c: f64,
    interval: (f64, f64),
    order_cap: usize,
    grid_points: usize,
) -> Result<NormEstimate> {
    let mut est = NormEstimate { alpha, t_c, interval, order_cap, grid_points, value: 0.0, argmax: (interval.0, 0) };
    for j in jets {
        let j = j?;
        let (v, k) = jet_weighted_sup(&j, alpha, t_c, order_cap);
        if v > est.value {
            est.value = v;
            est.argmax = (j.base(), k);
        }
    }
    Ok(est)
}

pub fn estimate_norm<R: Real, F: JetSource<R> + ?Sized>(
    f: &F,
    interval: (f64, f64),
    alpha: f64,
    t_c: f64,
    order_cap: usize,
    grid_points: usize,
) -> Result<NormEstimate> {
    check_params(alpha, t_c, interval)?;
    let g = grid(interval, grid_points);
    estimate_from_jets(g.iter().map(|&t| f.jet_at(t, order_cap)), alpha, t_c, interval, order_cap, g.len())
}

/// `B(a, b)`; non-positive arguments are a usage error.
pub fn beta_function(a: f64, b: f64) -> Result<f64> {
    beta(a, b).map_err(|e| Error::usage(e.to_string()))
}

/// `||fg||_{alpha+beta} <= B(alpha, beta) ||f||_alpha ||g||_beta` on truncated estimates.
#[allow(clippy::too_many_arguments)]
pub fn check_product_inequality<R: Real, F: JetSource<R> + ?Sized, G: JetSource<R> + ?Sized>(
    f: &F,
    g: &G,
    alpha: f64,
    beta_: f64,
    t_c: f64,
    interval: (f64, f64),
    order_cap: usize,
    grid_points: usize,
) -> Result<InequalityReport> {
    check_params(alpha, t_c, interval)?;
    check_params(beta_, t_c, interval)?;
    let nf = estimate_norm(f, interval, alpha, t_c, order_cap, grid_points)?;
    let ng = estimate_norm(g, interval, beta_, t_c, order_cap, grid_points)?;
    let pts = grid(interval, grid_points);
    let prod =
        estimate_from_jets(pts.iter().map(|&t| Ok(&f.jet_at(t, order_cap)? * &g.jet_at(t, order_cap)?)), alpha + beta_, t_c, interval, order_cap, pts.len())?;
    Ok(InequalityReport::new(prod.value, beta_function(alpha, beta_)? * nf.value * ng.value))
}

/// `||int_s^t f||_{alpha-1} <= max((alpha-1) sup|t-s| / t_c, 1) ||f||_alpha` on truncated estimates.
pub fn check_integration_inequality<F: JetSource<f64> + ?Sized>(
    f: &F,
    s_anchor: f64,
    alpha: f64,
    t_c: f64,
    interval: (f64, f64),
    order_cap: usize,
    grid_points: usize,
) -> Result<InequalityReport> {
    check_params(alpha, t_c, interval)?;
    if !(alpha > 1.0) {
        return Err(Error::usage("the integration inequality needs alpha > 1"));
    }
    if order_cap == 0 {
        return Err(Error::usage("the integration inequality needs an order cap >= 1"));
    }
    let nf = estimate_norm(f, interval, alpha, t_c, order_cap, grid_points)?;
    let pts = grid(interval, grid_points);
    let antider = |t: f64| -> Result<Jet<f64>> {
        let v = integrate_complex(|u| Ok(f.jet_at(u, 0)?.value()), s_anchor, t, 1e-300, 1e-13)?;
        Ok(f.jet_at(t, order_cap - 1)?.antiderivative(v))
    };
    let lhs = estimate_from_jets(pts.iter().map(|&t| antider(t)), alpha - 1.0, t_c, interval, order_cap, pts.len())?;
    let reach = (interval.0 - s_anchor).abs().max((interval.1 - s_anchor).abs());
    let factor = ((alpha - 1.0) * reach / t_c).max(1.0);
    Ok(InequalityReport::new(lhs.value, factor * nf.value))
}

/// Jet at 0 of the elliptic theta function `sum_n z^(n^2)`.
pub fn elliptic_theta3_jet(order: usize) -> Jet<f64> {
    let mut c = vec![Complex64::new(0.0, 0.0); order + 1];
    let mut n = 0usize;
    while n * n <= order {
        c[n * n] = Complex64::new(if n == 0 { 1.0 } else { 2.0 }, 0.0);
        n += 1;
    }
    Jet::new(0.0, c).expect("non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theta::{PolePairModel, ThetaModel};

    fn pole_jet(t: f64, k: usize) -> Result<Jet<f64>> {
        ThetaModel::PolePair(PolePairModel::new(1.0, 0.0, 1.0)?).theta_prime_jet(t, k)
    }

    #[test]
    fn pole_pair_norm_at_origin() {
        for &cap in &[10, 30, 60] {
            let e = estimate_norm(&pole_jet, (0.0, 0.0), 1.0, 1.0, cap, 1).unwrap();
            assert!((e.value - 2.0).abs() < 1e-12, "{}", e.value);
        }
    }

    #[test]
    fn constant_function() {
        let f = |t: f64, k: usize| {
            Jet::new(t, {
                let mut v = vec![Complex64::new(0.0, 0.0); k + 1];
                v[0] = Complex64::new(-3.0, 0.0);
                v
            })
        };
        let e = estimate_norm(&f, (0.0, 0.0), 1.0, 0.5, 20, 1).unwrap();
        assert!((e.value - 1.5).abs() < 1e-15);
        assert_eq!(e.argmax.1, 0);
    }

    #[test]
    fn elliptic_theta_diverges_below_one() {
        let f = |_t: f64, k: usize| Ok(elliptic_theta3_jet(k));
        let e = |alpha: f64, cap: usize| estimate_norm(&f, (0.0, 0.0), alpha, 1.0, cap, 1).unwrap().value;
        assert!(e(0.5, 400) > 3.0 * e(0.5, 25));
        assert!((e(1.0, 400) - e(1.0, 25)).abs() < 1e-9);
    }

    #[test]
    fn derivative_shift_and_pointwise_bound() {
        let d = |t: f64, k: usize| pole_jet(t, k + 1)?.derivative();
        let n0 = estimate_norm(&pole_jet, (-0.5, 0.5), 1.0, 1.0, 40, 9).unwrap();
        let n1 = estimate_norm(&d, (-0.5, 0.5), 2.0, 1.0, 39, 9).unwrap();
        assert!(n1.value <= n0.value * (1.0 + 1e-12));
        for t in grid((-0.5, 0.5), 9) {
            let j = pole_jet(t, 40).unwrap();
            for k in 0..=40 {
                let dk = j.coeff(k).norm() * crate::special::gamma(k as f64 + 1.0);
                assert!(dk <= crate::special::gamma(1.0 + k as f64) * n0.value * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn beta_values() {
        assert!((beta_function(1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((beta_function(2.0, 3.0).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        assert!(matches!(beta_function(0.0, 1.0), Err(Error::Usage(_))));
        for &n in &[10usize, 50] {
            let s: f64 = (1..n).map(|k| beta_function(k as f64, (n - k) as f64).unwrap()).sum();
            assert!(s <= 4.0 / (n as f64 - 1.0));
        }
    }

    #[test]
    fn inequalities_on_pole_pair() {
        let r = check_product_inequality(&pole_jet, &pole_jet, 1.0, 1.0, 1.0, (-0.5, 0.5), 40, 9).unwrap();
        assert!(r.holds, "{r:?}");
        let one = |t: f64, k: usize| Ok(Jet::constant(t, Complex64::new(1.0, 0.0), k));
        let r = check_product_inequality(&pole_jet, &one, 1.0, 0.7, 1.0, (-0.5, 0.5), 40, 9).unwrap();
        assert!(r.holds, "{r:?}");
        let dd = |t: f64, k: usize| pole_jet(t, k + 1)?.derivative();
        let r = check_integration_inequality(&dd, 0.0, 2.0, 1.0, (-0.5, 0.5), 40, 9).unwrap();
        assert!(r.holds, "{r:?}");
        let zero = |t: f64, k: usize| Ok(Jet::zero(t, k));
        let r = check_integration_inequality(&zero, 0.0, 2.5, 1.0, (-0.5, 0.5), 20, 5).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
    }
}
