//! Late Taylor coefficients from singularity data.
//!
//! For `f` analytic on `|z| < R` with algebraic singularities `f ~ g_j (z - z_j)^{-alpha_j}`
//! on `|z| = R`, the coefficients behave like
//! `sum_j e^{-i pi alpha_j} g_j / Gamma(alpha_j) n^{alpha_j - 1} / z_j^{n + alpha_j}`.
//! Branches: `arg(z - z_j)` is taken in `(arg z_j, arg z_j + 2 pi)`, so the cut points away from 0.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::log_log_slope;
use crate::jet::JetSource;
use crate::scalar::{c_to_f64, DoubleDouble};
use crate::special::ln_gamma;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgebraicSingularity {
    pub z: Complex64,
    pub alpha: f64,
    pub g0: Complex64,
}

fn check(sings: &[AlgebraicSingularity]) -> Result<()> {
    let r = sings.first().ok_or_else(|| Error::usage("no singularities given"))?.z.norm();
    for s in sings {
        if (s.z.norm() - r).abs() > 1e-10 * r {
            return Err(Error::usage(format!("singularity {} is not on the circle |z| = {r}", s.z)));
        }
        if s.alpha <= 0.0 && s.alpha == s.alpha.round() {
            return Err(Error::Assumption(format!("alpha = {} is a pole of Gamma", s.alpha)));
        }
    }
    Ok(())
}

/// `1/Gamma(alpha)` as sign and log-magnitude.
fn recip_gamma(alpha: f64) -> f64 {
    let g = crate::special::gamma(alpha);
    if g.is_finite() {
        1.0 / g
    } else {
        (-ln_gamma(alpha)).exp()
    }
}

pub fn predict_coefficient(sings: &[AlgebraicSingularity], n: usize) -> Result<Complex64> {
    check(sings)?;
    if n == 0 {
        return Err(Error::usage("the prediction needs n >= 1"));
    }
    let nf = n as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for s in sings {
        let i = Complex64::new(0.0, 1.0);
        let log_term = -i * std::f64::consts::PI * s.alpha + (s.alpha - 1.0) * nf.ln() - (nf + s.alpha) * s.z.ln();
        sum += s.g0 * recip_gamma(s.alpha) * log_term.exp();
    }
    Ok(sum)
}

/// Taylor coefficients at 0 up to order `n_max`, computed in double-double.
pub fn true_coefficients<F: JetSource<DoubleDouble> + ?Sized>(f: &F, n_max: usize) -> Result<Vec<Complex64>> {
    let j = f.jet_at(0.0, n_max)?;
    Ok(j.coeffs().iter().map(|c| c_to_f64(*c)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DarbouxRow {
    pub n: usize,
    pub exact: Complex64,
    pub predicted: Complex64,
    pub relative_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DarbouxReport {
    pub rows: Vec<DarbouxRow>,
    /// Least-squares `c` in `e_n ~ c / n`.
    pub c: f64,
    /// Root mean square of `e_n - c/n`.
    pub residual: f64,
    /// Log-log slope of `e_n` against `n`; absent when some `e_n` vanish.
    pub slope: Option<f64>,
}

pub fn asymptotic_agreement_report(coeffs: &[Complex64], sings: &[AlgebraicSingularity], n_range: (usize, usize)) -> Result<DarbouxReport> {
    let (lo, hi) = n_range;
    if lo == 0 || lo > hi || hi >= coeffs.len() {
        return Err(Error::usage(format!("n range {lo}..={hi} outside the computed coefficients")));
    }
    let mut rows = Vec::new();
    for (n, &exact) in coeffs.iter().enumerate().take(hi + 1).skip(lo) {
        let p = predict_coefficient(sings, n)?;
        let e = (exact - p).norm() / p.norm();
        rows.push(DarbouxRow { n, exact, predicted: p, relative_error: e });
    }
    let num: f64 = rows.iter().map(|r| r.relative_error / r.n as f64).sum();
    let den: f64 = rows.iter().map(|r| 1.0 / (r.n as f64).powi(2)).sum();
    let c = num / den;
    let residual = (rows.iter().map(|r| (r.relative_error - c / r.n as f64).powi(2)).sum::<f64>() / rows.len() as f64).sqrt();
    let slope = if rows.iter().all(|r| r.relative_error > 0.0) && rows.len() >= 2 {
        Some(log_log_slope(&rows.iter().map(|r| (r.n as f64, r.relative_error)).collect::<Vec<_>>())?)
    } else {
        None
    };
    Ok(DarbouxReport { rows, c, residual, slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet;
    use crate::reparam::ReparametrizedModel;
    use crate::theta::ThetaModel;

    fn geometric(_t: f64, k: usize) -> Result<Jet<DoubleDouble>> {
        let one = Jet::<DoubleDouble>::constant(0.0, num_complex::Complex::new(DoubleDouble::ONE, DoubleDouble::ZERO), k);
        one.try_div(&(&one - &Jet::variable(0.0, k)))
    }

    fn inv_sqrt(_t: f64, k: usize) -> Result<Jet<DoubleDouble>> {
        let one = Jet::<DoubleDouble>::constant(0.0, num_complex::Complex::new(DoubleDouble::ONE, DoubleDouble::ZERO), k);
        (&one - &Jet::variable(0.0, k)).powf(DoubleDouble::from(-0.5))
    }

    #[test]
    fn simple_pole_is_exact() {
        let s = [AlgebraicSingularity { z: Complex64::new(1.0, 0.0), alpha: 1.0, g0: Complex64::new(-1.0, 0.0) }];
        let c = true_coefficients(&geometric, 50).unwrap();
        let r = asymptotic_agreement_report(&c, &s, (1, 50)).unwrap();
        assert!(r.rows.iter().all(|r| r.relative_error < 1e-14));
    }

    #[test]
    fn inverse_square_root_has_one_over_n_error() {
        let s = [AlgebraicSingularity { z: Complex64::new(1.0, 0.0), alpha: 0.5, g0: Complex64::new(0.0, 1.0) }];
        let c = true_coefficients(&inv_sqrt, 200).unwrap();
        // binomial series oracle
        let mut a = 1.0f64;
        for (n, cn) in c.iter().enumerate().skip(1) {
            a *= (n as f64 - 0.5) / n as f64;
            assert!((cn.re - a).abs() < 1e-14 * a);
        }
        let r = asymptotic_agreement_report(&c, &s, (20, 200)).unwrap();
        for row in &r.rows {
            let ne = row.n as f64 * row.relative_error;
            assert!((ne - 0.125).abs() < 0.01, "n {}: {ne}", row.n);
        }
        assert!((r.slope.unwrap() + 1.0).abs() < 0.05);
    }

    #[test]
    fn conjugate_pair_prediction_is_real() {
        let s = [
            AlgebraicSingularity { z: Complex64::new(0.0, 1.0), alpha: 1.0, g0: Complex64::new(0.0, -1.0) },
            AlgebraicSingularity { z: Complex64::new(0.0, -1.0), alpha: 1.0, g0: Complex64::new(0.0, 1.0) },
        ];
        for n in 1..30 {
            let p = predict_coefficient(&s, n).unwrap();
            assert!(p.im.abs() < 1e-14 * (1.0 + p.re.abs()));
        }
        let bad = [AlgebraicSingularity { z: Complex64::new(1.0, 0.0), alpha: -2.0, g0: Complex64::new(1.0, 0.0) }];
        assert!(matches!(predict_coefficient(&bad, 3), Err(Error::Assumption(_))));
    }

    #[test]
    fn landau_zener_pole_dominates() {
        let m = ThetaModel::Reparametrized(Box::new(ReparametrizedModel::landau_zener(1.0, None).unwrap()));
        let sd = m.singularity_data().unwrap();
        let g = sd.gamma;
        let s = [
            AlgebraicSingularity { z: Complex64::new(0.0, sd.t_c), alpha: 1.0, g0: Complex64::new(0.0, -g) },
            AlgebraicSingularity { z: Complex64::new(0.0, -sd.t_c), alpha: 1.0, g0: Complex64::new(0.0, g) },
        ];
        let c = true_coefficients(&m, 60).unwrap();
        let r = asymptotic_agreement_report(&c, &s, (20, 60)).unwrap();
        let even: Vec<(f64, f64)> = r.rows.iter().filter(|r| r.n % 2 == 0).map(|r| (r.n as f64, r.relative_error)).collect();
        let slope = log_log_slope(&even).unwrap();
        assert!(r.rows.iter().filter(|r| r.n % 2 == 0).all(|r| r.relative_error < 0.3));
        assert!((slope + 2.0 / 3.0).abs() < 0.15, "slope {slope}");
    }
}
