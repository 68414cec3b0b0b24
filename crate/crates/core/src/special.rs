//! Gamma, log-Gamma and Beta functions.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Gamma function (Lanczos approximation, reflection for x < 1/2).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    if x > 171.7 {
        return f64::INFINITY;
    }
    if x == x.floor() && x <= 23.0 {
        let mut f = 1.0;
        let mut k = 2.0;
        while k < x {
            f *= k;
            k += 1.0;
        }
        return f;
    }
    let x = x - 1.0;
    let mut a = LANCZOS_COEF[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// Stirling remainder `ln Gamma(x) - [(x - 1/2) ln x - x + ln(2 pi)/2]` for x >= 10.
fn stirling_delta(x: f64) -> f64 {
    let r = 1.0 / x;
    let r2 = r * r;
    r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0 - r2 / 1188.0))))
}

/// Natural log of |Gamma(x)|.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        return (PI / (PI * x).sin().abs()).ln() - ln_gamma(1.0 - x);
    }
    if x >= 10.0 {
        return (x - 0.5) * x.ln() - x + HALF_LN_2PI + stirling_delta(x);
    }
    let x1 = x - 1.0;
    let mut a = LANCZOS_COEF[0];
    let t = x1 + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += c / (x1 + i as f64);
    }
    HALF_LN_2PI + (x1 + 0.5) * t.ln() - t + a.ln()
}

/// Error for arguments outside the domain of the Beta function.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("beta function requires positive arguments, got ({0}, {1})")]
pub struct BetaDomainError(pub f64, pub f64);

/// ln B(a, b) for a, b > 0, avoiding cancellation between large log-Gammas.
pub fn ln_beta(a: f64, b: f64) -> Result<f64, BetaDomainError> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(BetaDomainError(a, b));
    }
    let (p, q) = if a < b { (a, b) } else { (b, a) };
    let s = p + q;
    if p >= 10.0 {
        let corr = stirling_delta(p) + stirling_delta(q) - stirling_delta(s);
        let v = -0.5 * q.ln() + HALF_LN_2PI + corr + (p - 0.5) * (p / s).ln() + q * (-p / s).ln_1p();
        return Ok(v);
    }
    if q >= 10.0 {
        // ln Gamma(q) - ln Gamma(p + q) via Stirling, ln Gamma(p) directly
        let corr = stirling_delta(q) - stirling_delta(s);
        let v = ln_gamma(p) + corr - p * s.ln() + (q - 0.5) * (-p / s).ln_1p() + p;
        return Ok(v);
    }
    Ok((gamma(p) * gamma(q) / gamma(s)).ln())
}

/// Beta function B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b).
pub fn beta(a: f64, b: f64) -> Result<f64, BetaDomainError> {
    if !(a > 0.0 && b > 0.0) {
        return Err(BetaDomainError(a, b));
    }
    let (p, q) = if a < b { (a, b) } else { (b, a) };
    if q < 10.0 {
        return Ok(gamma(p) * gamma(q) / gamma(p + q));
    }
    ln_beta(a, b).map(f64::exp)
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gamma_values() {
        assert_eq!(gamma(5.0), 24.0);
        assert!(rel(gamma(0.5), PI.sqrt()) < 1e-14);
        assert!(rel(gamma(1.0 / 3.0), 2.678_938_534_707_747_6) < 1e-14);
        assert!(rel(ln_gamma(100.0), 359.134_205_369_575_4) < 1e-15);
        assert!(rel(ln_gamma(2.5), 0.284_682_870_472_919_2) < 1e-13);
    }

    #[test]
    fn beta_against_factorials() {
        // B(m, n) = (m-1)!(n-1)!/(m+n-1)!
        for m in 1..40u32 {
            for n in 1..40u32 {
                let lf = |k: u32| (1..k).map(|i| (i as f64).ln()).sum::<f64>();
                let exact = (lf(m) + lf(n) - lf(m + n)).exp();
                let b = beta(m as f64, n as f64).unwrap();
                assert!(rel(b, exact) < 1e-12, "B({m},{n}) = {b} vs {exact}");
            }
        }
        assert!(rel(beta(2.0, 3.0).unwrap(), 1.0 / 12.0) < 1e-15);
        assert!(rel(beta(0.5, 0.5).unwrap(), PI) < 1e-14);
    }

    #[test]
    fn beta_large_arguments() {
        // B(100, 100) = Gamma(100)^2/Gamma(200)
        let lb = ln_beta(100.0, 100.0).unwrap();
        assert!(rel(lb, -139.665_259_086_706_64) < 1e-14, "{lb}");
        let lb = ln_beta(3.0, 197.0).unwrap();
        let exact = (2.0f64).ln() - (197.0f64 * 198.0 * 199.0).ln();
        assert!(rel(lb, exact) < 1e-14);
    }

    #[test]
    fn beta_rejects_nonpositive() {
        assert!(beta(0.0, 1.0).is_err());
        assert!(beta(1.0, -2.0).is_err());
    }

    #[test]
    fn erf_values() {
        assert!((erf(0.5) - 0.520_499_877_813_046_5).abs() < 1e-14, "{}", erf(0.5));
        assert!((erf(-2.0) + 0.995_322_265_018_952_7).abs() < 1e-14);
    }
}
