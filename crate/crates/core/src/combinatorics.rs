//! The majorant recursion `C_n, D_n` behind the a priori bounds.
//!
//! `C_1 = N/2`, `D_1 = 0`; `C_n = C_{n-1}` (n even) or `C_{n-1} + N D_{n-1}/(n-1)` (n odd);
//! `D_n = sum_k B(k, n-k)(C_k C_{n-k} + D_k D_{n-k})` (n even) or 0 (n odd),
//! where `N` is the norm of `theta'`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::DoubleDouble;
use crate::special::{ln_beta, ln_gamma};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSequence {
    pub theta_norm: f64,
    /// `c[n-1] = C_n`.
    pub c: Vec<f64>,
    /// `d[n-1] = D_n`.
    pub d: Vec<f64>,
}

fn beta_table(n_max: usize) -> Vec<Vec<f64>> {
    // b[n][k] = B(k, n-k)
    (0..=n_max).map(|n| (0..n.max(1)).map(|k| if k == 0 { 0.0 } else { ln_beta(k as f64, (n - k) as f64).map_or(0.0, f64::exp) }).collect()).collect()
}

pub fn build_bound_sequence(theta_norm: f64, n_max: usize) -> Result<BoundSequence> {
    if !(theta_norm > 0.0) || !theta_norm.is_finite() {
        return Err(Error::usage("the norm of theta' must be positive"));
    }
    if n_max < 2 {
        return Err(Error::usage("the bound sequence needs N >= 2"));
    }
    let b = beta_table(n_max);
    let nn = DoubleDouble::from(theta_norm);
    let mut c = vec![nn * DoubleDouble::from(0.5)];
    let mut d = vec![DoubleDouble::from(0.0)];
    for n in 2..=n_max {
        if n % 2 == 0 {
            c.push(c[n - 2]);
            let mut acc = DoubleDouble::from(0.0);
            for k in 1..n {
                acc += DoubleDouble::from(b[n][k]) * (c[k - 1] * c[n - k - 1] + d[k - 1] * d[n - k - 1]);
            }
            d.push(acc);
        } else {
            c.push(c[n - 2] + nn * d[n - 2] / DoubleDouble::from((n - 1) as f64));
            d.push(DoubleDouble::from(0.0));
        }
    }
    let to = |v: Vec<DoubleDouble>| v.into_iter().map(|x| x.hi).collect();
    Ok(BoundSequence { theta_norm, c: to(c), d: to(d) })
}

impl BoundSequence {
    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn c_n(&self, n: usize) -> f64 {
        self.c[n - 1]
    }

    pub fn d_n(&self, n: usize) -> f64 {
        self.d[n - 1]
    }

    /// Largest relative deviation from `C_n = N (1/2 + sum_{j=2}^{n-1} D_j / j)`.
    pub fn c_from_d_defect(&self) -> f64 {
        let mut s = 0.0;
        let mut worst = 0.0f64;
        for n in 1..=self.len() {
            if n >= 3 {
                s += self.d_n(n - 1) / (n - 1) as f64;
            }
            let want = self.theta_norm * (0.5 + s);
            worst = worst.max((self.c_n(n) - want).abs() / want);
        }
        worst
    }

    /// `D_n` recomputed from the expanded form in which the `C_k` are eliminated.
    pub fn d_expanded(&self, n: usize) -> f64 {
        if n % 2 == 1 {
            return 0.0;
        }
        let nn2 = self.theta_norm * self.theta_norm;
        let s: Vec<f64> = {
            // s[k] = sum_{j=1}^{k-1} D_j / j
            let mut v = vec![0.0; n + 1];
            for k in 2..=n {
                v[k] = v[k - 1] + self.d_n(k - 1) / (k - 1) as f64;
            }
            v
        };
        let b = |k: usize| ln_beta(k as f64, (n - k) as f64).map_or(0.0, f64::exp);
        let z1: f64 = nn2 / 4.0 * (1..n).map(b).sum::<f64>();
        let z2: f64 = nn2 / 2.0 * (1..n).map(|k| b(k) * (s[k] + s[n - k])).sum::<f64>();
        let z3: f64 = nn2 * (2..n).map(|k| b(k) * s[k] * s[n - k]).sum::<f64>();
        let z4: f64 = (2..n.saturating_sub(1)).map(|k| b(k) * self.d_n(k) * self.d_n(n - k)).sum();
        z1 + z2 + z3 + z4
    }

    /// Closure bounds: `C_n <= N(e^{42 N^2} - 1/2)` and `D_n <= (e^{42 N^2} - 1)/(n-1)`.
    pub fn closure_holds(&self) -> bool {
        let e = 42.0 * self.theta_norm * self.theta_norm;
        let ln_c = self.theta_norm.ln() + e + (-0.5 * (-e).exp()).ln_1p();
        let ln_d = e + (-(-e).exp()).ln_1p();
        (1..=self.len()).all(|n| {
            let okc = self.c_n(n).ln() <= ln_c + 1e-12;
            let okd = n < 2 || self.d_n(n) == 0.0 || self.d_n(n).ln() + ((n - 1) as f64).ln() <= ln_d + 1e-12;
            okc && okd
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    pub n: usize,
    pub d_n: f64,
    pub bound: f64,
    /// `D_n / bound`; the lemma holds where this is at most 1.
    pub slack: f64,
    pub holds: bool,
}

/// `(1/(n-1)) sum_{j=1}^{n/2} N^{2j} M^j / j!`, summed in log-space.
pub fn lemma_rhs(theta_norm: f64, m: f64, n: usize) -> f64 {
    let lx = (theta_norm * theta_norm * m).ln();
    let terms: Vec<f64> = (1..=n / 2).map(|j| j as f64 * lx - ln_gamma(j as f64 + 1.0)).collect();
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = terms.iter().map(|t| (t - top).exp()).sum();
    (top + s.ln() - ((n - 1) as f64).ln()).exp()
}

pub fn check_lemma_bound(seq: &BoundSequence, m: f64) -> Result<Vec<LemmaRow>> {
    if !(m > 0.0) {
        return Err(Error::usage("M must be positive"));
    }
    Ok((2..=seq.len())
        .step_by(2)
        .map(|n| {
            let bound = lemma_rhs(seq.theta_norm, m, n);
            let d_n = seq.d_n(n);
            let slack = d_n / bound;
            LemmaRow { n, d_n, bound, slack, holds: d_n <= bound * (1.0 + 1e-12) }
        })
        .collect())
}

/// Smallest `M` (to `tolerance`) for which the lemma bound holds for all even `n <= N`.
pub fn minimal_m_search(theta_norm: f64, n_max: usize, tolerance: f64) -> Result<f64> {
    if n_max < 4 {
        return Err(Error::usage("the M search needs N >= 4"));
    }
    let seq = build_bound_sequence(theta_norm, n_max)?;
    let ok = |m: f64| -> Result<bool> { Ok(check_lemma_bound(&seq, m)?.iter().all(|r| r.holds)) };
    let (mut lo, mut hi) = (0.0f64, 42.0f64);
    if !ok(hi)? {
        return Err(Error::numeric("the lemma bound fails at M = 42"));
    }
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if mid > 0.0 && ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Empirical growth exponent `p` in `sup_n (n-1) D_n ~ exp(c N^p)`, from a log-log fit
/// of `ln sup_n (n-1) D_n` against `N` over the given norms.
pub fn growth_exponent(norms: &[f64], n_max: usize) -> Result<f64> {
    if norms.len() < 2 {
        return Err(Error::usage("the growth fit needs at least two norms"));
    }
    let mut pts = Vec::new();
    for &nn in norms {
        let s = build_bound_sequence(nn, n_max)?;
        let sup = (2..=n_max).step_by(2).map(|n| (n - 1) as f64 * s.d_n(n)).fold(0.0, f64::max);
        let l = (1.0 + sup).ln();
        if l > 0.0 {
            pts.push((nn.ln(), l.ln()));
        }
    }
    Ok(crate::fit::linear_fit(&pts)?.0)
}
