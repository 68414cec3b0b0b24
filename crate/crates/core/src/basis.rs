//! Superadiabatic projections, the diagonalising unitaries and the effective Hamiltonian.
//!
//! Everything is computed in the adiabatic frame `A -> R^T A R`, `R` the rotation by
//! `theta/2`. There `H = sigma_z / 2`, the frame change adds `-(eps theta'/2) sigma_y`,
//! and the projection reads `pi^(n) = 1/2 + b.sigma` with
//! `b = (sum z_k eps^k, -i sum x_k eps^k, 1/2 - sum y_k eps^k)`.

use num_complex::{Complex, Complex64};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::recursion::{build_sequence, SuperadiabaticSequence};
use crate::scalar::{c_to_f64, Real};
use crate::theta::{SingularityData, ThetaModel};

pub type Mat2 = [[Complex64; 2]; 2];

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    m
}

pub fn adjoint(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

/// Frobenius norm.
pub fn frobenius(a: &Mat2) -> f64 {
    a.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn mat_sub(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]]
}

pub fn identity() -> Mat2 {
    let (o, z) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    [[o, z], [z, o]]
}

/// Rotation by `theta/2`; its transpose diagonalises `H(t)`.
pub fn rotation(theta: f64) -> Mat2 {
    let (s, c) = (0.5 * theta).sin_cos();
    [[Complex64::new(c, 0.0), Complex64::new(-s, 0.0)], [Complex64::new(s, 0.0), Complex64::new(c, 0.0)]]
}

/// `H(t) = (1/2)[[cos theta, sin theta], [sin theta, -cos theta]]`.
pub fn hamiltonian(theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    [[Complex64::new(0.5 * c, 0.0), Complex64::new(0.5 * s, 0.0)], [Complex64::new(0.5 * s, 0.0), Complex64::new(-0.5 * c, 0.0)]]
}

/// The adiabatic unitary `U_0 = R(theta/2)^T`.
pub fn adiabatic_unitary(theta: f64) -> Mat2 {
    let r = rotation(theta);
    adjoint(&r)
}

/// Matrix basis `X, Y, Z` at angle `theta`, with `Z = -Y'/theta'` in closed form.
pub fn matrix_basis(theta: f64) -> (Mat2, Mat2, Mat2) {
    let (s, c) = theta.sin_cos();
    let r = |v: f64| Complex64::new(v, 0.0);
    let x = [[r(0.0), r(-1.0)], [r(1.0), r(0.0)]];
    let y = [[r(-c), r(-s)], [r(-s), r(c)]];
    let z = [[r(-s), r(c)], [r(c), r(s)]];
    (x, y, z)
}

fn pauli(v: [Complex64; 3]) -> Mat2 {
    let i = Complex64::new(0.0, 1.0);
    [[v[2], v[0] - i * v[1]], [v[0] + i * v[1], -v[2]]]
}

/// Even integer `n_eps` in `[t_c/eps - 1, t_c/eps + 1)` and `sigma_eps = n_eps - t_c/eps + 1`.
pub fn optimal_n(epsilon: f64, t_c: f64) -> Result<(usize, f64)> {
    if !(epsilon > 0.0) || !(t_c > 0.0) || !epsilon.is_finite() || !t_c.is_finite() {
        return Err(Error::domain("optimal truncation needs eps > 0 and t_c > 0"));
    }
    let mut x = t_c / epsilon - 1.0;
    if (x - x.round()).abs() <= 1e-9 * x.abs().max(1.0) {
        x = x.round();
    }
    let n = (2.0 * (x / 2.0).ceil()).max(0.0);
    Ok((n as usize, n - x))
}

/// Universal leading form of the optimal coupling.
pub fn universal_coupling(data: &SingularityData, epsilon: f64, t: f64) -> Result<Complex64> {
    let (_, sigma) = optimal_n(epsilon, data.t_c)?;
    let tc = data.t_c;
    let d = t - data.t_r;
    let amp = 2.0 * (2.0 * epsilon / (std::f64::consts::PI * tc)).sqrt() * (std::f64::consts::FRAC_PI_2 * data.gamma).sin();
    let env = (-tc / epsilon - d * d / (2.0 * epsilon * tc)).exp();
    let phase = d / epsilon - d.powi(3) / (3.0 * epsilon * tc * tc) + sigma * d / tc;
    Ok(Complex64::new(0.0, amp * env * phase.cos()))
}

/// Bloch vector `b` of the truncated projection as order-1 jets, plus the sequence it came from.
struct FrameData<R: Real> {
    b: [Jet<R>; 3],
    theta_prime: R,
    seq: SuperadiabaticSequence<R>,
}

fn frame_data<R: Real>(model: &ThetaModel, t: f64, n: usize, epsilon: f64, extra: usize) -> Result<FrameData<R>> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::domain(format!("epsilon must be positive, got {epsilon}")));
    }
    let n_seq = (n + extra).max(1);
    let seq = build_sequence::<R>(model, t, n_seq, n_seq + 3)?;
    let eps = R::from_f64(epsilon);
    let zero = Jet::<R>::zero(t, 1);
    let (mut bx, mut by, mut bz) = (zero.clone(), zero.clone(), zero.clone());
    let mut p = R::one();
    let mi = Complex::new(R::zero(), -R::one());
    for k in 1..=n {
        p *= eps;
        bx = &bx + &seq.z(k).truncate(1).scale_real(p);
        by = &by + &seq.x(k).truncate(1).scale(mi).scale_real(p);
        bz = &bz - &seq.y(k).truncate(1).scale_real(p);
    }
    let bz = bz.add_constant(Complex::new(R::from_f64(0.5), R::zero()));
    let realify = |j: Jet<R>| -> Jet<R> { Jet::new(t, j.coeffs().iter().map(|c| Complex::new(c.re, R::zero())).collect()).expect("non-empty") };
    let theta_prime = seq.theta_prime().value().re;
    Ok(FrameData { b: [realify(bx), realify(by), realify(bz)], theta_prime, seq })
}

fn bb<R: Real>(b: &[Jet<R>; 3]) -> Jet<R> {
    &(&(&b[0] * &b[0]) + &(&b[1] * &b[1])) + &(&b[2] * &b[2])
}

/// Superadiabatic projection `pi^(n)` in the lab frame.
pub fn projection_at<R: Real>(model: &ThetaModel, t: f64, n: usize, epsilon: f64) -> Result<Mat2> {
    let fd = frame_data::<R>(model, t, n, epsilon, 0)?;
    let v = [0, 1, 2].map(|i| c_to_f64(fd.b[i].value()));
    let mut p = pauli(v);
    p[0][0] += 0.5;
    p[1][1] += 0.5;
    let r = rotation(model.theta_angle(t)?);
    Ok(mat_mul(&mat_mul(&r, &p), &adjoint(&r)))
}

/// `||(pi^(n))^2 - pi^(n)||`, equal to `|b.b - 1/4|`.
pub fn idempotency_defect<R: Real>(model: &ThetaModel, t: f64, n: usize, epsilon: f64) -> Result<f64> {
    let fd = frame_data::<R>(model, t, n, epsilon, 0)?;
    let d = bb(&fd.b).value() - Complex::new(R::from_f64(0.25), R::zero());
    Ok(c_to_f64(d).norm())
}

/// Frobenius norm of `[i eps d/dt - H, pi^(n)]`.
pub fn commutator_defect<R: Real>(model: &ThetaModel, t: f64, n: usize, epsilon: f64) -> Result<f64> {
    let fd = frame_data::<R>(model, t, n, epsilon, 0)?;
    let eps = R::from_f64(epsilon);
    let h = [R::zero(), -(eps * fd.theta_prime) * R::from_f64(0.5), R::from_f64(0.5)];
    let b: Vec<R> = fd.b.iter().map(|j| j.value().re).collect();
    let db: Vec<R> = fd.b.iter().map(|j| j.coeff(1).re).collect();
    // i eps b' - 2i h x b, all components imaginary
    let cross = [h[1] * b[2] - h[2] * b[1], h[2] * b[0] - h[0] * b[2], h[0] * b[1] - h[1] * b[0]];
    let mut s = 0.0;
    for k in 0..3 {
        let v = (eps * db[k] - R::from_f64(2.0) * cross[k]).to_f64();
        s += v * v;
    }
    Ok((2.0 * s).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveHamiltonian {
    pub epsilon: f64,
    pub n: usize,
    pub t: f64,
    pub rho: f64,
    pub c: Complex64,
    /// Lab-frame unitary `U^n_eps(t)`.
    pub u: Mat2,
    /// `-eps^{n+1}(x_{n+1} - z_{n+1})`, the leading form of `c`.
    pub leading: Complex64,
}

/// Direct rotation of `u = b/|b|` onto the z axis, as order-1 jets: returns `(alpha, beta)` with
/// `V = [[alpha, beta], [-conj(beta), conj(alpha)]]`.
fn direct_rotation<R: Real>(b: &[Jet<R>; 3]) -> Result<(Jet<R>, Jet<R>)> {
    let norm = bb(b).sqrt()?;
    if norm.value().re.to_f64() < 0.25 {
        return Err(Error::numeric("superadiabatic projection has lost its spectral gap; epsilon too large"));
    }
    let u: Vec<Jet<R>> = b.iter().map(|c| c.try_div(&norm)).collect::<Result<_>>()?;
    let one_pz = u[2].add_constant(Complex::new(R::one(), R::zero()));
    if one_pz.value().re.to_f64() < 1e-6 {
        return Err(Error::numeric("projection points away from the adiabatic state; epsilon too large"));
    }
    let d = one_pz.scale_real(R::from_f64(2.0)).sqrt()?;
    let alpha = one_pz.try_div(&d)?;
    let beta = (&u[0] - &u[1].scale(Complex::new(R::zero(), R::one()))).try_div(&d)?;
    Ok((alpha, beta))
}

pub fn effective_hamiltonian<R: Real>(model: &ThetaModel, t: f64, n: usize, epsilon: f64) -> Result<EffectiveHamiltonian> {
    let fd = frame_data::<R>(model, t, n, epsilon, 1)?;
    let (alpha, beta) = direct_rotation(&fd.b)?;
    let (a0, a1) = (alpha.value(), alpha.coeff(1));
    let (b0, b1) = (beta.value(), beta.coeff(1));
    let v = [[a0, b0], [-b0.conj(), a0.conj()]];
    let dv = [[a1, b1], [-b1.conj(), a1.conj()]];
    let eps = R::from_f64(epsilon);
    let half = R::from_f64(0.5);
    let zero = Complex::new(R::zero(), R::zero());
    // H_ad = sigma_z/2 - (eps theta'/2) sigma_y
    let g = eps * fd.theta_prime * half;
    let had = [[Complex::new(half, R::zero()), Complex::new(R::zero(), g)], [Complex::new(R::zero(), -g), Complex::new(-half, R::zero())]];
    let mul = |a: &[[Complex<R>; 2]; 2], b: &[[Complex<R>; 2]; 2]| {
        let mut m = [[zero; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        m
    };
    let adj = |a: &[[Complex<R>; 2]; 2]| [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]];
    let vh = mul(&mul(&v, &had), &adj(&v));
    let dvv = mul(&dv, &adj(&v));
    let ie = Complex::new(R::zero(), eps);
    let h00 = vh[0][0] + ie * dvv[0][0];
    let h01 = vh[0][1] + ie * dvv[0][1];
    let vf = [[c_to_f64(v[0][0]), c_to_f64(v[0][1])], [c_to_f64(v[1][0]), c_to_f64(v[1][1])]];
    let u = mat_mul(&vf, &adiabatic_unitary(model.theta_angle(t)?));
    let seq = &fd.seq;
    let lead = (seq.x(n + 1) - seq.z(n + 1)).value();
    let scale = (n as f64 + 1.0) * epsilon.ln();
    let leading = -c_to_f64(lead) * scale.exp();
    Ok(EffectiveHamiltonian { epsilon, n, t, rho: h00.re.to_f64(), c: c_to_f64(h01), u, leading })
}

/// The rotation `V` taking the adiabatic frame to the order-`n` superadiabatic frame.
pub fn superadiabatic_rotation<R: Real>(model: &ThetaModel, t: f64, n: usize, epsilon: f64) -> Result<Mat2> {
    let fd = frame_data::<R>(model, t, n, epsilon, 0)?;
    let (a, b) = direct_rotation(&fd.b)?;
    let (a, b) = (c_to_f64(a.value()), c_to_f64(b.value()));
    Ok([[a, b], [-b.conj(), a.conj()]])
}

/// `U^n_eps(t)` in the lab frame.
pub fn superadiabatic_unitary<R: Real>(model: &ThetaModel, t: f64, n: usize, epsilon: f64) -> Result<Mat2> {
    Ok(effective_hamiltonian::<R>(model, t, n, epsilon)?.u)
}

/// Largest deviation of `U` from unitarity.
pub fn unitarity_defect(u: &Mat2) -> f64 {
    frobenius(&mat_sub(&mat_mul(u, &adjoint(u)), &identity()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingRecord {
    pub epsilon: f64,
    pub t: f64,
    pub n: usize,
    pub sigma: f64,
    pub rho: f64,
    pub c: Complex64,
    pub universal: Complex64,
    pub error: f64,
    /// `|c - c_universal| / (eps^{3/2 - alpha} e^{-t_c/eps})`.
    pub ratio: f64,
}

/// Optimal coupling against the universal form at one `(eps, t)`.
pub fn coupling_record<R: Real>(model: &ThetaModel, data: &SingularityData, epsilon: f64, t: f64) -> Result<CouplingRecord> {
    let (n, sigma) = optimal_n(epsilon, data.t_c)?;
    let h = effective_hamiltonian::<R>(model, t, n, epsilon)?;
    let universal = universal_coupling(data, epsilon, t)?;
    let error = (h.c - universal).norm();
    let scale = epsilon.powf(1.5 - data.alpha) * (-data.t_c / epsilon).exp();
    Ok(CouplingRecord { epsilon, t, n, sigma, rho: h.rho, c: h.c, universal, error, ratio: error / scale })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingCheck {
    pub records: Vec<CouplingRecord>,
    /// max/min of the ratios over the ladder.
    pub spread: f64,
    /// True if the ratios do not increase monotonically as eps decreases.
    pub no_growth: bool,
}

/// The bounded-ratio check over an epsilon ladder (given in decreasing order).
pub fn coupling_error_check<R: Real>(model: &ThetaModel, data: &SingularityData, ladder: &[f64], t: f64) -> Result<CouplingCheck> {
    if ladder.is_empty() {
        return Err(Error::config("empty epsilon ladder"));
    }
    let records: Vec<CouplingRecord> = ladder.iter().map(|&e| coupling_record::<R>(model, data, e, t)).collect::<Result<_>>()?;
    let max = records.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let min = records.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let increasing = records.windows(2).all(|w| w[1].ratio > w[0].ratio);
    Ok(CouplingCheck { spread: max / min, no_growth: !increasing || records.len() < 3, records })
}

/// `|c| / (sqrt(eps) exp(-(t_c/eps)(1 + ln(tau/t_c))))` for a given strip width `tau`.
pub fn rhoc_ratio<R: Real>(model: &ThetaModel, t_c: f64, tau: f64, epsilon: f64, t: f64) -> Result<f64> {
    let (n, _) = optimal_n(epsilon, t_c)?;
    let h = effective_hamiltonian::<R>(model, t, n, epsilon)?;
    let ln_bound = 0.5 * epsilon.ln() - (t_c / epsilon) * (1.0 + (tau / t_c).ln());
    Ok((h.c.norm().ln() - ln_bound).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::log_log_slope;
    use crate::scalar::DoubleDouble;
    use crate::theta::PolePairModel;

    fn pole() -> ThetaModel {
        ThetaModel::PolePair(PolePairModel::new(1.0, 0.0, 1.0).unwrap())
    }

    #[test]
    fn optimal_n_cases() {
        assert_eq!(optimal_n(0.1, 1.0).unwrap(), (10, 1.0));
        assert_eq!(optimal_n(0.125, 1.0).unwrap(), (8, 1.0));
        let (n, s) = optimal_n(1.0 / 9.0, 1.0).unwrap();
        assert_eq!(n, 8);
        assert!(s.abs() < 1e-12);
    }

    #[test]
    fn universal_on_axis() {
        let d = SingularityData { t_r: 0.0, t_c: 1.0, gamma: 1.0, alpha: 0.99, radius: 1.0 };
        let e = 0.1;
        let c = universal_coupling(&d, e, 0.0).unwrap();
        let want = 2.0 * (2.0 * e / std::f64::consts::PI).sqrt() * (-1.0 / e).exp();
        assert!((c.im - want).abs() < 1e-15 * want && c.re == 0.0);
    }

    #[test]
    fn basis_and_projection() {
        let m = pole();
        let th = m.theta_angle(0.3).unwrap();
        let (_, y, z) = matrix_basis(th);
        // Z = -Y'/theta' by finite differences
        let h = 1e-6;
        let (_, yp, _) = matrix_basis(th + h);
        let (_, ym, _) = matrix_basis(th - h);
        for i in 0..2 {
            for j in 0..2 {
                let d = (yp[i][j] - ym[i][j]) / (2.0 * h);
                assert!((-d - z[i][j]).norm() < 1e-9);
            }
        }
        let p0 = projection_at::<f64>(&m, 0.3, 0, 0.1).unwrap();
        let hm = hamiltonian(th);
        let want = [[hm[0][0] + 0.5, hm[0][1]], [hm[1][0], hm[1][1] + 0.5]];
        assert!(frobenius(&mat_sub(&p0, &want)) < 1e-15);
        assert!(frobenius(&mat_sub(&want, &mat_mul(&y, &y))) > 0.1);
    }

    #[test]
    fn direct_rotation_diagonalises() {
        let m = pole();
        let fd = frame_data::<f64>(&m, 0.2, 3, 0.2, 0).unwrap();
        let (a, b) = direct_rotation(&fd.b).unwrap();
        let v = [[a.value(), b.value()], [-b.value().conj(), a.value().conj()]];
        let bv = [0, 1, 2].map(|i| fd.b[i].value());
        let r = mat_mul(&mat_mul(&v, &pauli(bv)), &adjoint(&v));
        assert!(r[0][1].norm() < 1e-15 && r[1][0].norm() < 1e-15);
        assert!(r[0][0].re > 0.0);
        assert!(unitarity_defect(&v) < 1e-15);
    }

    #[test]
    fn effective_hamiltonian_shape() {
        let m = pole();
        let h = effective_hamiltonian::<DoubleDouble>(&m, 0.0, 0, 0.1).unwrap();
        assert!((h.c - Complex64::new(0.0, 0.1)).norm() < 1e-15);
        assert!((h.rho - 0.5).abs() < 1e-15);
        let ladder = [0.08, 0.04, 0.02, 0.01];
        let mut rho_pts = Vec::new();
        let mut c_pts = Vec::new();
        let mut u_pts = Vec::new();
        for &e in &ladder {
            let h = effective_hamiltonian::<DoubleDouble>(&m, 0.3, 2, e).unwrap();
            assert!(unitarity_defect(&h.u) < 1e-13);
            rho_pts.push((e, (h.rho - 0.5).abs()));
            c_pts.push((e, (h.c - h.leading).norm() / h.leading.norm()));
            let u0 = adiabatic_unitary(m.theta_angle(0.3).unwrap());
            u_pts.push((e, frobenius(&mat_sub(&h.u, &u0))));
        }
        let sr = log_log_slope(&rho_pts).unwrap();
        let sc = log_log_slope(&c_pts).unwrap();
        let su = log_log_slope(&u_pts).unwrap();
        assert!((sr - 2.0).abs() < 0.15, "rho slope {sr}");
        // at least first order; parity removes the eps^{n+2} term here
        assert!(sc > 0.85, "c slope {sc}");
        assert!((su - 1.0).abs() < 0.15, "U slope {su}");
    }

    #[test]
    fn zero_coupling_model() {
        let gen = |t: f64, k: usize| Ok(Jet::<DoubleDouble>::zero(t, k));
        let m = ThetaModel::Analytic(crate::theta::AnalyticModel::new(gen, 0.0, (-1.0, 1.0), None));
        let h = effective_hamiltonian::<f64>(&m, 0.1, 4, 0.1).unwrap();
        assert_eq!(h.c, Complex64::new(0.0, 0.0));
        assert_eq!(h.rho, 0.5);
    }
}
