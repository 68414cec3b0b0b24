//! Time-dependent Schroedinger equation `i eps psi' = H(t) psi` and transition histories.
//!
//! The angle `theta` is carried as a fifth real state component, so `H(t)` never needs a
//! separate quadrature. Stepping is the 8(5,3) embedded pair of Dormand and Prince.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{adiabatic_unitary, mat_mul, superadiabatic_rotation, Mat2};
use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::scalar::Real;
use crate::special::erf;
use crate::theta::{SingularityData, ThetaModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Lab,
    Adiabatic,
    Superadiabatic(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub tolerance: f64,
    /// Global step ceiling; defaults to `eps`.
    pub h_max: Option<f64>,
    /// `(t_r, half width)`: inside this window steps are capped at `eps/20`.
    pub focus: Option<(f64, f64)>,
    pub max_steps: usize,
}

impl EvolveOptions {
    pub fn new(tolerance: f64) -> Self {
        EvolveOptions { tolerance, h_max: None, focus: None, max_steps: 5_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionRun {
    pub epsilon: f64,
    pub t_grid: Vec<f64>,
    pub psi: Vec<[Complex64; 2]>,
    /// `theta(t)` on the grid, integrated alongside `psi`.
    pub theta: Vec<f64>,
    pub frame: Frame,
    pub norm_drift: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

type State = [f64; 5];

fn rhs(model: &ThetaModel, eps: f64, t: f64, y: &State) -> Result<State> {
    let (s, c) = y[4].sin_cos();
    let (a, b) = (Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3]));
    let f = Complex64::new(0.0, -0.5 / eps);
    let da = f * (c * a + s * b);
    let db = f * (s * a - c * b);
    Ok([da.re, da.im, db.re, db.im, model.theta_prime(t)?])
}

fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (a, k) in terms {
        for i in 0..5 {
            out[i] += h * a * k[i];
        }
    }
    out
}

mod tableau {
    pub const C2: f64 = 0.526001519587677318785587544488E-01;
    pub const C3: f64 = 0.789002279381515978178381316732E-01;
    pub const C4: f64 = 0.118350341907227396726757197510E+00;
    pub const C5: f64 = 0.281649658092772603273242802490E+00;
    pub const C6: f64 = 0.333333333333333333333333333333E+00;
    pub const C7: f64 = 0.25E+00;
    pub const C8: f64 = 0.307692307692307692307692307692E+00;
    pub const C9: f64 = 0.651282051282051282051282051282E+00;
    pub const C10: f64 = 0.6E+00;
    pub const C11: f64 = 0.857142857142857142857142857142E+00;

    pub const A21: f64 = 5.26001519587677318785587544488E-2;
    pub const A31: f64 = 1.97250569845378994544595329183E-2;
    pub const A32: f64 = 5.91751709536136983633785987549E-2;
    pub const A41: f64 = 2.95875854768068491816892993775E-2;
    pub const A43: f64 = 8.87627564304205475450678981324E-2;
    pub const A51: f64 = 2.41365134159266685502369798665E-1;
    pub const A53: f64 = -8.84549479328286085344864962717E-1;
    pub const A54: f64 = 9.24834003261792003115737966543E-1;
    pub const A61: f64 = 3.7037037037037037037037037037E-2;
    pub const A64: f64 = 1.70828608729473871279604482173E-1;
    pub const A65: f64 = 1.25467687566822425016691814123E-1;
    pub const A71: f64 = 3.7109375E-2;
    pub const A74: f64 = 1.70252211019544039314978060272E-1;
    pub const A75: f64 = 6.02165389804559606850219397283E-2;
    pub const A76: f64 = -1.7578125E-2;
    pub const A81: f64 = 3.70920001185047927108779319836E-2;
    pub const A84: f64 = 1.70383925712239993810214054705E-1;
    pub const A85: f64 = 1.07262030446373284651809199168E-1;
    pub const A86: f64 = -1.53194377486244017527936158236E-2;
    pub const A87: f64 = 8.27378916381402288758473766002E-3;
    pub const A91: f64 = 6.24110958716075717114429577812E-1;
    pub const A94: f64 = -3.36089262944694129406857109825E0;
    pub const A95: f64 = -8.68219346841726006818189891453E-1;
    pub const A96: f64 = 2.75920996994467083049415600797E1;
    pub const A97: f64 = 2.01540675504778934086186788979E1;
    pub const A98: f64 = -4.34898841810699588477366255144E1;
    pub const A101: f64 = 4.77662536438264365890433908527E-1;
    pub const A104: f64 = -2.48811461997166764192642586468E0;
    pub const A105: f64 = -5.90290826836842996371446475743E-1;
    pub const A106: f64 = 2.12300514481811942347288949897E1;
    pub const A107: f64 = 1.52792336328824235832596922938E1;
    pub const A108: f64 = -3.32882109689848629194453265587E1;
    pub const A109: f64 = -2.03312017085086261358222928593E-2;
    pub const A111: f64 = -9.3714243008598732571704021658E-1;
    pub const A114: f64 = 5.18637242884406370830023853209E0;
    pub const A115: f64 = 1.09143734899672957818500254654E0;
    pub const A116: f64 = -8.14978701074692612513997267357E0;
    pub const A117: f64 = -1.85200656599969598641566180701E1;
    pub const A118: f64 = 2.27394870993505042818970056734E1;
    pub const A119: f64 = 2.49360555267965238987089396762E0;
    pub const A1110: f64 = -3.0467644718982195003823669022E0;
    pub const A121: f64 = 2.27331014751653820792359768449E0;
    pub const A124: f64 = -1.05344954667372501984066689879E1;
    pub const A125: f64 = -2.00087205822486249909675718444E0;
    pub const A126: f64 = -1.79589318631187989172765950534E1;
    pub const A127: f64 = 2.79488845294199600508499808837E1;
    pub const A128: f64 = -2.85899827713502369474065508674E0;
    pub const A129: f64 = -8.87285693353062954433549289258E0;
    pub const A1210: f64 = 1.23605671757943030647266201528E1;
    pub const A1211: f64 = 6.43392746015763530355970484046E-1;

    pub const B1: f64 = 5.42937341165687622380535766363E-2;
    pub const B6: f64 = 4.45031289275240888144113950566E0;
    pub const B7: f64 = 1.89151789931450038304281599044E0;
    pub const B8: f64 = -5.8012039600105847814672114227E0;
    pub const B9: f64 = 3.1116436695781989440891606237E-1;
    pub const B10: f64 = -1.52160949662516078556178806805E-1;
    pub const B11: f64 = 2.01365400804030348374776537501E-1;
    pub const B12: f64 = 4.47106157277725905176885569043E-2;

    pub const BHH1: f64 = 0.244094488188976377952755905512E+00;
    pub const BHH2: f64 = 0.733846688281611857341361741547E+00;
    pub const BHH3: f64 = 0.220588235294117647058823529412E-01;

    pub const ER1: f64 = 0.1312004499419488073250102996E-01;
    pub const ER6: f64 = -0.1225156446376204440720569753E+01;
    pub const ER7: f64 = -0.4957589496572501915214079952E+00;
    pub const ER8: f64 = 0.1664377182454986536961530415E+01;
    pub const ER9: f64 = -0.3503288487499736816886487290E+00;
    pub const ER10: f64 = 0.3341791187130174790297318841E+00;
    pub const ER11: f64 = 0.8192320648511571246570742613E-01;
    pub const ER12: f64 = -0.2235530786388629525884427845E-01;
}

/// One attempted step from `(t, y)` with first stage `k1`: returns the new state, its
/// derivative and the scaled error norm.
fn dop853_step(model: &ThetaModel, eps: f64, t: f64, y: &State, k1: &State, h: f64, tol: f64) -> Result<(State, State, f64)> {
    use tableau::*;
    let f = |c: f64, s: &State| rhs(model, eps, t + c * h, s);
    let k2 = f(C2, &axpy(y, h, &[(A21, k1)]))?;
    let k3 = f(C3, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = f(C4, &axpy(y, h, &[(A41, k1), (A43, &k3)]))?;
    let k5 = f(C5, &axpy(y, h, &[(A51, k1), (A53, &k3), (A54, &k4)]))?;
    let k6 = f(C6, &axpy(y, h, &[(A61, k1), (A64, &k4), (A65, &k5)]))?;
    let k7 = f(C7, &axpy(y, h, &[(A71, k1), (A74, &k4), (A75, &k5), (A76, &k6)]))?;
    let k8 = f(C8, &axpy(y, h, &[(A81, k1), (A84, &k4), (A85, &k5), (A86, &k6), (A87, &k7)]))?;
    let k9 = f(C9, &axpy(y, h, &[(A91, k1), (A94, &k4), (A95, &k5), (A96, &k6), (A97, &k7), (A98, &k8)]))?;
    let k10 = f(C10, &axpy(y, h, &[(A101, k1), (A104, &k4), (A105, &k5), (A106, &k6), (A107, &k7), (A108, &k8), (A109, &k9)]))?;
    let k11 = f(C11, &axpy(y, h, &[(A111, k1), (A114, &k4), (A115, &k5), (A116, &k6), (A117, &k7), (A118, &k8), (A119, &k9), (A1110, &k10)]))?;
    let y12 = axpy(y, h, &[(A121, k1), (A124, &k4), (A125, &k5), (A126, &k6), (A127, &k7), (A128, &k8), (A129, &k9), (A1210, &k10), (A1211, &k11)]);
    let k12 = f(1.0, &y12)?;
    let inc = axpy(&[0.0; 5], 1.0, &[(B1, k1), (B6, &k6), (B7, &k7), (B8, &k8), (B9, &k9), (B10, &k10), (B11, &k11), (B12, &k12)]);
    let y_new = axpy(y, h, &[(1.0, &inc)]);
    let (mut err, mut err2) = (0.0, 0.0);
    for i in 0..5 {
        let sk = tol + tol * y[i].abs().max(y_new[i].abs());
        let e2 = inc[i] - BHH1 * k1[i] - BHH2 * k9[i] - BHH3 * k12[i];
        err2 += (e2 / sk).powi(2);
        let e = ER1 * k1[i] + ER6 * k6[i] + ER7 * k7[i] + ER8 * k8[i] + ER9 * k9[i] + ER10 * k10[i] + ER11 * k11[i] + ER12 * k12[i];
        err += (e / sk).powi(2);
    }
    let mut deno = err + 0.01 * err2;
    if deno <= 0.0 {
        deno = 1.0;
    }
    let err = h.abs() * err * (1.0 / (5.0 * deno)).sqrt();
    let k_new = rhs(model, eps, t + h, &y_new)?;
    Ok((y_new, k_new, err))
}

fn step_ceiling(opts: &EvolveOptions, eps: f64, t: f64) -> f64 {
    let mut cap = opts.h_max.unwrap_or(eps);
    if let Some((tr, w)) = opts.focus {
        if (t - tr).abs() <= w {
            cap = cap.min(eps / 20.0);
        }
    }
    cap
}

/// Integrate along `t_grid` (monotone in either direction) from `initial` at `t_grid[0]`.
pub fn evolve_with(model: &ThetaModel, epsilon: f64, t_grid: &[f64], initial: [Complex64; 2], opts: &EvolveOptions) -> Result<EvolutionRun> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(opts.tolerance >= 1e-13) {
        return Err(Error::domain(format!("tolerance {} is below 1e-13", opts.tolerance)));
    }
    if t_grid.len() < 2 {
        return Err(Error::usage("the time grid needs at least two points"));
    }
    let dir = (t_grid[t_grid.len() - 1] - t_grid[0]).signum();
    if dir == 0.0 || t_grid.windows(2).any(|w| (w[1] - w[0]) * dir <= 0.0) {
        return Err(Error::usage("the time grid must be strictly monotone"));
    }
    let (lo, hi) = model.domain();
    for &t in [t_grid[0], t_grid[t_grid.len() - 1]].iter() {
        if t < lo || t > hi {
            return Err(Error::domain(format!("t = {t} outside the model domain [{lo}, {hi}]")));
        }
    }
    let n0 = (initial[0].norm_sqr() + initial[1].norm_sqr()).sqrt();
    let mut t = t_grid[0];
    let mut y: State = [initial[0].re, initial[0].im, initial[1].re, initial[1].im, model.theta_angle(t)?];
    let mut k1 = rhs(model, epsilon, t, &y)?;
    let mut h = dir * (epsilon / 20.0).min(step_ceiling(opts, epsilon, t));
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut psi = vec![initial];
    let mut theta = vec![y[4]];
    let mut drift = 0.0f64;
    let mut last_rejected = false;
    for &target in &t_grid[1..] {
        while (target - t) * dir > 0.0 {
            if accepted + rejected >= opts.max_steps {
                return Err(Error::numeric(format!("step budget exhausted at t = {t} (h = {h:e}, {rejected} rejections)")));
            }
            let cap = step_ceiling(opts, epsilon, t);
            let mut hh = dir * h.abs().min(cap);
            let remaining = target - t;
            let last = hh.abs() >= remaining.abs();
            if last {
                hh = remaining;
            }
            if hh.abs() < 1e-14 * t.abs().max(1.0) {
                return Err(Error::numeric(format!("step size underflow at t = {t}; tolerance {} not achievable", opts.tolerance)));
            }
            let (y_new, k_new, err) = dop853_step(model, epsilon, t, &y, &k1, hh, opts.tolerance)?;
            // h_new = h / fac with fac = err^(1/8)/0.9 clamped to [1/6, 3]
            let fac11 = err.powf(0.125);
            let fac = (fac11 / 0.9).clamp(1.0 / 6.0, 3.0);
            if err <= 1.0 && err.is_finite() {
                accepted += 1;
                t = if last { target } else { t + hh };
                y = y_new;
                k1 = k_new;
                let mut h_new = hh.abs() / fac;
                if last_rejected {
                    h_new = h_new.min(hh.abs());
                }
                last_rejected = false;
                if !last {
                    h = dir * h_new;
                }
            } else {
                rejected += 1;
                last_rejected = true;
                let shrink = if err.is_finite() { (fac11 / 0.9).min(3.0) } else { 6.0 };
                h = dir * hh.abs() / shrink;
            }
        }
        let p = [Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3])];
        drift = drift.max(((p[0].norm_sqr() + p[1].norm_sqr()).sqrt() - n0).abs());
        psi.push(p);
        theta.push(y[4]);
    }
    Ok(EvolutionRun { epsilon, t_grid: t_grid.to_vec(), psi, theta, frame: Frame::Lab, norm_drift: drift, accepted_steps: accepted, rejected_steps: rejected })
}

pub fn evolve(model: &ThetaModel, epsilon: f64, t_grid: &[f64], initial: [Complex64; 2], tolerance: f64) -> Result<EvolutionRun> {
    evolve_with(model, epsilon, t_grid, initial, &EvolveOptions::new(tolerance))
}

fn apply(u: &Mat2, p: &[Complex64; 2]) -> [Complex64; 2] {
    [u[0][0] * p[0] + u[0][1] * p[1], u[1][0] * p[0] + u[1][1] * p[1]]
}

/// Unitary from the lab frame into `frame` at `t`, with `theta = theta(t)` supplied.
pub fn frame_unitary<R: Real>(model: &ThetaModel, frame: Frame, epsilon: f64, t: f64, theta: f64) -> Result<Mat2> {
    let u0 = adiabatic_unitary(theta);
    match frame {
        Frame::Lab => Ok(crate::basis::identity()),
        Frame::Adiabatic => Ok(u0),
        Frame::Superadiabatic(n) => Ok(mat_mul(&superadiabatic_rotation::<R>(model, t, n, epsilon)?, &u0)),
    }
}

/// Pointwise `psi^n = U^n(t) psi(t)`; the input run must be in the lab frame.
pub fn to_frame<R: Real>(model: &ThetaModel, run: &EvolutionRun, frame: Frame) -> Result<EvolutionRun> {
    if run.frame != Frame::Lab {
        return Err(Error::usage("frame changes start from a lab-frame run"));
    }
    let mut out = run.clone();
    out.frame = frame;
    for (i, p) in out.psi.iter_mut().enumerate() {
        let u = frame_unitary::<R>(model, frame, run.epsilon, run.t_grid[i], run.theta[i])?;
        *p = apply(&u, p);
    }
    Ok(out)
}

/// Largest dip of `|b|` below its running maximum.
pub fn ripple_metric(abs_b: &[f64]) -> f64 {
    let mut top = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    for &v in abs_b {
        top = top.max(v);
        worst = worst.max(top - v);
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErfFit {
    pub amplitude: f64,
    pub offset: f64,
    pub rms_residual: f64,
    pub max_residual: f64,
    /// `rms_residual / amplitude`.
    pub relative_residual: f64,
    pub points: usize,
}

/// Least-squares fit of `A (1 + erf((t - t_r)/sqrt(2 eps t_c)))/2 + offset` to `|b|`
/// over `|t - t_r| <= 6 sqrt(eps t_c)`.
pub fn fit_erf_profile(t: &[f64], abs_b: &[f64], data: &SingularityData, epsilon: f64) -> Result<ErfFit> {
    let w = (epsilon * data.t_c).sqrt();
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(abs_b)
        .filter(|(t, _)| (**t - data.t_r).abs() <= 6.0 * w)
        .map(|(t, b)| (0.5 * (1.0 + erf((t - data.t_r) / (2.0f64.sqrt() * w))), *b))
        .collect();
    if pts.len() < 3 {
        return Err(Error::usage("too few grid points inside the fit window"));
    }
    let (a, off, rms) = linear_fit(&pts)?;
    let max = pts.iter().map(|(f, b)| (b - a * f - off).abs()).fold(0.0, f64::max);
    Ok(ErfFit { amplitude: a, offset: off, rms_residual: rms, max_residual: max, relative_residual: rms / a.abs(), points: pts.len() })
}

fn erf_rms(t: &[f64], abs_b: &[f64], t_r: f64, window: f64, width: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> =
        t.iter().zip(abs_b).filter(|(t, _)| (**t - t_r).abs() <= window).map(|(t, b)| (0.5 * (1.0 + erf((t - t_r) / (2.0f64.sqrt() * width))), *b)).collect();
    Ok(linear_fit(&pts)?.2)
}

/// Width `s` of the best profile `A (1 + erf((t - t_r)/(sqrt 2 s)))/2 + offset`, searched in
/// `[0.3, 3] sqrt(eps t_c)`; the nominal value is `sqrt(eps t_c)`.
pub fn fit_erf_width(t: &[f64], abs_b: &[f64], data: &SingularityData, epsilon: f64) -> Result<f64> {
    let w = (epsilon * data.t_c).sqrt();
    let (mut lo, mut hi) = (0.3 * w, 3.0 * w);
    let g = 0.5 * (5.0f64.sqrt() - 1.0);
    while hi - lo > 1e-10 * w {
        let (m1, m2) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if erf_rms(t, abs_b, data.t_r, 6.0 * w, m1)? < erf_rms(t, abs_b, data.t_r, 6.0 * w, m2)? {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionHistory {
    pub epsilon: f64,
    pub n: usize,
    pub frame: Frame,
    pub t_grid: Vec<f64>,
    pub amplitude: Vec<Complex64>,
    pub final_amplitude: Complex64,
    pub fit: ErfFit,
    /// Ripple of `|b|` over the whole run, relative to `|b(final)|`.
    pub ripple: f64,
    pub norm_drift: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryOptions {
    pub tolerance: f64,
    /// Half-width of the run in units of `sqrt(eps t_c)`.
    pub margin: f64,
    pub grid_points: usize,
}

impl Default for HistoryOptions {
    fn default() -> Self {
        HistoryOptions { tolerance: 1e-12, margin: 8.0, grid_points: 801 }
    }
}

/// The run behind a transition history: initial data is the upper state of `frame`
/// at `t_r - margin sqrt(eps t_c)`, clipped to the domain.
pub fn transition_run<R: Real>(model: &ThetaModel, epsilon: f64, frame: Frame, opts: &HistoryOptions) -> Result<(EvolutionRun, SingularityData)> {
    let data = model.singularity_data().ok_or_else(|| Error::Assumption("model has no singularity data".into()))?;
    let w = (epsilon * data.t_c).sqrt();
    let (lo, hi) = model.domain();
    let (a, b) = ((data.t_r - opts.margin * w).max(lo), (data.t_r + opts.margin * w).min(hi));
    let m = opts.grid_points.max(3);
    let grid: Vec<f64> = (0..m).map(|i| if i + 1 == m { b } else { a + (b - a) * i as f64 / (m - 1) as f64 }).collect();
    let u = frame_unitary::<R>(model, frame, epsilon, a, model.theta_angle(a)?)?;
    let init = [u[0][0].conj(), u[0][1].conj()];
    let mut eo = EvolveOptions::new(opts.tolerance);
    eo.focus = Some((data.t_r, 5.0 * w));
    Ok((evolve_with(model, epsilon, &grid, init, &eo)?, data))
}

pub fn transition_history<R: Real>(model: &ThetaModel, epsilon: f64, frame: Frame, opts: &HistoryOptions) -> Result<TransitionHistory> {
    let (run, data) = transition_run::<R>(model, epsilon, frame, opts)?;
    history_from_run::<R>(model, &run, &data, frame)
}

pub fn history_from_run<R: Real>(model: &ThetaModel, run: &EvolutionRun, data: &SingularityData, frame: Frame) -> Result<TransitionHistory> {
    let fr = to_frame::<R>(model, run, frame)?;
    let amplitude: Vec<Complex64> = fr.psi.iter().map(|p| p[1]).collect();
    let abs_b: Vec<f64> = amplitude.iter().map(|b| b.norm()).collect();
    let fit = fit_erf_profile(&fr.t_grid, &abs_b, data, run.epsilon)?;
    let final_amplitude = *amplitude.last().expect("non-empty grid");
    let n = if let Frame::Superadiabatic(n) = frame { n } else { 0 };
    Ok(TransitionHistory {
        epsilon: run.epsilon,
        n,
        frame,
        t_grid: fr.t_grid,
        ripple: ripple_metric(&abs_b) / final_amplitude.norm(),
        amplitude,
        final_amplitude,
        fit,
        norm_drift: run.norm_drift,
    })
}

/// `|b(final)|^2` in the optimal superadiabatic frame.
pub fn transition_probability<R: Real>(model: &ThetaModel, epsilon: f64, opts: &HistoryOptions) -> Result<f64> {
    let data = model.singularity_data().ok_or_else(|| Error::Assumption("model has no singularity data".into()))?;
    let (n, _) = crate::basis::optimal_n(epsilon, data.t_c)?;
    Ok(transition_history::<R>(model, epsilon, Frame::Superadiabatic(n), opts)?.final_amplitude.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{hamiltonian, identity};
    use crate::jet::Jet;
    use crate::scalar::DoubleDouble;
    use crate::theta::{AnalyticModel, PolePairModel};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_hamiltonian_closed_form() {
        let gen = |t: f64, k: usize| Ok(Jet::<DoubleDouble>::zero(t, k));
        let mut am = AnalyticModel::new(gen, 0.0, (-10.0, 10.0), None);
        am.anchor_value = 0.7;
        let m = ThetaModel::Analytic(am);
        let eps = 0.05;
        let grid: Vec<f64> = (0..41).map(|i| -1.0 + 0.1 * i as f64).collect();
        let psi0 = [c(0.6, 0.0), c(0.0, 0.8)];
        let run = evolve(&m, eps, &grid, psi0, 1e-12).unwrap();
        let h = hamiltonian(0.7);
        for (i, &t) in grid.iter().enumerate() {
            let tau = (t - grid[0]) / eps;
            let (s, co) = (0.5 * tau).sin_cos();
            let mut u = identity();
            for a in 0..2 {
                for b in 0..2 {
                    u[a][b] = u[a][b] * co - c(0.0, 2.0 * s) * h[a][b];
                }
            }
            let want = apply(&u, &psi0);
            let d = (run.psi[i][0] - want[0]).norm() + (run.psi[i][1] - want[1]).norm();
            assert!(d < 1e-10, "t {t}: {d}");
        }
        assert!(run.norm_drift < 1e-10);
    }

    #[test]
    fn norm_and_time_reversal() {
        let m = ThetaModel::PolePair(PolePairModel::new(1.0, 0.0, 1.0).unwrap());
        let eps = 0.1;
        let grid: Vec<f64> = (0..61).map(|i| -3.0 + 0.1 * i as f64).collect();
        let psi0 = [c(1.0, 0.0), c(0.0, 0.0)];
        let fwd = evolve(&m, eps, &grid, psi0, 1e-13).unwrap();
        assert!(fwd.norm_drift < 1e-10, "{}", fwd.norm_drift);
        let back: Vec<f64> = grid.iter().rev().cloned().collect();
        let bwd = evolve(&m, eps, &back, *fwd.psi.last().unwrap(), 1e-13).unwrap();
        let end = bwd.psi.last().unwrap();
        assert!((end[0] - psi0[0]).norm() + (end[1] - psi0[1]).norm() < 1e-9);
        assert!((bwd.theta.last().unwrap() - fwd.theta[0]).abs() < 1e-10);
        assert!((fwd.theta[60] - m.theta_angle(3.0).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn frames_preserve_norm() {
        let m = ThetaModel::PolePair(PolePairModel::new(1.0, 0.0, 1.0).unwrap());
        let grid: Vec<f64> = (0..21).map(|i| -1.0 + 0.1 * i as f64).collect();
        let run = evolve(&m, 0.1, &grid, [c(0.0, 1.0), c(0.0, 0.0)], 1e-12).unwrap();
        let lab = to_frame::<f64>(&m, &run, Frame::Lab).unwrap();
        assert_eq!(lab.psi, run.psi);
        for f in [Frame::Adiabatic, Frame::Superadiabatic(4)] {
            let r = to_frame::<f64>(&m, &run, f).unwrap();
            for (p, q) in r.psi.iter().zip(&run.psi) {
                let (a, b) = (p[0].norm_sqr() + p[1].norm_sqr(), q[0].norm_sqr() + q[1].norm_sqr());
                assert!((a.sqrt() - b.sqrt()).abs() < 1e-12);
            }
        }
        assert!(matches!(evolve(&m, 0.1, &grid, [c(1.0, 0.0), c(0.0, 0.0)], 1e-15), Err(Error::Domain(_))));
    }

    #[test]
    fn ripple_and_fit_on_synthetic_profile() {
        assert_eq!(ripple_metric(&[0.0, 1.0, 2.0, 3.0]), 0.0);
        assert!((ripple_metric(&[0.0, 2.0, 1.5, 3.0]) - 0.5).abs() < 1e-15);
        let d = SingularityData { t_r: 0.2, t_c: 1.0, gamma: 1.0, alpha: 1.0, radius: 1.0 };
        let eps = 0.1;
        let t: Vec<f64> = (0..201).map(|i| -2.0 + 0.02 * i as f64).collect();
        let b: Vec<f64> = t.iter().map(|t| 3e-5 * 0.5 * (1.0 + erf((t - 0.2) / (0.2f64).sqrt())) + 1e-7).collect();
        let f = fit_erf_profile(&t, &b, &d, eps).unwrap();
        assert!((f.amplitude - 3e-5).abs() < 1e-16 && (f.offset - 1e-7).abs() < 1e-17 && f.relative_residual < 1e-9);
    }
}
