//! Borderline form factor `f = erfc(q s (R - R_b) sqrt(N)) / 2` and its
//! weighted Levenberg-Marquardt fit to Monte Carlo edge profiles.

use crate::mc::{radial_histogram, EmpiricalCurve, McError, SpectrumSample};
use crate::model::ValidatedModel;
use crate::solver::{domain_geometry, radial_density, radial_density_continued, SolverError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("fit diverged after {iterations} iterations")]
    FitDiverged { iterations: usize },
    #[error("insufficient window: {0}")]
    InsufficientWindow(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Mc(#[from] McError),
}

/// Which borderline a profile straddles. The density falls off outward at
/// the external one and inward at the internal one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Borderline {
    External,
    Internal,
}

impl Borderline {
    pub fn sign(self) -> f64 {
        match self {
            Borderline::External => 1.0,
            Borderline::Internal => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeProfile {
    pub r: Vec<f64>,
    pub density: Vec<f64>,
    pub std_error: Vec<f64>,
    /// Bulk density continued across the borderline, at the same `r`.
    pub theory: Vec<f64>,
    pub side: Borderline,
    pub n: usize,
    /// Starting value for `R_b`, normally the analytic radius.
    pub r_b_guess: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErfcFitResult {
    pub q_b: f64,
    pub r_b: f64,
    /// Weighted RMS of the normalized residuals.
    pub residual: f64,
    /// Covariance of `(q_b, R_b)`, scaled by the reduced chi-square.
    pub covariance: [[f64; 2]; 2],
    pub iterations: usize,
}

impl ErfcFitResult {
    /// Transition width `1 / (q_b sqrt(N))`.
    pub fn width(&self, n: usize) -> f64 {
        1.0 / (self.q_b * (n as f64).sqrt())
    }
}

// Rational approximations from FreeBSD msun s_erf.c (Sun Microsystems, 1993:
// "Permission to use, copy, modify, and distribute this software is freely
// granted, provided that this notice is preserved.").
const ERX: f64 = 8.45062911510467529297e-01;
const PP: [f64; 5] = [
    1.28379167095512558561e-01,
    -3.25042107247001499370e-01,
    -2.84817495755985104766e-02,
    -5.77027029648944159157e-03,
    -2.37630166566501626084e-05,
];
const QQ: [f64; 5] = [
    3.97917223959155352819e-01,
    6.50222499887672944485e-02,
    5.08130628187576562776e-03,
    1.32494738004321644526e-04,
    -3.96022827877536812320e-06,
];
const PA: [f64; 7] = [
    -2.36211856075265944077e-03,
    4.14856118683748331666e-01,
    -3.72207876035701323847e-01,
    3.18346619901161753674e-01,
    -1.10894694282396677476e-01,
    3.54783043256182359371e-02,
    -2.16637559486879084300e-03,
];
const QA: [f64; 6] = [
    1.06420880400844228286e-01,
    5.40397917702171048937e-01,
    7.18286544141962662868e-02,
    1.26171219808761642112e-01,
    1.36370839120290507362e-02,
    1.19844998467991074170e-02,
];
const RA: [f64; 8] = [
    -9.86494403484714822705e-03,
    -6.93858572707181764372e-01,
    -1.05586262253232909814e+01,
    -6.23753324503260060396e+01,
    -1.62396669462573470355e+02,
    -1.84605092906711035994e+02,
    -8.12874355063065934246e+01,
    -9.81432934416914548592e+00,
];
const SA: [f64; 8] = [
    1.96512716674392571292e+01,
    1.37657754143519042600e+02,
    4.34565877475229228821e+02,
    6.45387271733267880336e+02,
    4.29008140027567833386e+02,
    1.08635005541779435134e+02,
    6.57024977031928170135e+00,
    -6.04244152148580987438e-02,
];
const RB: [f64; 7] = [
    -9.86494292470009928597e-03,
    -7.99283237680523006574e-01,
    -1.77579549177547519889e+01,
    -1.60636384855821916062e+02,
    -6.37566443368389627722e+02,
    -1.02509513161107724954e+03,
    -4.83519191608651397019e+02,
];
const SB: [f64; 7] = [
    3.03380607434824582924e+01,
    3.25792512996573918826e+02,
    1.53672958608443695994e+03,
    3.19985821950859553908e+03,
    2.55305040643316442583e+03,
    4.74528541206955367215e+02,
    -2.24409524465858183362e+01,
];

/// `c[0] + z c[1] + z^2 c[2] + ...`
fn horner(c: &[f64], z: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * z + k)
}

/// `1 + z c[0] + z^2 c[1] + ...`
fn horner1(c: &[f64], z: f64) -> f64 {
    1.0 + z * horner(c, z)
}

/// erfc for `|x| >= 0.84375`, evaluated at `|x|`.
fn erfc_tail(ax: f64) -> f64 {
    if ax < 1.25 {
        let s = ax - 1.0;
        return 1.0 - ERX - horner(&PA, s) / horner1(&QA, s);
    }
    let s = 1.0 / (ax * ax);
    let (r, big_s) = if ax < 1.0 / 0.35 {
        (horner(&RA, s), horner1(&SA, s))
    } else {
        (horner(&RB, s), horner1(&SB, s))
    };
    // z is ax with the low 32 bits cleared, so z*z is exact
    let z = f64::from_bits(ax.to_bits() & 0xffff_ffff_0000_0000);
    (-z * z - 0.5625).exp() * ((z - ax) * (z + ax) + r / big_s).exp() / ax
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return x;
    }
    let ax = x.abs();
    if ax < 0.84375 {
        if ax < 2f64.powi(-56) {
            return 1.0 - x;
        }
        let z = x * x;
        let y = horner(&PP, z) / horner1(&QQ, z);
        if x < 0.25 {
            return 1.0 - (x + x * y);
        }
        return 0.5 - (x - 0.5 + x * y);
    }
    if ax < 28.0 {
        let t = erfc_tail(ax);
        return if x < 0.0 { 2.0 - t } else { t };
    }
    if x < 0.0 {
        2.0
    } else {
        0.0
    }
}

/// `erfc(q s (R - R_b) sqrt(N)) / 2` with `s = +1` outside the external
/// borderline and `s = -1` at the internal one.
pub fn erfc_form_factor(r: f64, n: usize, q_b: f64, r_b: f64, side: Borderline) -> f64 {
    0.5 * erfc(q_b * side.sign() * (r - r_b) * (n as f64).sqrt())
}

fn model_and_jacobian(p: &EdgeProfile, q: f64, rb: f64, i: usize) -> (f64, f64, f64) {
    let sn = (p.n as f64).sqrt();
    let s = p.side.sign();
    let u = q * s * (p.r[i] - rb) * sn;
    let f = 0.5 * erfc(u);
    let dfdu = -(-u * u).exp() / std::f64::consts::PI.sqrt();
    let t = p.theory[i];
    (t * f, t * dfdu * s * (p.r[i] - rb) * sn, -t * dfdu * q * s * sn)
}

fn weights(p: &EdgeProfile) -> Vec<f64> {
    // empty bins get the smallest nonzero error in the window, a one-count proxy
    let floor = p.std_error.iter().copied().filter(|&e| e > 0.0).fold(f64::INFINITY, f64::min);
    p.std_error.iter().map(|&e| 1.0 / if e > 0.0 { e } else { floor }).collect()
}

fn chi2(p: &EdgeProfile, w: &[f64], q: f64, rb: f64) -> f64 {
    (0..p.r.len())
        .map(|i| {
            let (m, _, _) = model_and_jacobian(p, q, rb, i);
            ((p.density[i] - m) * w[i]).powi(2)
        })
        .sum()
}

/// Weighted least-squares fit of `theory * f` to the profile density over
/// `(q_b, R_b)`, starting from `q_b = 1` and `R_b = r_b_guess`.
pub fn fit_erfc(profile: &EdgeProfile) -> Result<ErfcFitResult, FitError> {
    let p = profile;
    let len = p.r.len();
    if p.density.len() != len || p.std_error.len() != len || p.theory.len() != len {
        return Err(FitError::InsufficientWindow("profile columns differ in length".into()));
    }
    let usable = p.std_error.iter().filter(|&&e| e > 0.0).count();
    if usable < 12 {
        return Err(FitError::InsufficientWindow(format!("{usable} bins with nonzero errors, need 12")));
    }
    let half = 6.0 / (p.n as f64).sqrt();
    let lo = p.r.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = p.r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // r holds bin centers, so allow half a bin at either end
    let slack = 0.5 * (hi - lo) / (len - 1) as f64 * (1.0 + 1e-9);
    if lo - slack > p.r_b_guess - half || hi + slack < p.r_b_guess + half {
        return Err(FitError::InsufficientWindow(format!(
            "window [{lo}, {hi}] does not cover R_b +- 6/sqrt(N) around {}",
            p.r_b_guess
        )));
    }
    let w = weights(p);
    let (mut q, mut rb) = (1.0f64, p.r_b_guess);
    let mut cost = chi2(p, &w, q, rb);
    let mut lambda = 1e-3;
    const MAX_ITER: usize = 200;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITER {
        iterations += 1;
        let mut a = [[0.0f64; 2]; 2];
        let mut g = [0.0f64; 2];
        for i in 0..len {
            let (m, jq, jr) = model_and_jacobian(p, q, rb, i);
            let ww = w[i] * w[i];
            let r = p.density[i] - m;
            a[0][0] += ww * jq * jq;
            a[0][1] += ww * jq * jr;
            a[1][1] += ww * jr * jr;
            g[0] += ww * jq * r;
            g[1] += ww * jr * r;
        }
        a[1][0] = a[0][1];
        let mut accepted = false;
        while lambda < 1e12 {
            let b00 = a[0][0] * (1.0 + lambda);
            let b11 = a[1][1] * (1.0 + lambda);
            let det = b00 * b11 - a[0][1] * a[1][0];
            if det.abs() > 0.0 && det.is_finite() {
                let dq = (b11 * g[0] - a[0][1] * g[1]) / det;
                let dr = (b00 * g[1] - a[1][0] * g[0]) / det;
                let (nq, nr) = (q + dq, rb + dr);
                if nq > 0.0 && nq.is_finite() && nr.is_finite() {
                    let c = chi2(p, &w, nq, nr);
                    if c <= cost {
                        let small = dq.abs() <= 1e-10 * nq && dr.abs() <= 1e-10 * nr.abs().max(1e-300);
                        let flat = cost - c <= 1e-14 * cost;
                        q = nq;
                        rb = nr;
                        cost = c;
                        lambda = (lambda * 0.3).max(1e-12);
                        accepted = true;
                        converged = small || flat;
                        break;
                    }
                }
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill step at any damping: a stationary point
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged || !cost.is_finite() {
        return Err(FitError::FitDiverged { iterations });
    }
    let mut a = [[0.0f64; 2]; 2];
    for i in 0..len {
        let (_, jq, jr) = model_and_jacobian(p, q, rb, i);
        let ww = w[i] * w[i];
        a[0][0] += ww * jq * jq;
        a[0][1] += ww * jq * jr;
        a[1][1] += ww * jr * jr;
    }
    let det = a[0][0] * a[1][1] - a[0][1] * a[0][1];
    let dof = (len.saturating_sub(2)).max(1) as f64;
    let scale = cost / dof / det;
    Ok(ErfcFitResult {
        q_b: q,
        r_b: rb,
        residual: (cost / len as f64).sqrt(),
        covariance: [[a[1][1] * scale, -a[0][1] * scale], [-a[0][1] * scale, a[0][0] * scale]],
        iterations,
    })
}

/// Builds the radial profile of `samples` over `bins` equal bins spanning
/// `R_b +- half_width / sqrt(N)` around the analytic borderline.
pub fn edge_profile(
    model: &ValidatedModel,
    samples: &[SpectrumSample],
    side: Borderline,
    half_width: f64,
    bins: usize,
) -> Result<(EdgeProfile, EmpiricalCurve), FitError> {
    let n = samples.first().map(|s| s.n_outer).ok_or(McError::NoSamples)?;
    let geo = domain_geometry(model)?;
    let r_b = match side {
        Borderline::External => geo.r_ext,
        Borderline::Internal => geo.r_int,
    };
    if side == Borderline::Internal && r_b <= 0.0 {
        return Err(FitError::InsufficientWindow("the domain has no internal borderline".into()));
    }
    let h = half_width / (n as f64).sqrt();
    let lo = (r_b - h).max(0.0);
    let edges: Vec<f64> = (0..=bins).map(|i| lo + (r_b + h - lo) * i as f64 / bins as f64).collect();
    let hist = radial_histogram(samples, &edges)?;
    let r = hist.centers();
    let theory = match side {
        Borderline::External => r.iter().map(|&x| radial_density_continued(model, x)).collect::<Result<Vec<_>, _>>()?,
        Borderline::Internal => {
            // the bulk density just inside the hole, held constant across it
            let inner = r_b * (1.0 + 1e-9);
            let clamped: Vec<f64> = r.iter().map(|&x| x.max(inner)).collect();
            radial_density(model, &clamped)?.values
        }
    };
    Ok((
        EdgeProfile {
            r,
            density: hist.densities.clone(),
            std_error: hist.std_errors.clone(),
            theory,
            side,
            n,
            r_b_guess: r_b,
        },
        hist,
    ))
}

/// Least-squares slope of `log(width)` against `log(N)`.
pub fn width_scaling_slope(fits: &[(usize, ErfcFitResult)]) -> f64 {
    let pts: Vec<(f64, f64)> = fits.iter().map(|(n, f)| ((*n as f64).ln(), f.width(*n).ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
