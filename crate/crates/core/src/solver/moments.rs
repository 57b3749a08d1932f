use super::SolverError;
use crate::model::{ratio_to_f64, ValidatedModel};
use crate::transforms::Composition;
use num_complex::Complex64 as C64;

const CONTOUR_POINTS: usize = 64;

/// Moments `m_1, ..., m_n` of the limiting singular-value distribution.
///
/// With `f` the composed factor product, `z = (1 + M) f(M) / M` inverts to
/// `M = w (1 + M) f(M)` in `w = 1/z`, so by Lagrange inversion
/// `m_k = (1/k) [t^(k-1)] ((1 + t) f(t))^k`. The Taylor coefficients of `f`
/// come from a trapezoidal Cauchy integral on a small circle.
pub fn singular_moments(model: &ValidatedModel, n: usize) -> Result<Vec<f64>, SolverError> {
    let comp = Composition::new(model);
    let radius = 0.05 * ratio_to_f64(model.min_ratio()).min(1.0);
    let mut samples = Vec::with_capacity(CONTOUR_POINTS);
    for j in 0..CONTOUR_POINTS {
        let th = 2.0 * std::f64::consts::PI * j as f64 / CONTOUR_POINTS as f64;
        samples.push(comp.product(C64::from_polar(radius, th))?);
    }
    let taylor: Vec<f64> = (0..n)
        .map(|k| {
            let s: C64 = samples
                .iter()
                .enumerate()
                .map(|(j, v)| v * C64::from_polar(1.0, -2.0 * std::f64::consts::PI * (k * j) as f64 / CONTOUR_POINTS as f64))
                .sum();
            s.re / CONTOUR_POINTS as f64 / radius.powi(k as i32)
        })
        .collect();
    // phi(t) = (1 + t) f(t), truncated at degree n - 1
    let mut phi = vec![0.0; n];
    for k in 0..n {
        phi[k] = taylor[k] + if k > 0 { taylor[k - 1] } else { 0.0 };
    }
    let mut power = vec![0.0; n];
    power[0] = 1.0;
    let mut out = Vec::with_capacity(n);
    for k in 1..=n {
        power = truncated_mul(&power, &phi);
        out.push(power[k - 1] / k as f64);
    }
    Ok(out)
}

fn truncated_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut c = vec![0.0; n];
    for i in 0..n {
        for j in 0..n - i {
            c[i + j] += a[i] * b[j];
        }
    }
    c
}
