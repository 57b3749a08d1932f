//! Estimators over batches of sampled spectra.

use super::{McError, SpectrumSample};
use crate::model::{SpectrumKind, ValidatedModel};
use crate::solver::{singular_moments, SolverError};
use faer::{c64, Mat};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Binned density estimate. Structural zeros are not binned; their share of
/// all values is `alpha_hat`, and values outside the bin range are counted
/// in `out_of_range`, so `sum(density * width) + alpha_hat + out_of_range = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalCurve {
    pub edges: Vec<f64>,
    pub densities: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub alpha_hat: f64,
    pub out_of_range: f64,
    pub empty_bins: usize,
}

impl EmpiricalCurve {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

fn check_edges(edges: &[f64]) -> Result<(), McError> {
    if edges.len() < 2 {
        return Err(McError::InvalidBins("need at least two edges"));
    }
    if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(McError::InvalidBins("edges must be finite and increasing"));
    }
    Ok(())
}

fn histogram(samples: &[SpectrumSample], edges: &[f64], key: impl Fn(num_complex::Complex64) -> f64) -> Result<EmpiricalCurve, McError> {
    if samples.is_empty() {
        return Err(McError::NoSamples);
    }
    check_edges(edges)?;
    let bins = edges.len() - 1;
    let mut counts = vec![0u64; bins];
    let mut total = 0u64;
    let mut zeros = 0u64;
    let mut outside = 0u64;
    for s in samples {
        total += s.values.len() as u64;
        zeros += s.zero_count.min(s.values.len()) as u64;
        for v in s.nonzero_values() {
            let x = key(v);
            // bins are half-open except the last, which includes its right edge
            let k = edges.partition_point(|&e| e <= x);
            if k == 0 || (k == edges.len() && x > edges[bins]) {
                outside += 1;
            } else {
                counts[(k - 1).min(bins - 1)] += 1;
            }
        }
    }
    let n = total as f64;
    let mut densities = Vec::with_capacity(bins);
    let mut std_errors = Vec::with_capacity(bins);
    for (c, w) in counts.iter().zip(edges.windows(2)) {
        let p = *c as f64 / n;
        let width = w[1] - w[0];
        densities.push(p / width);
        std_errors.push((p * (1.0 - p) / n).sqrt() / width);
    }
    Ok(EmpiricalCurve {
        edges: edges.to_vec(),
        densities,
        std_errors,
        alpha_hat: zeros as f64 / n,
        out_of_range: outside as f64 / n,
        empty_bins: counts.iter().filter(|&&c| c == 0).count(),
    })
}

/// Histogram of eigenvalue moduli `|lambda|`: the radial density.
pub fn radial_histogram(samples: &[SpectrumSample], edges: &[f64]) -> Result<EmpiricalCurve, McError> {
    histogram(samples, edges, |z| z.norm())
}

/// Histogram of the real values `mu` of singular spectra.
pub fn value_histogram(samples: &[SpectrumSample], edges: &[f64]) -> Result<EmpiricalCurve, McError> {
    histogram(samples, edges, |z| z.re)
}

/// Chi-square p-value for uniformity of eigenvalue arguments over `bins`
/// equal sectors. Structural zeros are excluded.
pub fn angular_uniformity(samples: &[SpectrumSample], bins: usize) -> Result<f64, McError> {
    if bins < 2 {
        return Err(McError::InvalidBins("need at least two sectors"));
    }
    let mut counts = vec![0u64; bins];
    let mut n = 0u64;
    for s in samples {
        for z in s.nonzero_values() {
            let t = (z.arg() + std::f64::consts::PI) / std::f64::consts::TAU;
            counts[((t * bins as f64) as usize).min(bins - 1)] += 1;
            n += 1;
        }
    }
    if n == 0 {
        return Err(McError::NoSamples);
    }
    let e = n as f64 / bins as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    let dist = ChiSquared::new((bins - 1) as f64).expect("positive degrees of freedom");
    Ok(dist.sf(chi2))
}

/// Asymptotic Kolmogorov tail `P(sqrt(n) D > lambda)`.
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    kolmogorov_tail((s + 0.12 + 0.11 / s) * d)
}

/// One-sample KS test against the uniform law on `[0, 1]`: `(D, p)`.
pub fn ks_uniform(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let d = v
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i as f64 + 1.0) / n - x).max(x - i as f64 / n)
        })
        .fold(0.0, f64::max);
    (d, ks_p(d, n))
}

/// Two-sample KS test: `(D, p)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    (d, ks_p(d, na * nb / (na + nb)))
}

/// Mean and standard error of `|Tr U^power|^2` over `samples` draws of an
/// `n x n` unitary from `sampler`, drawn on substreams `0..samples` of `seed`.
pub fn trace_moment<F>(sampler: F, n: usize, power: u32, samples: usize, seed: u64) -> (f64, f64)
where
    F: Fn(usize, &mut ChaCha8Rng) -> Mat<c64> + Sync,
{
    let vals: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = super::RngStream::new(seed, i).rng();
            let u = sampler(n, &mut rng);
            let mut p = u.clone();
            for _ in 1..power {
                p = &p * &u;
            }
            let tr: c64 = (0..n).map(|k| p[(k, k)]).sum();
            tr.norm_sqr()
        })
        .collect();
    mean_se(&vals)
}

pub(crate) fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Number of non-structural eigenvalues with modulus outside
/// `[r_int - band, r_ext + band]`.
pub fn outside_band(samples: &[SpectrumSample], r_int: f64, r_ext: f64, band: f64) -> usize {
    samples
        .iter()
        .flat_map(|s| s.nonzero_values())
        .filter(|z| {
            let r = z.norm();
            r < r_int - band || r > r_ext + band
        })
        .count()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentRow {
    pub n: usize,
    pub empirical: f64,
    pub std_error: f64,
    pub theory: f64,
}

/// Sample moments `(1/N) Tr (X†X)^n` against the series-inverted theory,
/// for `n = 1..=n_max` (at most 4).
pub fn moment_check(model: &ValidatedModel, n_max: usize, samples: &[SpectrumSample]) -> Result<Vec<MomentRow>, SolverError> {
    if n_max > 4 {
        return Err(SolverError::NotApplicable("moments beyond fourth order"));
    }
    let theory = singular_moments(model, n_max)?;
    let singular: Vec<&SpectrumSample> = samples.iter().filter(|s| s.kind == SpectrumKind::Singular).collect();
    Ok((1..=n_max)
        .map(|n| {
            let per: Vec<f64> = singular
                .iter()
                .map(|s| s.values.iter().map(|z| z.re.powi(n as i32)).sum::<f64>() / s.n_outer as f64)
                .collect();
            let (empirical, std_error) = mean_se(&per);
            MomentRow {
                n,
                empirical,
                std_error,
                theory: theory[n - 1],
            }
        })
        .collect())
}

/// Entropy `-sum p log p` (nats) of the normalized singular spectrum.
pub fn von_neumann_entropy(sample: &SpectrumSample) -> Result<f64, McError> {
    let total: f64 = sample.values.iter().map(|z| z.re.max(0.0)).sum();
    if !(total > 0.0) {
        return Err(McError::DegenerateState);
    }
    Ok(sample
        .values
        .iter()
        .map(|z| z.re.max(0.0) / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum())
}
