//! Monte Carlo sampling of model matrices and their spectra.
//!
//! Every sample draws from its own ChaCha8 substream `(seed, sample index)`,
//! so a run depends only on the seed and the sample count, never on how the
//! samples are scheduled across workers.

mod stats;

pub use stats::{
    angular_uniformity, ks_two_sample, ks_uniform, moment_check, outside_band, radial_histogram, trace_moment,
    value_histogram, von_neumann_entropy, EmpiricalCurve, MomentRow,
};

use crate::model::{EnsembleFactor, SpectrumKind, ValidatedModel};
use faer::{c64, Mat};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum McError {
    #[error("dimension chain is not integral at outer size {n_outer}")]
    NonIntegerDimension { n_outer: usize },
    #[error("eigensolver failed on matrix {hash:016x}")]
    EigenSolverFailure { hash: u64 },
    #[error("eigenvalues need a square model")]
    NotSquare,
    #[error("all singular values vanish")]
    DegenerateState,
    #[error("no samples")]
    NoSamples,
    #[error("invalid bins: {0}")]
    InvalidBins(&'static str),
    #[error("could not build worker pool: {0}")]
    Pool(String),
}

/// Deterministic per-sample random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream_id);
        r
    }
}

/// Entry law for Ginibre factors. All three have mean zero and the same
/// variance, so they share the same large-N limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EntryDistribution {
    #[default]
    Gaussian,
    Uniform,
    Phase,
}

impl fmt::Display for EntryDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntryDistribution::Gaussian => "gaussian",
            EntryDistribution::Uniform => "uniform",
            EntryDistribution::Phase => "phase",
        })
    }
}

impl FromStr for EntryDistribution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gaussian" => Ok(EntryDistribution::Gaussian),
            "uniform" => Ok(EntryDistribution::Uniform),
            "phase" => Ok(EntryDistribution::Phase),
            other => Err(format!("unknown entry distribution `{other}`")),
        }
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn complex_entry<R: Rng + ?Sized>(rng: &mut R, var: f64, dist: EntryDistribution) -> c64 {
    match dist {
        EntryDistribution::Gaussian => {
            let s = (0.5 * var).sqrt();
            c64::new(s * normal(rng), s * normal(rng))
        }
        EntryDistribution::Uniform => {
            // each part uniform on [-a, a] with a^2 / 3 = var / 2
            let a = (1.5 * var).sqrt();
            c64::new(a * (2.0 * rng.random::<f64>() - 1.0), a * (2.0 * rng.random::<f64>() - 1.0))
        }
        EntryDistribution::Phase => C64::from_polar(var.sqrt(), std::f64::consts::TAU * rng.random::<f64>()),
    }
}

fn gaussian_square<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Mat<c64> {
    let mut m = Mat::<c64>::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            m[(i, j)] = complex_entry(rng, 1.0, EntryDistribution::Gaussian);
        }
    }
    m
}

/// Haar unitary: `Q` of a Gaussian matrix with the phases of `diag(R)`
/// moved into the columns of `Q`.
pub fn sample_cue<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Mat<c64> {
    let a = gaussian_square(n, rng);
    let qr = a.qr();
    let mut q = qr.compute_Q();
    let r = qr.R();
    for k in 0..n {
        let d = r[(k, k)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / norm } else { c64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, k)] *= phase;
        }
    }
    q
}

/// The same orthonormalization without the phase correction. Its law depends
/// on the QR sign convention and is not Haar; kept as a negative control.
pub fn sample_cue_uncorrected<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Mat<c64> {
    gaussian_square(n, rng).qr().compute_Q()
}

/// Ginibre block with `E|entry|^2 = sigma^2 / sqrt(rows cols)`.
pub fn sample_ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, sigma: f64, rng: &mut R) -> Mat<c64> {
    sample_entries(rows, cols, sigma, EntryDistribution::Gaussian, rng)
}

pub fn sample_entries<R: Rng + ?Sized>(rows: usize, cols: usize, sigma: f64, dist: EntryDistribution, rng: &mut R) -> Mat<c64> {
    let var = sigma * sigma / ((rows * cols) as f64).sqrt();
    let mut m = Mat::<c64>::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex_entry(rng, var, dist);
        }
    }
    m
}

/// Draws every factor in order and multiplies them left to right.
pub fn realize_model<R: Rng + ?Sized>(model: &ValidatedModel, n_outer: usize, rng: &mut R) -> Result<Mat<c64>, McError> {
    realize_model_with(model, n_outer, EntryDistribution::Gaussian, rng)
}

pub fn realize_model_with<R: Rng + ?Sized>(
    model: &ValidatedModel,
    n_outer: usize,
    dist: EntryDistribution,
    rng: &mut R,
) -> Result<Mat<c64>, McError> {
    let dims = model.integer_dimensions(n_outer).ok_or(McError::NonIntegerDimension { n_outer })?;
    let mut x: Option<Mat<c64>> = None;
    for (i, f) in model.factors().iter().enumerate() {
        let factor = match f {
            EnsembleFactor::CueSum(c) => {
                let n = dims[i];
                let mut s = Mat::<c64>::zeros(n, n);
                for &w in &c.weights {
                    let u = sample_cue(n, rng);
                    s += faer::Scale(w) * &u;
                }
                s
            }
            EnsembleFactor::Ginibre(g) => sample_entries(dims[i], dims[i + 1], g.sigma, dist, rng),
        };
        x = Some(match x {
            None => factor,
            Some(acc) => &acc * &factor,
        });
    }
    Ok(x.expect("validated models are non-empty"))
}

/// Spectrum of one matrix. Eigenvalues are complex; singular spectra hold
/// the real eigenvalues `mu_i` of `X†X` in the real parts.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumSample {
    pub kind: SpectrumKind,
    pub values: Vec<C64>,
    pub n_outer: usize,
    /// Structural zeros implied by the rank bound of the dimension chain.
    pub zero_count: usize,
}

impl SpectrumSample {
    /// Values with the `zero_count` smallest moduli removed.
    pub fn nonzero_values(&self) -> Vec<C64> {
        let mut v = self.values.clone();
        v.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        v.split_off(self.zero_count.min(v.len()))
    }
}

fn matrix_hash(m: &Mat<c64>) -> u64 {
    // FNV-1a over the raw entries, for error reports only
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            for b in z.re.to_le_bytes().into_iter().chain(z.im.to_le_bytes()) {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
    }
    h
}

/// All eigenvalues of a square matrix.
pub fn eigenvalues(matrix: &Mat<c64>, zero_count: usize) -> Result<SpectrumSample, McError> {
    if matrix.nrows() != matrix.ncols() {
        return Err(McError::NotSquare);
    }
    let values = matrix.eigenvalues().map_err(|_| McError::EigenSolverFailure { hash: matrix_hash(matrix) })?;
    Ok(SpectrumSample {
        kind: SpectrumKind::Eigenvalue,
        values,
        n_outer: matrix.ncols(),
        zero_count,
    })
}

/// Eigenvalues of `X†X`, i.e. squared singular values padded with zeros to
/// the column dimension.
pub fn singular_spectrum(matrix: &Mat<c64>, zero_count: usize) -> Result<SpectrumSample, McError> {
    let mut sv = matrix.singular_values().map_err(|_| McError::EigenSolverFailure { hash: matrix_hash(matrix) })?;
    sv.iter_mut().for_each(|s| *s *= *s);
    sv.resize(matrix.ncols(), 0.0);
    Ok(SpectrumSample {
        kind: SpectrumKind::Singular,
        values: sv.into_iter().map(|s| C64::new(s, 0.0)).collect(),
        n_outer: matrix.ncols(),
        zero_count,
    })
}

/// One full sample: realize the model on substream `index` and extract the
/// requested spectrum.
pub fn sample_spectrum(
    model: &ValidatedModel,
    n_outer: usize,
    kind: SpectrumKind,
    dist: EntryDistribution,
    seed: u64,
    index: u64,
) -> Result<SpectrumSample, McError> {
    if kind == SpectrumKind::Eigenvalue && !model.is_square() {
        return Err(McError::NotSquare);
    }
    let mut rng = RngStream::new(seed, index).rng();
    let x = realize_model_with(model, n_outer, dist, &mut rng)?;
    let zeros = model.structural_zero_count(n_outer);
    match kind {
        SpectrumKind::Eigenvalue => eigenvalues(&x, zeros),
        SpectrumKind::Singular => singular_spectrum(&x, zeros),
    }
}

/// Run configuration for a batch of independent samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McConfig {
    pub n_outer: usize,
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
    pub entries: EntryDistribution,
}

/// Samples `0..samples` in parallel; the output is in sample order and is
/// identical for every worker count.
pub fn run_samples(model: &ValidatedModel, kind: SpectrumKind, cfg: &McConfig) -> Result<Vec<SpectrumSample>, McError> {
    if cfg.samples == 0 {
        return Err(McError::NoSamples);
    }
    faer::set_global_parallelism(faer::Par::Seq);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| McError::Pool(e.to_string()))?;
    pool.install(|| {
        (0..cfg.samples as u64)
            .into_par_iter()
            .map(|i| sample_spectrum(model, cfg.n_outer, kind, cfg.entries, cfg.seed, i))
            .collect()
    })
}
