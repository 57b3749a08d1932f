use bures_core::fit::*;
use bures_core::mc::{run_samples, EntryDistribution, McConfig, RngStream};
use bures_core::model::{presets, SpectrumKind};
use rand::Rng;
use rand_distr::StandardNormal;

fn synthetic(q: f64, r_b: f64, n: usize, noise: f64, seed: u64) -> EdgeProfile {
    let mut rng = RngStream::new(seed, 0).rng();
    let h = 8.0 / (n as f64).sqrt();
    let r: Vec<f64> = (0..40).map(|i| r_b - h + 2.0 * h * (i as f64 + 0.5) / 40.0).collect();
    // a smooth stand-in for the bulk density
    let theory: Vec<f64> = r.iter().map(|x| 1.0 / (0.5 + x * x)).collect();
    let clean: Vec<f64> = r
        .iter()
        .zip(&theory)
        .map(|(&x, t)| t * erfc_form_factor(x, n, q, r_b, Borderline::External))
        .collect();
    let density = clean
        .iter()
        .map(|c| c * (1.0 + noise * rng.sample::<f64, _>(StandardNormal)))
        .collect();
    let std_error = clean.iter().map(|c| (noise * c).max(1e-6)).collect();
    EdgeProfile {
        r,
        density,
        std_error,
        theory,
        side: Borderline::External,
        n,
        r_b_guess: r_b * 1.01,
    }
}

#[test]
fn synthetic_recovery() {
    for seed in 0..5 {
        let f = fit_erfc(&synthetic(0.7, 1.0, 256, 0.01, seed)).unwrap();
        assert!((f.q_b / 0.7 - 1.0).abs() < 0.05, "seed {seed}: {f:?}");
        assert!((f.r_b - 1.0).abs() < 0.01, "seed {seed}: {f:?}");
        assert!(f.residual.is_finite() && f.covariance[0][0] > 0.0);
    }
}

#[test]
fn noiseless_fit_is_exact() {
    let f = fit_erfc(&synthetic(1.3, 0.8, 128, 0.0, 0)).unwrap();
    assert!((f.q_b - 1.3).abs() < 1e-8, "{f:?}");
    assert!((f.r_b - 0.8).abs() < 1e-8, "{f:?}");
}

#[test]
fn internal_side_is_mirrored() {
    let mut p = synthetic(0.9, 1.0, 256, 0.0, 0);
    p.side = Borderline::Internal;
    p.density = p
        .r
        .iter()
        .zip(&p.theory)
        .map(|(&x, t)| t * erfc_form_factor(x, 256, 0.9, 1.0, Borderline::Internal))
        .collect();
    let f = fit_erfc(&p).unwrap();
    assert!((f.q_b - 0.9).abs() < 1e-8 && (f.r_b - 1.0).abs() < 1e-8, "{f:?}");
}

#[test]
fn narrow_window_is_rejected() {
    let mut p = synthetic(0.7, 1.0, 256, 0.01, 1);
    p.r_b_guess = 1.2;
    assert!(matches!(fit_erfc(&p), Err(FitError::InsufficientWindow(_))));
    let mut p = synthetic(0.7, 1.0, 256, 0.01, 1);
    for e in p.std_error.iter_mut().skip(8) {
        *e = 0.0;
    }
    assert!(matches!(fit_erfc(&p), Err(FitError::InsufficientWindow(_))));
}

#[test]
fn form_factor_is_monotone() {
    let mut prev = (2.0, -1.0);
    for i in 0..200 {
        let r = 0.5 + i as f64 * 0.005;
        let a = erfc_form_factor(r, 100, 0.8, 1.0, Borderline::External);
        let b = erfc_form_factor(r, 100, 0.8, 1.0, Borderline::Internal);
        assert!(a <= prev.0 && b >= prev.1);
        assert!((0.0..=1.0).contains(&a));
        prev = (a, b);
    }
}

#[test]
fn bures_edge_fit_at_small_size() {
    let m = presets::bures().validate().unwrap();
    let cfg = McConfig {
        n_outer: 128,
        samples: 80,
        seed: 31,
        workers: 1,
        entries: EntryDistribution::Gaussian,
    };
    let s = run_samples(&m, SpectrumKind::Eigenvalue, &cfg).unwrap();
    let (p, _) = edge_profile(&m, &s, Borderline::External, 8.0, 32).unwrap();
    let f = fit_erfc(&p).unwrap();
    assert!((f.r_b - 1.0).abs() < 0.02, "{f:?}");
    assert!(f.q_b > 0.5 && f.q_b < 2.0, "{f:?}");
    assert!(matches!(
        edge_profile(&m, &s, Borderline::Internal, 8.0, 32),
        Err(FitError::InsufficientWindow(_))
    ));
}
