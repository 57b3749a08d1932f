//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach the output.
//! Criteria that concern produced files go through the `bures` binary; the
//! rest call the library directly.

use bures_cli::output::ParsedTable;
use bures_core::fit::{erfc_form_factor, fit_erfc, Borderline, EdgeProfile};
use bures_core::mc::{
    angular_uniformity, ks_uniform, moment_check, outside_band, run_samples, sample_cue, sample_cue_uncorrected, trace_moment,
    EntryDistribution, McConfig, RngStream,
};
use bures_core::model::{presets, EnsembleFactor, ModelSpec, SpectrumKind, ValidatedModel};
use bures_core::solver::{
    bures_closed_form, domain_geometry, radial_density, scaling_relation_check, singular_density, t_example1_closed_form,
};
use rand::Rng;
use rand_distr::StandardNormal;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

const BIN: &str = env!("CARGO_BIN_EXE_bures");

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    linspace(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect()
}

fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn bures_cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(BIN).args(args).output().expect("spawn bures");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn write_model(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const BURES_DOC: &str = "model {
  factors: [
    cue_sum { weights: [0.7071067811865476+0i, 0.7071067811865476+0i] }
    ginibre { sigma: 1, rows: 1, cols: 1 }
  ]
}
";

/// Models of the Monte Carlo comparisons, as documents.
fn comparison_models() -> Vec<(&'static str, &'static str)> {
    vec![
        ("bures", BURES_DOC),
        (
            "t_example2",
            "model { factors: [
                cue_sum { weights: [1+0i, 1+0i] }
                cue_sum { weights: [1+0i, 0.5+0i] }
            ] }",
        ),
        (
            "w_example1",
            "model { factors: [
                cue_sum { weights: [0.7071067811865476+0i, 0.7071067811865476+0i] }
                ginibre { sigma: 1, rows: 1, cols: 2 }
                ginibre { sigma: 1, rows: 2, cols: 1 }
            ] }",
        ),
        (
            "v",
            "model { factors: [
                cue_sum { weights: [0.7071067811865476+0i, 0.7071067811865476+0i] }
                ginibre { sigma: 1, rows: 1, cols: 2 }
                ginibre { sigma: 1, rows: 2, cols: 1 }
                cue_sum { weights: [0.5773502691896258+0i, 0.5773502691896258+0i, 0.5773502691896258+0i] }
                ginibre { sigma: 1, rows: 1, cols: 1 }
            ] }",
        ),
    ]
}

fn criterion_1(tmp: &Path) -> Outcome {
    let model = write_model(tmp, "bures.model", BURES_DOC);
    let (th, or) = (tmp.join("c1_theory"), tmp.join("c1_oracle"));
    let grid = "linear:0.05:5.19:2000";
    let t0 = Instant::now();
    let (code, err) = bures_cli(&["theory", "--model", model.to_str().unwrap(), "--out", th.to_str().unwrap(), "--grid", grid, "--kind", "singular"]);
    let secs = t0.elapsed().as_secs_f64();
    if code != 0 {
        return Err(format!("theory exited {code}: {err}"));
    }
    let (code, err) = bures_cli(&["oracle", "--family", "bures", "--out", or.to_str().unwrap(), "--grid", grid]);
    if code != 0 {
        return Err(format!("oracle exited {code}: {err}"));
    }
    let t = ParsedTable::read(&th.join("theory_singular.csv")).unwrap();
    let o = ParsedTable::read(&or.join("oracle_bures.csv")).unwrap();
    let (x, rho) = (t.column("x").unwrap(), t.column("rho").unwrap());
    let (ox, orho) = (o.column("x").unwrap(), o.column("rho").unwrap());
    let same_grid = x == ox;
    let vs_oracle = rho.iter().zip(&orho).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    // the closed form evaluated here, independently of the oracle command
    let vs_formula = x.iter().zip(&rho).map(|(&x, r)| (r - bures_closed_form(x)).abs()).fold(0.0, f64::max);
    let edge: f64 = t.meta_value("x_upper").unwrap().parse().unwrap();
    let edge_err = (edge - 3.0 * 3f64.sqrt()).abs();
    check(
        same_grid && vs_oracle < 1e-6 && vs_formula < 1e-6 && edge_err < 1e-6 && secs < 5.0,
        format!("sup|theory - oracle| = {vs_oracle:.2e}, sup|theory - closed form| = {vs_formula:.2e}, edge error {edge_err:.2e}, {secs:.2} s"),
    )
}

fn criterion_2() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for &(j, l, w) in &[(1usize, 2usize, 1.0f64), (2, 3, 1.0), (3, 2, 0.5)] {
        let t0 = Instant::now();
        let m = presets::t_example1(j, l, w).validate().unwrap();
        let grid = linspace(0.01 * w, 0.99 * w, 500);
        let curve = radial_density(&m, &grid).map_err(|e| e.to_string())?;
        let secs = t0.elapsed().as_secs_f64();
        let err = grid.iter().zip(&curve.values).map(|(&r, v)| (v - t_example1_closed_form(r, j, l, w)).abs()).fold(0.0, f64::max);
        ok &= err < 1e-8 && secs < 5.0;
        parts.push(format!("({j},{l},{w}) {err:.1e} in {secs:.3} s"));
    }
    check(ok, parts.join("; "))
}

fn criterion_3() -> Outcome {
    let cue = EnsembleFactor::cue_real;
    let g = EnsembleFactor::ginibre;
    // (name, model, R_ext^2, R_int^2) with the radii written out by hand
    let cases: Vec<(&str, ModelSpec, f64, f64)> = vec![
        ("T example 1", presets::t_example1(2, 3, 0.8), 0.8f64.powi(2), 0.0),
        (
            "T example 2",
            presets::t_example2(&[(1.0, 0.5), (0.8, 0.3)]),
            (1.0 + 0.25) * (0.64 + 0.09),
            (1.0 - 0.25) * (0.64 - 0.09),
        ),
        ("T annulus", presets::t_example2(&[(1.0, 0.5)]), 1.25, 0.75),
        (
            "W example 1",
            presets::w_model(vec![EnsembleFactor::cue_equal(2, 0.9)], &[1.3, 0.7], &[1, 2, 1]),
            (0.9f64 * 1.3 * 0.7).powi(2),
            0.0,
        ),
        (
            "W example 2",
            presets::w_model(vec![cue(&[1.0, 0.5]), cue(&[0.6, 0.6])], &[1.2], &[1, 1]),
            1.44 * (1.0 + 0.25) * (0.36 + 0.36),
            0.0,
        ),
        (
            "V",
            ModelSpec::new(vec![
                EnsembleFactor::cue_equal(2, 1.1),
                g(0.9, 1, 2),
                g(1.2, 2, 1),
                EnsembleFactor::cue_equal(3, 0.7),
                g(1.5, 1, 1),
            ]),
            (1.1f64 * 0.7 * 0.9 * 1.2 * 1.5).powi(2),
            0.0,
        ),
    ];
    let mut worst = 0.0f64;
    for (name, spec, ext2, int2) in cases {
        let geo = domain_geometry(&spec.validate().unwrap()).map_err(|e| format!("{name}: {e}"))?;
        let err = (geo.r_ext.powi(2) - ext2).abs().max((geo.r_int.powi(2) - int2).abs());
        if err >= 1e-10 {
            return Err(format!("{name}: R_ext^2 = {}, R_int^2 = {}, expected {ext2}, {int2}", geo.r_ext.powi(2), geo.r_int.powi(2)));
        }
        worst = worst.max(err);
    }
    check(true, format!("six instances, worst |R^2 error| = {worst:.1e}"))
}

fn criterion_4() -> Outcome {
    let mut worst = 0.0f64;
    for j in [2usize, 3] {
        let m = presets::t_example1(j, 2, 1.0).validate().unwrap();
        for r in linspace(0.02, 0.98, 49) {
            worst = worst.max(scaling_relation_check(&m, r).map_err(|e| e.to_string())?);
        }
    }
    check(worst < 1e-8, format!("J = 2, 3 on 49 radii: max residual {worst:.1e}"))
}

fn run_compare(model: &Path, out: &Path, workers: &str) -> Result<(), String> {
    let (code, err) = bures_cli(&[
        "compare", "--model", model.to_str().unwrap(), "--out", out.to_str().unwrap(), "--n", "512", "--samples", "40", "--seed", "2024",
        "--workers", workers,
    ]);
    if code != 0 {
        return Err(format!("compare exited {code}: {err}"));
    }
    Ok(())
}

/// Bulk bins that miss both `5%` relative and `3 sigma`.
fn bulk_misses(table: &ParsedTable) -> usize {
    let d = table.column("density").unwrap();
    let se = table.column("stderr").unwrap();
    let th = table.column("rho_theory").unwrap();
    let bulk = table.column("bulk").unwrap();
    (0..d.len())
        .filter(|&i| bulk[i] == 1.0 && (d[i] - th[i]).abs() > (0.05 * th[i].abs()).max(3.0 * se[i]))
        .count()
}

fn criterion_5(tmp: &Path) -> Outcome {
    let t0 = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, doc) in comparison_models() {
        let model = write_model(tmp, &format!("{name}.model"), doc);
        run_compare(&model, &tmp.join(format!("c5_{name}")), "1")?;
        for kind in ["radial", "singular"] {
            let t = ParsedTable::read(&tmp.join(format!("c5_{name}/compare_{kind}.csv"))).unwrap();
            let misses = bulk_misses(&t);
            let flagged = t.meta_value("flagged") != Some("false");
            ok &= misses == 0 && !flagged;
            parts.push(format!("{name}/{kind} {misses} misses"));
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    check(ok && secs <= 600.0, format!("{}; {secs:.0} s", parts.join(", ")))
}

fn criterion_6() -> Outcome {
    let cue2 = || EnsembleFactor::cue_equal(2, 1.0);
    let g = EnsembleFactor::ginibre;
    // (name, model, d from the family formula)
    let cases: Vec<(&str, ModelSpec, u32)> = vec![
        ("T example 1, J = 3", presets::t_example1(3, 2, 1.0), 3),
        // one pair of equal moduli out of two
        ("T example 2", presets::t_example2(&[(1.0, 1.0), (1.0, 0.5)]), 1),
        // (J + 1) [r_1 = 1] + #{k >= 2 : r_k = 1} = 2 + 0
        ("W example 1", presets::w_model(vec![cue2()], &[1.0, 1.0], &[1, 2, 1]), 2),
        // two blocks, each (J_i + 1) [s_i = 1] + R_i = 2
        ("V", ModelSpec::new(vec![cue2(), g(1.0, 1, 2), g(1.0, 2, 1), cue2(), g(1.0, 1, 1)]), 4),
    ];
    let grid = logspace(1e-4, 1e-2, 25);
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, spec, d) in cases {
        let m = spec.validate().unwrap();
        let reported = m.divergence_exponent(SpectrumKind::Eigenvalue).ok().flatten();
        let df = d as f64;
        let rad = radial_density(&m, &grid).map_err(|e| format!("{name}: {e}"))?;
        let sing = singular_density(&m, &grid).map_err(|e| format!("{name}: {e}"))?;
        let se = log_slope(&grid, &rad.values);
        let ss = log_slope(&grid, &sing.values);
        let (pe, ps) = (-(df - 2.0) / df, -df / (df + 1.0));
        ok &= reported == Some(d) && (se - pe).abs() <= 0.02 && (ss - ps).abs() <= 0.02;
        parts.push(format!("{name} d={d}: {se:.4} vs {pe:.4}, {ss:.4} vs {ps:.4}"));
    }
    check(ok, parts.join("; "))
}

fn eigen_samples(m: &ValidatedModel, n: usize, samples: usize, seed: u64) -> Result<Vec<bures_core::mc::SpectrumSample>, String> {
    let cfg = McConfig {
        n_outer: n,
        samples,
        seed,
        workers: 1,
        entries: EntryDistribution::Gaussian,
    };
    run_samples(m, SpectrumKind::Eigenvalue, &cfg).map_err(|e| e.to_string())
}

fn criterion_7() -> Outcome {
    let n = 512;
    let band = 5.0 / (n as f64).sqrt();
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, spec) in [("annulus T(1, 1/2)", presets::t_example2(&[(1.0, 0.5)])), ("Bures disk", presets::bures())] {
        let m = spec.validate().unwrap();
        let geo = domain_geometry(&m).map_err(|e| e.to_string())?;
        let samples = eigen_samples(&m, n, 40, 77)?;
        let p = angular_uniformity(&samples, 36).map_err(|e| e.to_string())?;
        let outside = outside_band(&samples, geo.r_int, geo.r_ext, band);
        ok &= p > 0.01 && outside == 0;
        parts.push(format!("{name}: angular p = {p:.3}, {outside} outside the band"));
    }
    check(ok, parts.join("; "))
}

fn criterion_8() -> Outcome {
    let (n, samples) = (64, 10_000);
    let (m, se) = trace_moment(|n, rng| sample_cue(n, rng), n, 1, samples, 11);
    let (mu, seu) = trace_moment(|n, rng| sample_cue_uncorrected(n, rng), n, 1, samples, 11);
    let mut phases = Vec::new();
    for i in 0..200 {
        let u = sample_cue(n, &mut RngStream::new(12, i).rng());
        for z in u.eigenvalues().map_err(|_| "eigensolver failed".to_string())? {
            phases.push((z.arg() / std::f64::consts::TAU).rem_euclid(1.0));
        }
    }
    let (_, p) = ks_uniform(&phases);
    let corrected = (m - 1.0).abs() < 3.0 * se;
    let control_fails = (mu - 1.0).abs() >= 3.0 * seu;
    check(
        corrected && p > 0.01 && control_fails,
        format!("E|Tr U|^2 = {m:.4} +- {se:.4}, phase KS p = {p:.3}, uncorrected {mu:.2} +- {seu:.2} (rejected: {control_fails})"),
    )
}

fn synthetic_profile(q: f64, n: usize, seed: u64) -> EdgeProfile {
    let mut rng = RngStream::new(seed, 0).rng();
    let h = 8.0 / (n as f64).sqrt();
    let r: Vec<f64> = (0..40).map(|i| 1.0 - h + 2.0 * h * (i as f64 + 0.5) / 40.0).collect();
    let theory: Vec<f64> = r.iter().map(|x| 2.0 * x).collect();
    let clean: Vec<f64> = r.iter().zip(&theory).map(|(&x, t)| t * erfc_form_factor(x, n, q, 1.0, Borderline::External)).collect();
    EdgeProfile {
        density: clean.iter().map(|c| c * (1.0 + 0.01 * rng.sample::<f64, _>(StandardNormal))).collect(),
        std_error: clean.iter().map(|c| (0.01 * c).max(1e-6)).collect(),
        r,
        theory,
        side: Borderline::External,
        n,
        r_b_guess: 1.0,
    }
}

fn criterion_9(tmp: &Path) -> Outcome {
    let model = write_model(tmp, "bures_fit.model", BURES_DOC);
    let out = tmp.join("c9");
    let (code, err) = bures_cli(&[
        "fit-erfc", "--model", model.to_str().unwrap(), "--out", out.to_str().unwrap(), "--n", "128,256,512", "--samples", "40", "--seed", "9",
    ]);
    if code != 0 {
        return Err(format!("fit-erfc exited {code}: {err}"));
    }
    let t = ParsedTable::read(&out.join("fit_erfc.csv")).unwrap();
    let r_b = t.column("R_b").unwrap();
    let slope: f64 = t.meta_value("width_slope_external").unwrap().parse().unwrap();
    let worst_rb = r_b.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
    let mut worst_q = 0.0f64;
    for seed in 0..5 {
        let f = fit_erfc(&synthetic_profile(0.8, 256, seed)).map_err(|e| e.to_string())?;
        worst_q = worst_q.max((f.q_b / 0.8 - 1.0).abs());
    }
    check(
        r_b.len() == 3 && worst_rb < 0.02 && (slope + 0.5).abs() <= 0.1 && worst_q < 0.05,
        format!("max |R_b - 1| = {worst_rb:.4}, width slope {slope:.3}, synthetic q_b max relative error {worst_q:.4}"),
    )
}

fn criterion_10() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, spec) in [("Ginibre", presets::ginibre(1.0)), ("Bures", presets::bures())] {
        let m = spec.validate().unwrap();
        let cfg = McConfig {
            n_outer: 64,
            samples: 10_000,
            seed: 10,
            workers: 1,
            entries: EntryDistribution::Gaussian,
        };
        let samples = run_samples(&m, SpectrumKind::Singular, &cfg).map_err(|e| e.to_string())?;
        for row in moment_check(&m, 2, &samples).map_err(|e| e.to_string())? {
            let z = (row.empirical - row.theory) / row.std_error;
            ok &= z.abs() < 3.0;
            parts.push(format!("{name} m{} = {:.4} vs {:.4} (z = {z:.2})", row.n, row.empirical, row.theory));
        }
    }
    check(ok, parts.join("; "))
}

fn criterion_11(tmp: &Path) -> Outcome {
    let doc = "model { factors: [
        cue_sum { weights: [1+0i, 0.5+0i] }
        cue_sum { weights: [1+0i, 0.7+0i] }
        ginibre { sigma: 1, rows: 2, cols: 4 }
        ginibre { sigma: 1, rows: 4, cols: 2 }
        ginibre { sigma: 1, rows: 2, cols: 3 }
        ginibre { sigma: 1, rows: 3, cols: 4 }
        ginibre { sigma: 1, rows: 4, cols: 2 }
    ] }";
    let model = write_model(tmp, "w_example2.model", doc);
    let out = tmp.join("c11");
    let (code, err) = bures_cli(&[
        "compare", "--model", model.to_str().unwrap(), "--out", out.to_str().unwrap(), "--kind", "singular", "--n", "512", "--samples", "40",
        "--seed", "11",
    ]);
    let t = ParsedTable::read(&out.join("compare_singular.csv")).map_err(|e| format!("exit {code}, {err}: {e}"))?;
    let flagged = t.meta_value("flagged") == Some("true");
    if flagged {
        return check(code == 4 && err.contains("Normalization"), format!("singular curve flagged with a structured diagnostic (exit {code})"));
    }
    let misses = bulk_misses(&t);
    check(code == 0 && misses == 0, format!("singular curve converged, {misses} bulk misses against Monte Carlo"))
}

fn criterion_12(tmp: &Path) -> Outcome {
    let mut compared = 0;
    for (name, _) in comparison_models() {
        let model = tmp.join(format!("{name}.model"));
        let again = tmp.join(format!("c12_{name}"));
        run_compare(&model, &again, "3")?;
        for kind in ["radial", "singular"] {
            let file = format!("compare_{kind}.csv");
            let a = std::fs::read(tmp.join(format!("c5_{name}")).join(&file)).map_err(|e| e.to_string())?;
            let b = std::fs::read(again.join(&file)).map_err(|e| e.to_string())?;
            if a != b {
                return Err(format!("{name}/{file} differs between runs"));
            }
            compared += 1;
        }
    }
    check(true, format!("{compared} CSVs byte-identical on rerun with 1 and 3 workers"))
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("Bures oracle equivalence", Box::new(|| criterion_1(dir))),
        ("T example 1 closed form", Box::new(criterion_2)),
        ("domain radii", Box::new(criterion_3)),
        ("scaling relation", Box::new(criterion_4)),
        ("Monte Carlo bulk agreement", Box::new(|| criterion_5(dir))),
        ("divergence exponents", Box::new(criterion_6)),
        ("rotational symmetry and single ring", Box::new(criterion_7)),
        ("Haar sampler", Box::new(criterion_8)),
        ("erfc borderline fit", Box::new(|| criterion_9(dir))),
        ("moments", Box::new(criterion_10)),
        ("known-hard singular solve", Box::new(|| criterion_11(dir))),
        ("determinism", Box::new(|| criterion_12(dir))),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.1} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.1} s]", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 12 acceptance criteria passed");
}
