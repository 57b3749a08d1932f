//! Subcommand implementations.
//!
//! Every command collects its outputs in memory and writes them, followed by
//! `manifest.json`, only once all computation has succeeded; a failing run
//! leaves the output directory untouched.
//!
//! Random substreams: a command that samples with label `label` uses the seed
//! formed by the first eight bytes (little-endian) of
//! `SHA-256(seed.to_le_bytes() || label)`. Labels are `eigenvalue` and
//! `singular` for `mc` and `compare` (so both see the same matrices) and
//! `fit-erfc/N=<n>` for the edge fits.

use crate::document::{format_model_document, parse_model_document, DocumentError};
use crate::output::{num, sha256_hex, Table, SCHEMA_VERSION};
use crate::spectra::{write_spectra, SpectraFile};
use crate::{Cli, Command, Family, FitArgs, KindArg, McArgs, ModelArgs, OracleArgs, TheoryArgs};
use bures_core::fit::{edge_profile, fit_erfc, width_scaling_slope, Borderline, ErfcFitResult, FitError};
use bures_core::mc::{moment_check, radial_histogram, run_samples, value_histogram, von_neumann_entropy, EmpiricalCurve, McConfig, McError, SpectrumSample};
use bures_core::model::{ModelError, SpectrumKind, ValidatedModel};
use bures_core::solver::{
    bures_closed_form, domain_geometry, radial_density, singular_density, singular_support, t_example1_closed_form, CurveGeometry,
    DensityCurve, Diagnostic, SolverError, BURES_EDGE,
};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Mc(#[from] McError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Mc(McError::NonIntegerDimension { .. } | McError::NoSamples | McError::InvalidBins(_)) => 2,
            CliError::Document(_) | CliError::Model(_) | CliError::Mc(McError::NotSquare) => 3,
            CliError::Solver(SolverError::Model(_)) => 3,
            CliError::Solver(_) | CliError::Mc(_) | CliError::Fit(_) => 4,
            CliError::Io { .. } => 5,
        }
    }

    fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "UsageError",
            CliError::Document(DocumentError::Parse { .. }) => "ParseError",
            CliError::Document(DocumentError::Validation(_)) | CliError::Model(_) => "ValidationError",
            CliError::Solver(_) => "SolverError",
            CliError::Mc(_) => "McError",
            CliError::Fit(_) => "FitError",
            CliError::Io { .. } => "IoError",
        }
    }

    /// One-line machine-readable form.
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "error": self.code(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        if let CliError::Document(DocumentError::Parse { line, column, .. }) = self {
            v["line"] = json!(line);
            v["column"] = json!(column);
        }
        v
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub out_dir: PathBuf,
    /// Written files (manifest excluded) with their SHA-256.
    pub files: Vec<(String, String)>,
    /// A theory curve failed its own checks; its files are still written.
    pub flagged: bool,
    pub diagnostics: Value,
}

/// Seed of the substream `label`.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn new() -> Self {
        Outputs { files: Vec::new() }
    }

    fn table(&mut self, name: &str, t: &Table) {
        self.files.push((name.to_string(), t.render().into_bytes()));
    }

    fn bytes(&mut self, name: &str, b: Vec<u8>) {
        self.files.push((name.to_string(), b));
    }

    fn finish(self, out: &Path, command: &str, config: Value, flagged: bool, diagnostics: Value) -> Result<RunReport, CliError> {
        std::fs::create_dir_all(out).map_err(io_err(out))?;
        let mut listed = Vec::new();
        let mut files = Vec::new();
        for (name, bytes) in &self.files {
            let path = out.join(name);
            std::fs::write(&path, bytes).map_err(io_err(&path))?;
            let h = sha256_hex(bytes);
            listed.push(json!({ "file": name, "sha256": h, "bytes": bytes.len() }));
            files.push((name.clone(), h));
        }
        let manifest = json!({
            "artifact": "bures",
            "version": env!("CARGO_PKG_VERSION"),
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "config": config,
            "outputs": listed,
            "flagged": flagged,
            "diagnostics": diagnostics,
        });
        let path = out.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(io_err(&path))?;
        Ok(RunReport {
            out_dir: out.to_path_buf(),
            files,
            flagged,
            diagnostics,
        })
    }
}

struct LoadedModel {
    model: ValidatedModel,
    canonical: String,
    hash_hex: String,
    hash: [u8; 32],
}

fn load_model(path: &Path) -> Result<LoadedModel, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let model = parse_model_document(&text)?;
    let canonical = format_model_document(model.spec());
    let hash: [u8; 32] = Sha256::digest(canonical.as_bytes()).into();
    Ok(LoadedModel {
        hash_hex: sha256_hex(canonical.as_bytes()),
        model,
        canonical,
        hash,
    })
}

fn model_config(io: &ModelArgs, m: &LoadedModel) -> Value {
    json!({
        "model_path": io.model.display().to_string(),
        "model_sha256": m.hash_hex,
        "model_document": m.canonical,
        "out": io.out.display().to_string(),
    })
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Some(a), Value::Object(b)) = (a.as_object_mut(), b) {
        a.extend(b);
    }
    a
}

pub fn run(cli: &Cli) -> Result<RunReport, CliError> {
    match &cli.command {
        Command::Theory(a) => theory(a),
        Command::Mc(a) => mc(a, false),
        Command::Compare(a) => mc(a, true),
        Command::FitErfc(a) => fit(a),
        Command::Oracle(a) => oracle(a),
    }
}

fn diagnostic_json(d: &Diagnostic) -> Value {
    match d {
        Diagnostic::DerivativeBlowup { index, at } => json!({ "kind": "DerivativeBlowup", "index": index, "at": at }),
        Diagnostic::PolishSkipped { index, at } => json!({ "kind": "PolishSkipped", "index": index, "at": at }),
        Diagnostic::Normalization { expected, found } => json!({ "kind": "Normalization", "expected": expected, "found": found }),
    }
}

fn curve_meta(t: &mut Table, curve: &DensityCurve) {
    match curve.geometry {
        CurveGeometry::Radial(g) => {
            t.meta("r_ext", num(g.r_ext)).meta("r_int", num(g.r_int)).meta("alpha", num(g.alpha));
            t.meta("d", g.d.map_or("none".into(), |d| d.to_string()));
        }
        CurveGeometry::Singular(s) => {
            t.meta("x_lower", num(s.lower)).meta("x_upper", num(s.upper)).meta("alpha", num(s.alpha));
            t.meta("d", s.d.map_or("none".into(), |d| d.to_string()));
            t.meta("imag_offset", num(curve.imag_offset));
        }
    }
    let failures: Vec<Value> = curve.diagnostics.iter().filter(|d| d.is_failure()).map(diagnostic_json).collect();
    let notes = curve.diagnostics.len() - failures.len();
    t.meta("flagged", curve.is_flagged());
    t.meta("failures", Value::Array(failures));
    t.meta("annotations", notes);
}

/// Which spectra a run covers; `both` drops eigenvalues for rectangular models.
fn kinds(kind: KindArg, model: &ValidatedModel) -> Result<Vec<SpectrumKind>, CliError> {
    match kind {
        KindArg::Eigen => {
            model.require_square()?;
            Ok(vec![SpectrumKind::Eigenvalue])
        }
        KindArg::Singular => Ok(vec![SpectrumKind::Singular]),
        KindArg::Both if model.is_square() => Ok(vec![SpectrumKind::Eigenvalue, SpectrumKind::Singular]),
        KindArg::Both => Ok(vec![SpectrumKind::Singular]),
    }
}

fn kind_name(k: KindArg) -> &'static str {
    match k {
        KindArg::Eigen => "eigen",
        KindArg::Singular => "singular",
        KindArg::Both => "both",
    }
}

fn theory(a: &TheoryArgs) -> Result<RunReport, CliError> {
    let m = load_model(&a.io.model)?;
    let mut out = Outputs::new();
    let mut flagged = false;
    let mut diags = Vec::new();
    for kind in kinds(a.kind, &m.model)? {
        let curve = match kind {
            SpectrumKind::Eigenvalue => {
                let g = domain_geometry(&m.model)?;
                radial_density(&m.model, &a.grid.resolve(g.r_int, g.r_ext))?
            }
            SpectrumKind::Singular => {
                let s = singular_support(&m.model)?;
                singular_density(&m.model, &a.grid.resolve(s.lower, s.upper))?
            }
        };
        let (name, schema, cols): (_, _, &[&str]) = match kind {
            SpectrumKind::Eigenvalue => ("theory_radial.csv", "theory_radial", &["R", "m_value", "rho_rad"]),
            SpectrumKind::Singular => ("theory_singular.csv", "theory_singular", &["x", "re_M", "im_M", "rho"]),
        };
        let mut t = Table::new(schema, cols);
        t.meta("model_sha256", &m.hash_hex).meta("grid", a.grid);
        curve_meta(&mut t, &curve);
        for i in 0..curve.grid.len() {
            let (x, z, rho) = (curve.grid[i], curve.transform[i], curve.values[i]);
            t.row(match kind {
                SpectrumKind::Eigenvalue => vec![num(x), num(z.re), num(rho)],
                SpectrumKind::Singular => vec![num(x), num(z.re), num(z.im), num(rho)],
            });
        }
        out.table(name, &t);
        if curve.is_flagged() {
            flagged = true;
            diags.push(json!({
                "file": name,
                "diagnostics": curve.diagnostics.iter().filter(|d| d.is_failure()).map(diagnostic_json).collect::<Vec<_>>(),
            }));
        }
    }
    let config = merge(model_config(&a.io, &m), json!({ "grid": a.grid.to_string(), "kind": kind_name(a.kind) }));
    out.finish(&a.io.out, "theory", config, flagged, Value::Array(diags))
}

fn linspace(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect()
}

fn max_modulus(samples: &[SpectrumSample]) -> f64 {
    samples.iter().flat_map(|s| s.values.iter()).map(|z| z.norm()).fold(0.0, f64::max)
}

/// Histogram range: the theoretical support when it resolves, otherwise
/// `[0, max |value|]`.
fn histogram_range(model: &ValidatedModel, kind: SpectrumKind, samples: &[SpectrumSample]) -> (f64, f64) {
    let theory = match kind {
        SpectrumKind::Eigenvalue => domain_geometry(model).ok().map(|g| (g.r_int, g.r_ext)),
        SpectrumKind::Singular => singular_support(model).ok().map(|s| (s.lower, s.upper)),
    };
    theory.unwrap_or_else(|| (0.0, max_modulus(samples)))
}

const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_8),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_8),
];

/// Theory averaged over each bin with four-point Gauss-Legendre.
fn bin_averaged_theory(model: &ValidatedModel, kind: SpectrumKind, edges: &[f64]) -> Result<DensityCurve, SolverError> {
    let nodes: Vec<f64> = edges
        .windows(2)
        .flat_map(|w| GAUSS4.iter().map(move |(t, _)| 0.5 * (w[0] + w[1]) + 0.5 * (w[1] - w[0]) * t))
        .collect();
    let mut curve = match kind {
        SpectrumKind::Eigenvalue => radial_density(model, &nodes)?,
        SpectrumKind::Singular => singular_density(model, &nodes)?,
    };
    curve.values = curve
        .values
        .chunks(4)
        .map(|c| c.iter().zip(GAUSS4).map(|(v, (_, w))| 0.5 * w * v).sum())
        .collect();
    curve.grid = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    Ok(curve)
}

/// Bins excluded at each end of a comparison.
pub const EDGE_BINS: usize = 3;

/// Relative tolerance of the per-bin agreement check; the other arm is three
/// standard errors.
pub const BIN_RTOL: f64 = 0.05;

fn mc(a: &McArgs, compare: bool) -> Result<RunReport, CliError> {
    let s = &a.sampling;
    if s.samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    if s.n == 0 {
        return Err(CliError::Usage("--n must be positive".into()));
    }
    if a.bins == 0 {
        return Err(CliError::Usage("--bins must be positive".into()));
    }
    let m = load_model(&a.io.model)?;
    let workers = s.workers.unwrap_or_else(default_workers);
    let mut out = Outputs::new();
    let mut flagged = false;
    let mut diags = Vec::new();
    let command = if compare { "compare" } else { "mc" };

    for kind in kinds(a.kind, &m.model)? {
        let label = match kind {
            SpectrumKind::Eigenvalue => "eigenvalue",
            SpectrumKind::Singular => "singular",
        };
        let stream = derive_seed(s.seed, label);
        let cfg = McConfig {
            n_outer: s.n,
            samples: s.samples,
            seed: stream,
            workers,
            entries: s.entries,
        };
        let samples = run_samples(&m.model, kind, &cfg)?;
        let (lo, hi) = histogram_range(&m.model, kind, &samples);
        let edges = linspace(lo, hi, a.bins);
        let hist = match kind {
            SpectrumKind::Eigenvalue => radial_histogram(&samples, &edges)?,
            SpectrumKind::Singular => value_histogram(&samples, &edges)?,
        };
        let suffix = match kind {
            SpectrumKind::Eigenvalue => "radial",
            SpectrumKind::Singular => "singular",
        };
        let header = |t: &mut Table| {
            t.meta("model_sha256", &m.hash_hex)
                .meta("seed", s.seed)
                .meta("stream_label", label)
                .meta("stream_seed", stream)
                .meta("n", s.n)
                .meta("samples", s.samples)
                .meta("entries", s.entries)
                .meta("bins", a.bins)
                .meta("alpha_hat", num(hist.alpha_hat))
                .meta("out_of_range", num(hist.out_of_range))
                .meta("empty_bins", hist.empty_bins);
        };

        if compare {
            let theory = bin_averaged_theory(&m.model, kind, &edges)?;
            let (t, bad) = compare_table(&hist, &theory, &header);
            if theory.is_flagged() || bad {
                flagged |= theory.is_flagged();
                diags.push(json!({
                    "file": format!("compare_{suffix}.csv"),
                    "theory_flagged": theory.is_flagged(),
                    "bulk_disagreement": bad,
                    "diagnostics": theory.diagnostics.iter().filter(|d| d.is_failure()).map(diagnostic_json).collect::<Vec<_>>(),
                }));
            }
            out.table(&format!("compare_{suffix}.csv"), &t);
            continue;
        }

        let mut t = Table::new(&format!("mc_{suffix}"), &["bin_lo", "bin_hi", "density", "stderr"]);
        header(&mut t);
        for i in 0..hist.densities.len() {
            t.row(vec![num(hist.edges[i]), num(hist.edges[i + 1]), num(hist.densities[i]), num(hist.std_errors[i])]);
        }
        out.table(&format!("mc_{suffix}.csv"), &t);

        if kind == SpectrumKind::Singular {
            let rows = moment_check(&m.model, 4, &samples)?;
            let mut t = Table::new("mc_moments", &["n", "empirical", "stderr", "theory"]);
            header(&mut t);
            for r in rows {
                t.row(vec![r.n.to_string(), num(r.empirical), num(r.std_error), num(r.theory)]);
            }
            out.table("mc_moments.csv", &t);

            let ent = samples.iter().map(von_neumann_entropy).collect::<Result<Vec<_>, _>>()?;
            let (mean, se) = mean_se(&ent);
            let mut t = Table::new("mc_entropy", &["samples", "mean", "stderr"]);
            header(&mut t);
            t.row(vec![ent.len().to_string(), num(mean), num(se)]);
            out.table("mc_entropy.csv", &t);
        }

        if a.spectra {
            let file = SpectraFile {
                model_hash: m.hash,
                n: s.n as u64,
                seed: stream,
                kind,
                samples,
            };
            let mut buf = Vec::new();
            write_spectra(&mut buf, &file).expect("writing to memory");
            let name = match kind {
                SpectrumKind::Eigenvalue => "spectra_eigen.bin",
                SpectrumKind::Singular => "spectra_singular.bin",
            };
            out.bytes(name, buf);
        }
    }

    let config = merge(
        model_config(&a.io, &m),
        json!({
            "seed": s.seed,
            "n": s.n,
            "samples": s.samples,
            "workers": workers,
            "entries": s.entries.to_string(),
            "bins": a.bins,
            "kind": kind_name(a.kind),
            "spectra": a.spectra,
        }),
    );
    // bulk disagreement is reported but only a flagged theory curve fails the run
    out.finish(&a.io.out, command, config, flagged, Value::Array(diags))
}

fn compare_table(hist: &EmpiricalCurve, theory: &DensityCurve, header: &dyn Fn(&mut Table)) -> (Table, bool) {
    let name = match theory.kind {
        SpectrumKind::Eigenvalue => "compare_radial",
        SpectrumKind::Singular => "compare_singular",
    };
    let mut t = Table::new(name, &["bin_lo", "bin_hi", "density", "stderr", "rho_theory", "z", "bulk", "agree"]);
    header(&mut t);
    let bins = hist.densities.len();
    let mut rows = Vec::with_capacity(bins);
    let (mut max_z, mut max_rel, mut all_agree) = (0.0f64, 0.0f64, true);
    for i in 0..bins {
        let (d, se, th) = (hist.densities[i], hist.std_errors[i], theory.values[i]);
        let z = if se > 0.0 {
            (d - th) / se
        } else if d == th {
            0.0
        } else {
            f64::NAN
        };
        let bulk = i >= EDGE_BINS && i + EDGE_BINS < bins;
        let agree = (d - th).abs() <= (BIN_RTOL * th.abs()).max(3.0 * se);
        if bulk {
            all_agree &= agree;
            max_z = max_z.max(z.abs());
            if th != 0.0 {
                max_rel = max_rel.max(((d - th) / th).abs());
            }
        }
        rows.push(vec![
            num(hist.edges[i]),
            num(hist.edges[i + 1]),
            num(d),
            num(se),
            num(th),
            num(z),
            (bulk as u8).to_string(),
            (agree as u8).to_string(),
        ]);
    }
    t.meta("edge_bins_excluded", EDGE_BINS)
        .meta("rtol", num(BIN_RTOL))
        .meta("bulk_max_abs_z", num(max_z))
        .meta("bulk_max_rel", num(max_rel))
        .meta("bulk_agree", all_agree);
    curve_meta(&mut t, theory);
    for r in rows {
        t.row(r);
    }
    (t, !all_agree)
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn fit(a: &FitArgs) -> Result<RunReport, CliError> {
    if a.n.is_empty() || a.n.contains(&0) {
        return Err(CliError::Usage("--n needs positive sizes".into()));
    }
    if a.samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    if !(a.half_width > 0.0) || a.bins == 0 {
        return Err(CliError::Usage("--half-width and --bins must be positive".into()));
    }
    let m = load_model(&a.io.model)?;
    m.model.require_square()?;
    let geo = domain_geometry(&m.model)?;
    let workers = a.workers.unwrap_or_else(default_workers);
    let n_max = *a.n.iter().max().expect("nonempty");
    let mut sides = vec![Borderline::External];
    if geo.r_int > 0.0 {
        sides.push(Borderline::Internal);
    }

    let mut out = Outputs::new();
    let mut fits: Vec<(Borderline, usize, ErfcFitResult)> = Vec::new();
    for &n in &a.n {
        let samples_n = (a.samples * n_max).div_ceil(n);
        let stream = derive_seed(a.seed, &format!("fit-erfc/N={n}"));
        let cfg = McConfig {
            n_outer: n,
            samples: samples_n,
            seed: stream,
            workers,
            entries: a.entries,
        };
        let samples = run_samples(&m.model, SpectrumKind::Eigenvalue, &cfg)?;
        for &side in &sides {
            let (profile, _) = edge_profile(&m.model, &samples, side, a.half_width, a.bins)?;
            let f = fit_erfc(&profile)?;
            let side_name = side_label(side);
            let mut t = Table::new("fit_profile", &["r", "density", "stderr", "theory", "fitted"]);
            t.meta("model_sha256", &m.hash_hex)
                .meta("borderline", side_name)
                .meta("n", n)
                .meta("samples", samples_n)
                .meta("stream_seed", stream)
                .meta("q_b", num(f.q_b))
                .meta("R_b", num(f.r_b));
            for i in 0..profile.r.len() {
                let ff = bures_core::fit::erfc_form_factor(profile.r[i], n, f.q_b, f.r_b, side);
                t.row(vec![
                    num(profile.r[i]),
                    num(profile.density[i]),
                    num(profile.std_error[i]),
                    num(profile.theory[i]),
                    num(profile.theory[i] * ff),
                ]);
            }
            out.table(&format!("fit_profile_{side_name}_N{n}.csv"), &t);
            fits.push((side, n, f));
        }
    }

    let mut t = Table::new("fit_erfc", &["borderline", "q_b", "R_b", "residual", "N", "q_b_stderr", "R_b_stderr"]);
    t.meta("model_sha256", &m.hash_hex)
        .meta("seed", a.seed)
        .meta("entries", a.entries)
        .meta("half_width", num(a.half_width))
        .meta("bins", a.bins)
        .meta("r_ext", num(geo.r_ext))
        .meta("r_int", num(geo.r_int));
    let mut slopes = serde_json::Map::new();
    for &side in &sides {
        let per: Vec<(usize, ErfcFitResult)> = fits.iter().filter(|f| f.0 == side).map(|f| (f.1, f.2.clone())).collect();
        let slope = if per.len() >= 2 { width_scaling_slope(&per) } else { f64::NAN };
        t.meta(&format!("width_slope_{}", side_label(side)), num(slope));
        slopes.insert(side_label(side).into(), json!(num(slope)));
    }
    for (side, n, f) in &fits {
        t.row(vec![
            side_label(*side).into(),
            num(f.q_b),
            num(f.r_b),
            num(f.residual),
            n.to_string(),
            num(f.covariance[0][0].sqrt()),
            num(f.covariance[1][1].sqrt()),
        ]);
    }
    out.table("fit_erfc.csv", &t);
    let config = merge(
        model_config(&a.io, &m),
        json!({
            "seed": a.seed,
            "n": a.n,
            "samples": a.samples,
            "workers": workers,
            "entries": a.entries.to_string(),
            "bins": a.bins,
            "half_width": a.half_width,
            "width_slopes": slopes,
        }),
    );
    out.finish(&a.io.out, "fit-erfc", config, false, json!([]))
}

fn side_label(side: Borderline) -> &'static str {
    match side {
        Borderline::External => "external",
        Borderline::Internal => "internal",
    }
}

fn oracle(a: &OracleArgs) -> Result<RunReport, CliError> {
    let mut out = Outputs::new();
    let config = match a.family {
        Family::Bures => {
            let mut t = Table::new("oracle_bures", &["x", "rho"]);
            t.meta("family", "bures").meta("grid", a.grid).meta("x_upper", num(BURES_EDGE));
            for x in a.grid.resolve(0.0, BURES_EDGE) {
                t.row(vec![num(x), num(bures_closed_form(x))]);
            }
            out.table("oracle_bures.csv", &t);
            json!({ "family": "bures", "grid": a.grid.to_string(), "out": a.out.display().to_string() })
        }
        Family::TExample1 => {
            if a.j == 0 || a.l < 2 || !(a.w > 0.0) || !a.w.is_finite() {
                return Err(CliError::Usage("t-example1 needs --j >= 1, --l >= 2 and --w > 0".into()));
            }
            let mut t = Table::new("oracle_t_example1", &["R", "rho_rad"]);
            t.meta("family", "t-example1").meta("j", a.j).meta("l", a.l).meta("w", num(a.w)).meta("grid", a.grid);
            for r in a.grid.resolve(0.0, a.w) {
                t.row(vec![num(r), num(t_example1_closed_form(r, a.j, a.l, a.w))]);
            }
            out.table("oracle_t_example1.csv", &t);
            json!({
                "family": "t-example1", "j": a.j, "l": a.l, "w": a.w,
                "grid": a.grid.to_string(), "out": a.out.display().to_string(),
            })
        }
    };
    out.finish(&a.out, "oracle", config, false, json!([]))
}
