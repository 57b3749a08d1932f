use super::{check_grid, example_family_radii, CurveGeometry, DensityCurve, Diagnostic, DomainGeometry, RadialSolution, SolverError};
use crate::model::{ModelError, SpectrumKind, ValidatedModel};
use crate::numeric::safeguarded_newton;
use crate::transforms::Composition;
use num_complex::Complex64 as C64;

/// Radii of the eigenvalue domain: `R_ext^2 = 𝔑_X(0)`, `R_int^2 = 𝔑_X(alpha - 1)`.
///
/// When the model belongs to one of the example families the radii are
/// cross-checked against the family's closed form.
pub fn domain_geometry(model: &ValidatedModel) -> Result<DomainGeometry, SolverError> {
    model.require_square()?;
    let comp = Composition::new(model);
    geometry_with(model, &comp)
}

fn geometry_with(model: &ValidatedModel, comp: &Composition) -> Result<DomainGeometry, SolverError> {
    let alpha = model.zero_mode_fraction();
    let (ext2, _) = comp.real(0.0)?;
    let (int2, _) = comp.real(alpha - 1.0)?;
    let int2 = if int2 <= 1e-14 * ext2 { 0.0 } else { int2 };
    if let Some((ce, ci)) = example_family_radii(model) {
        for (got, want) in [(ext2, ce * ce), (int2, ci * ci)] {
            if (got - want).abs() > 1e-10 * ext2.max(1e-300) {
                return Err(SolverError::GeometryMismatch {
                    computed: got.sqrt(),
                    closed_form: want.sqrt(),
                });
            }
        }
    }
    let d = match model.divergence_exponent(SpectrumKind::Eigenvalue) {
        Ok(d) => d,
        Err(ModelError::NotApplicable) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(DomainGeometry {
        r_ext: ext2.sqrt(),
        r_int: int2.sqrt(),
        alpha,
        d,
    })
}

/// Solves `𝔑_X(ℳ) = R^2` for every grid radius, marching inward from
/// `ℳ(R_ext^2) = 0`. Radii outside the domain get the borderline values.
pub fn solve_radial(model: &ValidatedModel, r_grid: &[f64]) -> Result<Vec<RadialSolution>, SolverError> {
    check_grid(r_grid, true)?;
    model.require_square()?;
    let comp = Composition::new(model);
    let geo = geometry_with(model, &comp)?;
    solve_with(&comp, &geo, r_grid)
}

fn solve_with(comp: &Composition, geo: &DomainGeometry, r_grid: &[f64]) -> Result<Vec<RadialSolution>, SolverError> {
    let base = geo.alpha - 1.0;
    let mut order: Vec<usize> = (0..r_grid.len()).collect();
    order.sort_by(|&a, &b| r_grid[b].total_cmp(&r_grid[a]));
    let mut out: Vec<Option<RadialSolution>> = vec![None; r_grid.len()];
    let mut prev = 0.0;
    for i in order {
        let r = r_grid[i];
        let m = if r >= geo.r_ext {
            0.0
        } else if r <= geo.r_int {
            base
        } else {
            root(comp, r, base, prev)?
        };
        if m > prev + 1e-12 {
            return Err(SolverError::NoRealRoot { r });
        }
        prev = m;
        out[i] = Some(RadialSolution {
            r,
            m_value: m,
            factor_states: comp.states_real(m),
        });
    }
    Ok(out.into_iter().map(|s| s.expect("every index visited")).collect())
}

fn root(comp: &Composition, r: f64, lo: f64, guess: f64) -> Result<f64, SolverError> {
    let r2 = r * r;
    safeguarded_newton(|m| comp.real(m).ok().map(|(v, d)| (v - r2, d)), lo, 0.0, guess, 1e-16).ok_or(SolverError::NoRealRoot { r })
}

/// Radial density `d ℳ(R^2) / dR = 2R / 𝔑_X'(ℳ)`, with the derivative of the
/// composed transform evaluated analytically.
pub fn radial_density(model: &ValidatedModel, r_grid: &[f64]) -> Result<DensityCurve, SolverError> {
    check_grid(r_grid, true)?;
    model.require_square()?;
    let comp = Composition::new(model);
    let geo = geometry_with(model, &comp)?;
    let sols = solve_with(&comp, &geo, r_grid)?;
    let mut values = Vec::with_capacity(r_grid.len());
    let mut diagnostics = Vec::new();
    for (i, s) in sols.iter().enumerate() {
        let r = s.r;
        if r > geo.r_ext * (1.0 + 1e-12) || r < geo.r_int * (1.0 - 1e-12) || (r == 0.0 && geo.r_int == 0.0 && geo.r_ext == 0.0) {
            values.push(0.0);
            continue;
        }
        let (r_eval, m_eval) = if r == 0.0 {
            let tiny = 1e-12 * geo.r_ext;
            (tiny, root(&comp, tiny, geo.alpha - 1.0, geo.alpha - 1.0)?)
        } else {
            (r, s.m_value)
        };
        let (_, d) = comp.real(m_eval)?;
        if r == 0.0 || !(d > 1e-300) {
            diagnostics.push(Diagnostic::DerivativeBlowup { index: i, at: r });
        }
        let v = if d > 0.0 { 2.0 * r_eval / d } else { f64::INFINITY };
        values.push(v);
    }
    Ok(DensityCurve {
        kind: SpectrumKind::Eigenvalue,
        grid: r_grid.to_vec(),
        values,
        transform: sols.iter().map(|s| C64::new(s.m_value, 0.0)).collect(),
        geometry: CurveGeometry::Radial(geo),
        diagnostics,
        imag_offset: 0.0,
    })
}

/// Central finite-difference radial density, for cross-checking the analytic
/// derivative away from the borderlines.
pub fn radial_density_fd(model: &ValidatedModel, r_grid: &[f64], h: f64) -> Result<Vec<f64>, SolverError> {
    model.require_square()?;
    let comp = Composition::new(model);
    let geo = geometry_with(model, &comp)?;
    let base = geo.alpha - 1.0;
    let m_at = |r: f64| -> Result<f64, SolverError> {
        if r >= geo.r_ext {
            Ok(0.0)
        } else if r <= geo.r_int {
            Ok(base)
        } else {
            root(&comp, r, base, 0.5 * base)
        }
    };
    r_grid.iter().map(|&r| Ok((m_at(r + h)? - m_at(r - h)?) / (2.0 * h))).collect()
}

/// Radial density continued analytically past the outer borderline: for
/// `R > R_ext` the same branch of `𝔑_X(ℳ) = R^2` is followed to `ℳ > 0`.
/// Inside the domain this equals [`radial_density`].
pub fn radial_density_continued(model: &ValidatedModel, r: f64) -> Result<f64, SolverError> {
    model.require_square()?;
    let comp = Composition::new(model);
    let (ext2, _) = comp.real(0.0)?;
    if r * r <= ext2 {
        let c = radial_density(model, &[r])?;
        return Ok(c.values[0]);
    }
    let r2 = r * r;
    let mut hi = 1.0;
    while comp.real(hi)?.0 < r2 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(SolverError::NoRealRoot { r });
        }
    }
    let m = safeguarded_newton(|m| comp.real(m).ok().map(|(v, d)| (v - r2, d)), 0.0, hi, 0.0, 1e-16).ok_or(SolverError::NoRealRoot { r })?;
    let (_, d) = comp.real(m)?;
    Ok(2.0 * r / d)
}
