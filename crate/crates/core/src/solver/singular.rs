use super::{check_grid, CurveGeometry, DensityCurve, Diagnostic, SingularSupport, SolverError};
use crate::continuation::{newton, track, System};
use crate::model::{ModelError, SpectrumKind, ValidatedModel};
use crate::numeric::{golden_min, tanh_sinh};
use crate::transforms::Composition;
use num_complex::Complex64 as C64;

/// Final imaginary offset, relative to `x`, before the real-axis polish.
const ETA_REL: f64 = 1e-10;
const NORMALIZATION_TOL: f64 = 1e-6;

/// `(M + 1) prod num - z M prod den = 0` together with the auxiliary
/// equations of the multi-valued atoms. Unknowns: `[M, aux...]`.
struct SingularSystem<'a> {
    comp: &'a Composition,
    offsets: Vec<usize>,
    dim: usize,
}

impl<'a> SingularSystem<'a> {
    fn new(comp: &'a Composition) -> Self {
        let mut offsets = Vec::with_capacity(comp.atoms.len());
        let mut next = 1;
        for a in &comp.atoms {
            offsets.push(next);
            next += a.aux_len();
        }
        SingularSystem { comp, offsets, dim: next }
    }

    fn start(&self, z: C64) -> Result<Vec<C64>, SolverError> {
        let mut x = vec![C64::new(0.0, 0.0); self.dim];
        x[0] = self.comp.product(C64::new(0.0, 0.0))? / z;
        for (a, &off) in self.comp.atoms.iter().zip(&self.offsets) {
            a.anchor(&mut x[off..off + a.aux_len()]);
        }
        if !newton(self, &mut x, z, 1e-14, 50).converged {
            return Err(SolverError::ContinuationStall { at: z });
        }
        Ok(x)
    }
}

impl System for SingularSystem<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn residual(&self, x: &[C64], z: C64, out: &mut [C64]) {
        let m = x[0];
        let mut num = C64::new(1.0, 0.0);
        let mut den = C64::new(1.0, 0.0);
        for (a, &off) in self.comp.atoms.iter().zip(&self.offsets) {
            let u = m / a.scale;
            let len = a.aux_len();
            let (n, d) = a.num_den(u, &x[off..off + len]);
            num *= n;
            den *= d;
            a.aux_residual(u, &x[off..off + len], &mut out[off..off + len]);
        }
        out[0] = (m + 1.0) * num - z * m * den;
    }

    fn jacobian(&self, x: &[C64], z: C64, jac: &mut [C64]) {
        let n = self.dim;
        let zero = C64::new(0.0, 0.0);
        jac.iter_mut().for_each(|v| *v = zero);
        let m = x[0];
        let atoms = &self.comp.atoms;
        let mut nums = Vec::with_capacity(atoms.len());
        let mut dens = Vec::with_capacity(atoms.len());
        for (a, &off) in atoms.iter().zip(&self.offsets) {
            let (nv, dv) = a.num_den(m / a.scale, &x[off..off + a.aux_len()]);
            nums.push(nv);
            dens.push(dv);
        }
        let others = |v: &[C64], i: usize| -> C64 { v.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &w)| w).product() };
        let num: C64 = nums.iter().product();
        let den: C64 = dens.iter().product();
        let mut j00 = num - z * den;
        let mut dn_daux = Vec::new();
        let mut dr_du = Vec::new();
        let mut dr_daux = Vec::new();
        for (i, (a, &off)) in atoms.iter().zip(&self.offsets).enumerate() {
            let len = a.aux_len();
            let aux = &x[off..off + len];
            let u = m / a.scale;
            dn_daux.clear();
            dn_daux.resize(len, zero);
            let (dn, dd) = a.num_den_partials(aux, &mut dn_daux);
            let (on, od) = (others(&nums, i), others(&dens, i));
            j00 += (m + 1.0) * dn / a.scale * on - z * m * dd / a.scale * od;
            for k in 0..len {
                jac[off + k] = (m + 1.0) * dn_daux[k] * on;
            }
            if len > 0 {
                dr_du.clear();
                dr_du.resize(len, zero);
                dr_daux.clear();
                dr_daux.resize(len * len, zero);
                a.aux_partials(u, aux, &mut dr_du, &mut dr_daux);
                for r in 0..len {
                    jac[(off + r) * n] = dr_du[r] / a.scale;
                    for c in 0..len {
                        jac[(off + r) * n + off + c] = dr_daux[r * len + c];
                    }
                }
            }
        }
        jac[0] = j00;
    }
}

#[derive(Clone, Copy, Debug)]
struct Point {
    m: C64,
    polished: bool,
}

/// Path tracker anchored at `x_top + i h`, reached from `i Y` far up the
/// imaginary axis where `M ~ m_1 / z`.
struct Tracker<'a> {
    sys: SingularSystem<'a>,
    h: f64,
    x_top: f64,
    anchor: Vec<C64>,
}

impl<'a> Tracker<'a> {
    fn new(comp: &'a Composition, upper: f64) -> Result<Self, SolverError> {
        let sys = SingularSystem::new(comp);
        let (x_top, h) = (1.5 * upper, 0.25 * upper);
        let z0 = C64::new(0.0, 20.0 * upper);
        let mut anchor = sys.start(z0)?;
        let z1 = C64::new(x_top, h);
        track(&sys, &mut anchor, z0, z1).map_err(|_| SolverError::ContinuationStall { at: z1 })?;
        Ok(Tracker { sys, h, x_top, anchor })
    }

    fn horizontal(&self, state: &mut Vec<C64>, from: f64, to: f64) -> Result<(), SolverError> {
        let (a, b) = (C64::new(from, self.h), C64::new(to, self.h));
        track(&self.sys, state, a, b).map_err(|crate::continuation::TrackFailure::Stall(at)| SolverError::ContinuationStall { at })
    }

    /// Descends from `x + i h` to the real axis in geometric hops, then polishes.
    fn descend(&self, mut state: Vec<C64>, x: f64) -> Result<Point, SolverError> {
        let target = (ETA_REL * x).max(1e-300);
        let mut eta = self.h;
        while eta > target {
            let next = (0.25 * eta).max(target);
            track(&self.sys, &mut state, C64::new(x, eta), C64::new(x, next))
                .map_err(|crate::continuation::TrackFailure::Stall(at)| SolverError::ContinuationStall { at })?;
            eta = next;
        }
        let offset = state[0];
        let mut polished = state.clone();
        let rep = newton(&self.sys, &mut polished, C64::new(x, 0.0), 1e-14, 60);
        let m = polished[0];
        let scale = 1.0 + offset.norm();
        if rep.converged && (m - offset).norm() <= 1e-4 * scale && m.im <= 1e-12 * scale {
            Ok(Point { m, polished: true })
        } else {
            if offset.im > 1e-8 * scale {
                return Err(SolverError::NoUpperBranch { x });
            }
            Ok(Point { m: offset, polished: false })
        }
    }

    fn at(&self, x: f64) -> Result<Point, SolverError> {
        let mut s = self.anchor.clone();
        self.horizontal(&mut s, self.x_top, x)?;
        self.descend(s, x)
    }

    fn inside(&self, x: f64) -> Result<bool, SolverError> {
        let p = self.at(x)?;
        Ok(-p.m.im > 1e-8 * (1.0 + p.m.norm()))
    }
}

fn density_of(p: &Point, x: f64) -> f64 {
    (-p.m.im / (std::f64::consts::PI * x)).max(0.0)
}

/// Real `N(M) = (M + 1) / M f(M)` for `M > 0`.
fn n_real(comp: &Composition, m: f64) -> Option<f64> {
    comp.real(m).ok().map(|(v, _)| (m + 1.0) / m * v)
}

/// Real root of `N(M) = x` on the monotone stretch `[lo, hi]` outside the
/// support; `hi` is the `M` of the nearer edge.
fn real_root(comp: &Composition, x: f64, lo: f64, hi: f64) -> Option<f64> {
    let hi = if hi.is_finite() { hi } else { 1e12 };
    let lo = if lo == 0.0 { 1e-300 } else { lo };
    let g = |m: f64| n_real(comp, m).map(|v| v - x);
    let (glo, ghi) = (g(lo)?, g(hi)?);
    if ghi == 0.0 {
        return Some(hi);
    }
    if glo.signum() == ghi.signum() {
        return None;
    }
    let m = crate::numeric::bisect(|m| g(m).unwrap_or(f64::NAN), lo, hi, 1e-15 * (1.0 + hi.abs()));
    g(m).map(|_| m)
}

/// Upper edge from the first local minimum of the real `N(M)` on `M > 0`,
/// or the `M -> infinity` limit when `N` decreases monotonically.
fn upper_edge(comp: &Composition) -> Result<(f64, f64), SolverError> {
    let pts: Vec<f64> = (0..=240).map(|k| 1e-4 * 10f64.powf(k as f64 / 20.0)).collect();
    let vals: Vec<f64> = pts
        .iter()
        .map(|&m| n_real(comp, m).ok_or(SolverError::NotApplicable("real N(M) undefined on M > 0")))
        .collect::<Result<_, _>>()?;
    for k in 1..vals.len() - 1 {
        if vals[k + 1] > vals[k] {
            let (a, b) = (pts[k - 1], pts[k + 1]);
            let (m, v) = golden_min(|m| n_real(comp, m), a, b, 1e-12 * b).ok_or(SolverError::NotApplicable("edge search failed"))?;
            return Ok((v, m));
        }
    }
    Ok((*vals.last().expect("non-empty scan"), f64::INFINITY))
}

/// The soft lower edge is a local maximum of the real `N(M)`; refining it from
/// the real root just below the bisected edge removes the bias of the
/// `Im M` threshold.
fn polish_lower_edge(comp: &Composition, tracker: &Tracker<'_>, below: f64) -> Option<(f64, f64)> {
    let m0 = tracker.at(below).ok()?.m.re;
    let delta = 1e-3 * (1.0 + m0.abs());
    let (a, b) = (m0 - delta, m0 + delta);
    let (m, neg) = golden_min(|m| n_real(comp, m).map(|v| -v), a, b, 1e-13)?;
    let edge = -neg;
    let interior = m > a + 1e-9 * delta && m < b - 1e-9 * delta;
    (interior && (edge - below).abs() <= 1e-6 * (1.0 + below)).then_some((edge, m))
}

fn support_with<'a>(model: &ValidatedModel, comp: &'a Composition) -> Result<(SingularSupport, Tracker<'a>), SolverError> {
    let alpha = model.zero_mode_fraction();
    let d = match model.divergence_exponent(SpectrumKind::Singular) {
        Ok(d) => d,
        Err(ModelError::NotApplicable) => None,
        Err(e) => return Err(e.into()),
    };
    let (upper, m_upper) = upper_edge(comp)?;
    let tracker = Tracker::new(comp, upper)?;
    let x_tiny = 1e-10 * upper;
    let (lower, m_lower) = if tracker.inside(x_tiny)? {
        (0.0, alpha - 1.0)
    } else {
        let scan: Vec<f64> = (0..64).map(|k| x_tiny * (0.999 * upper / x_tiny).powf(k as f64 / 63.0)).collect();
        let mut first = None;
        for (k, &x) in scan.iter().enumerate().skip(1) {
            if tracker.inside(x)? {
                first = Some(k);
                break;
            }
        }
        let Some(k) = first else {
            return Err(SolverError::SupportEdgeAmbiguity { lo: scan[63], hi: upper });
        };
        let (mut lo, mut hi) = (scan[k - 1], scan[k]);
        while hi - lo > 1e-12 * hi {
            let mid = 0.5 * (lo + hi);
            if tracker.inside(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        match polish_lower_edge(comp, &tracker, lo) {
            Some(edge) => edge,
            None => (0.5 * (lo + hi), tracker.at(lo)?.m.re),
        }
    };
    let support = SingularSupport {
        lower,
        upper,
        m_lower,
        m_upper,
        alpha,
        d,
    };
    Ok((support, tracker))
}

/// Mass of the continuous part. When the support reaches zero the last
/// stretch `[0, eps]` is integrated from the local power law, since `M + 1`
/// is no longer resolvable in floating point that close to the origin.
fn continuous_mass(tracker: &Tracker<'_>, support: &SingularSupport) -> Option<f64> {
    let rho = |x: f64| tracker.at(x).ok().map(|p| density_of(&p, x));
    let (lo, tail) = if support.lower > 0.0 {
        (support.lower, 0.0)
    } else {
        let eps = 1e-20 * support.upper;
        let (r1, r2) = (rho(eps)?, rho(10.0 * eps)?);
        let slope = (r2 / r1).log10();
        if !(slope > -1.0) {
            return None;
        }
        (eps, eps * r1 / (1.0 + slope))
    };
    let mut failed = false;
    let mass = tanh_sinh(
        |x| {
            rho(x).unwrap_or_else(|| {
                failed = true;
                0.0
            })
        },
        lo,
        support.upper,
        1e-10,
    );
    (!failed).then_some(mass + tail)
}

/// Support of the continuous part of the singular-value density.
///
/// Fails with [`SolverError::SupportEdgeAmbiguity`] when no interior point is
/// found, which is the signature of a spectrum concentrated at a point.
pub fn singular_support(model: &ValidatedModel) -> Result<SingularSupport, SolverError> {
    let comp = Composition::new(model);
    Ok(support_with(model, &comp)?.0)
}

/// Density and `M(x + i0)` at a single point.
pub fn singular_density_at(model: &ValidatedModel, x: f64) -> Result<(f64, C64), SolverError> {
    check_grid(&[x], false)?;
    let comp = Composition::new(model);
    let (support, tracker) = support_with(model, &comp)?;
    let p = tracker.at(x)?;
    let rho = if x >= support.upper || x < support.lower { 0.0 } else { density_of(&p, x) };
    Ok((rho, p.m))
}

/// Singular-value density `-Im G(x + i0) / pi`, `G = (M + 1) / x`, on the
/// branch continued from large `|z|`.
///
/// The curve carries a [`Diagnostic::Normalization`] failure when the mass of
/// the continuous part misses `1 - alpha` by more than `1e-6`.
pub fn singular_density(model: &ValidatedModel, x_grid: &[f64]) -> Result<DensityCurve, SolverError> {
    check_grid(x_grid, false)?;
    let comp = Composition::new(model);
    let (support, tracker) = support_with(model, &comp)?;

    let mut order: Vec<usize> = (0..x_grid.len()).collect();
    order.sort_by(|&a, &b| x_grid[b].total_cmp(&x_grid[a]));
    let mut values = vec![0.0; x_grid.len()];
    let mut transform = vec![C64::new(0.0, 0.0); x_grid.len()];
    let mut diagnostics = Vec::new();
    let mut state = tracker.anchor.clone();
    let mut at = tracker.x_top;
    for i in order {
        let x = x_grid[i];
        tracker.horizontal(&mut state, at, x)?;
        at = x;
        // Outside the support the physical root is real; edges themselves are
        // branch points the tracker must not descend onto.
        let outside = if x >= support.upper {
            Some(real_root(&comp, x, 0.0, support.m_upper))
        } else if x <= support.lower {
            Some(real_root(&comp, x, support.alpha - 1.0, support.m_lower))
        } else {
            None
        };
        if let Some(Some(m)) = outside {
            transform[i] = C64::new(m, 0.0);
            continue;
        }
        let p = tracker.descend(state.clone(), x)?;
        if !p.polished {
            diagnostics.push(Diagnostic::PolishSkipped { index: i, at: x });
        }
        transform[i] = p.m;
        if outside.is_none() {
            values[i] = density_of(&p, x);
        }
    }

    let expected = 1.0 - support.alpha;
    let found = continuous_mass(&tracker, &support);
    if !found.is_some_and(|mass| (mass - expected).abs() <= NORMALIZATION_TOL) {
        diagnostics.push(Diagnostic::Normalization {
            expected,
            found: found.unwrap_or(f64::NAN),
        });
    }
    Ok(DensityCurve {
        kind: SpectrumKind::Singular,
        grid: x_grid.to_vec(),
        values,
        transform,
        geometry: CurveGeometry::Singular(support),
        diagnostics,
        imag_offset: ETA_REL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{presets, EnsembleFactor, ModelSpec};

    /// Same residual, default finite-difference Jacobian.
    struct Fd<'a>(&'a SingularSystem<'a>);

    impl System for Fd<'_> {
        fn dim(&self) -> usize {
            self.0.dim
        }
        fn residual(&self, x: &[C64], z: C64, out: &mut [C64]) {
            self.0.residual(x, z, out)
        }
    }

    #[test]
    fn analytic_jacobian_matches_differences() {
        let spec = ModelSpec::new(vec![
            EnsembleFactor::cue_real(&[1.0, 0.6, 0.3]),
            EnsembleFactor::cue_real(&[1.0, 0.5]),
            EnsembleFactor::cue_equal(3, 1.0),
            EnsembleFactor::ginibre(1.3, 1, 2),
            EnsembleFactor::ginibre(0.8, 2, 1),
        ]);
        let m = spec.validate().unwrap();
        let comp = Composition::new(&m);
        let sys = SingularSystem::new(&comp);
        let n = sys.dim;
        let x: Vec<C64> = (0..n).map(|k| C64::new(0.1 + 0.07 * k as f64, -0.05 * k as f64)).collect();
        let z = C64::new(2.0, 0.7);
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        let mut b = a.clone();
        sys.jacobian(&x, z, &mut a);
        Fd(&sys).jacobian(&x, z, &mut b);
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).norm() < 1e-6 * (1.0 + p.norm()), "{p} vs {q}");
        }
    }

    #[test]
    fn ginibre_support_edges() {
        let m = presets::ginibre(1.0).validate().unwrap();
        let s = singular_support(&m).unwrap();
        assert_eq!(s.lower, 0.0);
        assert!((s.upper - 4.0).abs() < 1e-12);
        assert!((s.m_upper - 1.0).abs() < 1e-6);
    }
}
