//! Rotationally-symmetric N-transforms of the individual factors and their
//! composition into the model-level master relations.
//!
//! Every factor of a validated model is an "atom" evaluated at the rescaled
//! argument `u = M / s`, where `s` is the factor's row ratio relative to the
//! final column dimension. For the eigenvalue problem
//! `𝔑_X(M) = prod_atoms v(M / s)`; for the singular-value problem
//! `N_{X†X}(M) = (M + 1) / M * prod_atoms v(M / s)`.
//!
//! Multi-valued factors (two or more unequal weights) are always evaluated on
//! the branch continued from the trivial anchor at `u = 0`.

use crate::continuation::{self, System};
use crate::model::{example_form, ratio_to_f64, EnsembleFactor, ExampleForm, ModelError, ValidatedModel};
use crate::numeric::safeguarded_newton;
use num_complex::Complex64 as C64;

/// Minimum distance to a pole before evaluation is refused.
pub const POLE_GUARD: f64 = 1e-9;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransformError {
    #[error("argument {at} is within {POLE_GUARD:e} of a pole")]
    PoleHit { at: C64 },
    #[error("branch of the two-weight transform lost while continuing to {at}")]
    BranchLoss { at: C64 },
    #[error("continuation stalled near {at}")]
    ContinuationStall { at: C64 },
    #[error("solution branches collide near {at}")]
    BranchCollision { at: C64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Auxiliary unknowns of a CUE-sum factor: `M_l(M_l + 1) = -C |w_l|^2`,
/// `sum_l M_l = M`.
#[derive(Clone, Debug, PartialEq)]
pub struct SFactorState {
    pub c: C64,
    pub m_l: Vec<C64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransformValue {
    pub value: C64,
    pub argument: C64,
    pub factor_states: Vec<SFactorState>,
}

/// `|w|^2 (m + 1) / (m / L + 1)`.
pub fn n_cue_equal_weights(m: C64, l: usize, w: C64) -> Result<C64, TransformError> {
    let lf = l as f64;
    if (m + lf).norm() < POLE_GUARD {
        return Err(TransformError::PoleHit { at: m });
    }
    Ok(w.norm_sqr() * (m + 1.0) / (m / lf + 1.0))
}

/// Physical root of `(m+2) N^2 - (a+b)(m+1) N + m a b = 0` with
/// `a = (|w1|+|w2|)^2`, `b = (|w1|-|w2|)^2`.
pub fn n_cue_two_weights(m: C64, w1: C64, w2: C64) -> Result<C64, TransformError> {
    TwoWeights::new(w1.norm(), w2.norm()).eval(m)
}

/// General CUE sum, solved on the branch continued from `m = 0`
/// (`C = 0`, all `M_l = 0`).
pub fn n_cue_general(m: C64, weights: &[C64]) -> Result<TransformValue, TransformError> {
    let g = GeneralWeights::new(weights);
    let aux = g.solve(m)?;
    let value = g.value(&aux);
    Ok(TransformValue {
        value,
        argument: m,
        factor_states: vec![g.state(&aux)],
    })
}

/// Product of rectangular Ginibre matrices `A_1 ... A_K` with
/// `r_k = N_k / N_{K+1}` and total scale `sigma = prod sigma_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct GinibreChain {
    pub sigma: f64,
    pub ratios: Vec<f64>,
}

impl GinibreChain {
    /// From per-factor scales and integer dimensions `N_1, ..., N_{K+1}`.
    pub fn from_dims(sigmas: &[f64], dims: &[i64]) -> Self {
        let last = *dims.last().expect("non-empty dims") as f64;
        GinibreChain {
            sigma: sigmas.iter().product(),
            ratios: dims[..dims.len() - 1].iter().map(|&d| d as f64 / last).collect(),
        }
    }
}

/// `N_{P†P}(m) = sigma^2 sqrt(r_1) (m + 1) / m * prod_k (m / r_k + 1)`.
pub fn n_ginibre_chain(m: C64, chain: &GinibreChain) -> Result<C64, TransformError> {
    if m.norm() < POLE_GUARD {
        return Err(TransformError::PoleHit { at: m });
    }
    let mut v = chain.sigma * chain.sigma * chain.ratios[0].sqrt() * (m + 1.0) / m;
    for &r in &chain.ratios {
        v *= m / r + 1.0;
    }
    Ok(v)
}

/// `𝔑_X(m)` for a square model.
pub fn compose_eigen(m: C64, model: &ValidatedModel) -> Result<C64, TransformError> {
    model.require_square()?;
    Composition::new(model).product(m)
}

/// `N_{X†X}(M)` including the `(M + 1) / M` prefactor.
pub fn compose_singular(mm: C64, model: &ValidatedModel) -> Result<C64, TransformError> {
    Composition::new(model).singular(mm)
}

// ---------------------------------------------------------------------------
// two weights

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct TwoWeights {
    pub a: f64,
    pub b: f64,
}

impl TwoWeights {
    pub fn new(m1: f64, m2: f64) -> Self {
        TwoWeights {
            a: (m1 + m2) * (m1 + m2),
            b: (m1 - m2) * (m1 - m2),
        }
    }

    pub fn anchor(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn residual(&self, u: C64, y: C64) -> C64 {
        (u + 2.0) * y * y - (self.a + self.b) * (u + 1.0) * y + u * self.a * self.b
    }

    /// Both roots, the first being the `+` sign of the square root.
    fn roots(&self, u: C64) -> (C64, C64) {
        let qa = u + 2.0;
        let qb = -(self.a + self.b) * (u + 1.0);
        let qc = u * self.a * self.b;
        let disc = (qb * qb - 4.0 * qa * qc).sqrt();
        if qa.norm() < POLE_GUARD {
            // degenerate to linear: one finite root
            let lin = -qc / qb;
            return (lin, C64::new(f64::INFINITY, 0.0));
        }
        let plus = (-qb + disc) / (2.0 * qa);
        let minus = (-qb - disc) / (2.0 * qa);
        (plus, minus)
    }

    /// Real branch on `u >= -1`, with derivative.
    pub fn real(&self, u: f64) -> (f64, f64) {
        let s = self.a + self.b;
        let qa = u + 2.0;
        let disc = (s * s * (u + 1.0) * (u + 1.0) - 4.0 * u * qa * self.a * self.b).max(0.0);
        let y = (s * (u + 1.0) + disc.sqrt()) / (2.0 * qa);
        // implicit derivative of the quadratic
        let qu = y * y - s * y + self.a * self.b;
        let qy = 2.0 * qa * y - s * (u + 1.0);
        let dy = if qy != 0.0 { -qu / qy } else { f64::INFINITY };
        (y, dy)
    }

    pub fn eval(&self, m: C64) -> Result<C64, TransformError> {
        if m.im == 0.0 && m.re >= -1.0 {
            return Ok(C64::new(self.real(m.re).0, 0.0));
        }
        // continuity along the straight segment from the anchor
        let mut y = C64::new(self.anchor(), 0.0);
        let mut t = 0.0f64;
        let mut h = 1.0f64 / 16.0;
        while t < 1.0 {
            let step = h.min(1.0 - t);
            let u = m * (t + step);
            let (r1, r2) = self.roots(u);
            let (d1, d2) = ((r1 - y).norm(), (r2 - y).norm());
            let sep = (r1 - r2).norm();
            let (near, dn) = if d1 <= d2 { (r1, d1) } else { (r2, d2) };
            if dn <= 0.25 * sep || sep <= 1e-12 * (1.0 + near.norm()) && dn <= 1e-6 * (1.0 + near.norm()) {
                y = near;
                t += step;
                h = (2.0 * step).min(0.25);
            } else {
                h = 0.5 * step;
                if h < 1e-12 {
                    return Err(TransformError::BranchLoss { at: m * t });
                }
            }
        }
        Ok(y)
    }
}

// ---------------------------------------------------------------------------
// general weights

/// CUE sum with arbitrary weights, parameterized by `p = M_1`, the auxiliary
/// unknown of the largest-modulus weight. With `rho_l = |w_l|^2 / |w_1|^2`,
/// every other `M_l` solves `M_l (M_l + 1) = rho_l p (p + 1)` on its
/// principal branch, and with `S = sum_{l>=2} rho_l / (M_l + 1)`:
/// `m = p (1 + (p+1) S)`, `m + 1 = (p+1)(1 + p S)`,
/// `N = |w_1|^2 (1 + (p+1) S)(1 + p S)`.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct GeneralWeights {
    pub w1sq: f64,
    /// `rho_l` for the remaining weights, in the order of `order[1..]`.
    pub rho: Vec<f64>,
    /// Original indices, largest modulus first.
    pub order: Vec<usize>,
}

impl GeneralWeights {
    pub fn new(weights: &[C64]) -> Self {
        let mut order: Vec<usize> = (0..weights.len()).collect();
        order.sort_by(|&i, &j| weights[j].norm().partial_cmp(&weights[i].norm()).unwrap_or(std::cmp::Ordering::Equal));
        let w1sq = weights[order[0]].norm_sqr();
        let rho = order[1..].iter().map(|&i| (weights[i].norm_sqr() / w1sq).min(1.0)).collect();
        GeneralWeights { w1sq, rho, order }
    }

    pub fn len(&self) -> usize {
        self.rho.len() + 1
    }

    fn m_l(rho: f64, q: f64) -> f64 {
        // q = p (p + 1); stable form of (-1 + sqrt(1 + 4 rho q)) / 2
        let disc = (1.0 + 4.0 * rho * q).max(0.0);
        2.0 * rho * q / (1.0 + disc.sqrt())
    }

    /// Returns `(m, dm/dp, N, dN/dp)` at real `p`.
    fn at_p(&self, p: f64) -> (f64, f64, f64, f64) {
        let q = p * (p + 1.0);
        let mut s = 0.0;
        let mut ds = 0.0;
        let mut dm = 1.0;
        for &r in &self.rho {
            let ml = Self::m_l(r, q);
            let root = 2.0 * ml + 1.0;
            let dml = if root > 1e-12 { r * (2.0 * p + 1.0) / root } else { r.sqrt() };
            s += r / (ml + 1.0);
            ds -= r / ((ml + 1.0) * (ml + 1.0)) * dml;
            dm += dml;
        }
        let f1 = 1.0 + (p + 1.0) * s;
        let f2 = 1.0 + p * s;
        let m = p * f1;
        let n = self.w1sq * f1 * f2;
        let dn = self.w1sq * ((s + (p + 1.0) * ds) * f2 + f1 * (s + p * ds));
        (m, dm, n, dn)
    }

    /// Lower end of the physical real branch: the largest root of
    /// `1 + p S(p)` in `(-1, 0)` (disk case), otherwise `-1` (annulus case).
    fn p_lower(&self) -> f64 {
        let h = |p: f64| {
            let q = p * (p + 1.0);
            let s: f64 = self.rho.iter().map(|&r| r / (Self::m_l(r, q) + 1.0)).sum();
            1.0 + p * s
        };
        let n = 400;
        let mut prev = 0.0;
        for i in 1..=n {
            let p = -(i as f64) / n as f64;
            if h(p) <= 0.0 {
                return crate::numeric::bisect(h, prev, p, 1e-16);
            }
            prev = p;
        }
        -1.0
    }

    fn solve_p(&self, u: f64) -> Result<f64, TransformError> {
        let at = C64::new(u, 0.0);
        let (lo, hi) = if u >= 0.0 { (0.0, u.max(0.0)) } else { (self.p_lower(), 0.0) };
        if u < -1.0 - 1e-14 {
            return Err(TransformError::BranchCollision { at });
        }
        if u <= -1.0 {
            return Ok(lo);
        }
        let p = safeguarded_newton(
            |p| {
                let (m, dm, _, _) = self.at_p(p);
                Some((m - u, dm))
            },
            lo,
            hi,
            u.clamp(lo, hi),
            1e-16,
        )
        .ok_or(TransformError::BranchCollision { at })?;
        if self.at_p(p).1 <= 0.0 {
            return Err(TransformError::BranchCollision { at });
        }
        Ok(p)
    }

    /// Real branch for `u >= -1`: `(N, dN/du, p)`.
    pub fn real(&self, u: f64) -> Result<(f64, f64, f64), TransformError> {
        let p = self.solve_p(u)?;
        let (_, dm, n, dn) = self.at_p(p);
        Ok((n, dn / dm, p))
    }

    /// Auxiliary vector `[p, M_2, ..., M_L]` at real `p`.
    pub fn aux_at_p(&self, p: f64) -> Vec<C64> {
        let q = p * (p + 1.0);
        let mut v = vec![C64::new(p, 0.0)];
        v.extend(self.rho.iter().map(|&r| C64::new(Self::m_l(r, q), 0.0)));
        v
    }

    pub fn residual(&self, u: C64, aux: &[C64], out: &mut [C64]) {
        let p = aux[0];
        let q = p * (p + 1.0);
        out[0] = aux.iter().sum::<C64>() - u;
        for (l, &r) in self.rho.iter().enumerate() {
            let ml = aux[l + 1];
            out[l + 1] = ml * (ml + 1.0) - r * q;
        }
    }

    pub fn jacobian(&self, aux: &[C64], jac: &mut [C64]) {
        let n = self.len();
        jac.iter_mut().for_each(|v| *v = ZERO);
        for j in 0..n {
            jac[j] = C64::new(1.0, 0.0);
        }
        let p = aux[0];
        for (l, &r) in self.rho.iter().enumerate() {
            let row = (l + 1) * n;
            jac[row] = -r * (2.0 * p + 1.0);
            jac[row + l + 1] = 2.0 * aux[l + 1] + 1.0;
        }
    }

    pub fn value(&self, aux: &[C64]) -> C64 {
        let p = aux[0];
        let s: C64 = self.rho.iter().zip(&aux[1..]).map(|(&r, &ml)| r / (ml + 1.0)).sum();
        self.w1sq * (1.0 + (p + 1.0) * s) * (1.0 + p * s)
    }

    pub fn state(&self, aux: &[C64]) -> SFactorState {
        let p = aux[0];
        let mut m_l = vec![ZERO; self.len()];
        for (k, &idx) in self.order.iter().enumerate() {
            m_l[idx] = aux[k];
        }
        SFactorState {
            c: -p * (p + 1.0) / self.w1sq,
            m_l,
        }
    }

    /// Auxiliary vector at argument `m`, continued from the anchor.
    pub fn solve(&self, m: C64) -> Result<Vec<C64>, TransformError> {
        if m.im == 0.0 && m.re >= -1.0 {
            let p = self.solve_p(m.re)?;
            return Ok(self.aux_at_p(p));
        }
        let mut aux = vec![ZERO; self.len()];
        continuation::track(self, &mut aux, ZERO, m).map_err(|_| TransformError::ContinuationStall { at: m })?;
        Ok(aux)
    }
}

impl System for GeneralWeights {
    fn dim(&self) -> usize {
        self.len()
    }
    fn residual(&self, x: &[C64], t: C64, out: &mut [C64]) {
        GeneralWeights::residual(self, t, x, out)
    }
    fn jacobian(&self, x: &[C64], _t: C64, jac: &mut [C64]) {
        GeneralWeights::jacobian(self, x, jac)
    }
}

// ---------------------------------------------------------------------------
// atoms and composition

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum AtomKind {
    /// `coef (u + 1)`, with `coef = sigma^2 sqrt(rows / cols)`.
    Ginibre { coef: f64 },
    /// A single weighted unitary: `|w|^2`.
    Constant { value: f64 },
    /// `norm2 (u + 1) / (u / L + 1)`.
    Equal { norm2: f64, l: f64 },
    Two(TwoWeights),
    General(GeneralWeights),
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Atom {
    pub kind: AtomKind,
    /// Row ratio `s`; the atom is evaluated at `u = M / s`.
    pub scale: f64,
}

impl Atom {
    pub fn aux_len(&self) -> usize {
        match &self.kind {
            AtomKind::Two(_) => 1,
            AtomKind::General(g) => g.len(),
            _ => 0,
        }
    }

    pub fn anchor(&self, out: &mut [C64]) {
        match &self.kind {
            AtomKind::Two(t) => out[0] = C64::new(t.anchor(), 0.0),
            AtomKind::General(_) => out.iter_mut().for_each(|v| *v = ZERO),
            _ => {}
        }
    }

    /// Value split as numerator and denominator at `u` with auxiliaries.
    pub fn num_den(&self, u: C64, aux: &[C64]) -> (C64, C64) {
        let one = C64::new(1.0, 0.0);
        match &self.kind {
            AtomKind::Ginibre { coef } => (*coef * (u + 1.0), one),
            AtomKind::Constant { value } => (C64::new(*value, 0.0), one),
            AtomKind::Equal { norm2, l } => (*norm2 * (u + 1.0), u / *l + 1.0),
            AtomKind::Two(_) => (aux[0], one),
            AtomKind::General(g) => (g.value(aux), one),
        }
    }

    /// `(dn/du, dd/du)` of [`Atom::num_den`]; the numerator's gradient in the
    /// auxiliaries goes to `dn_daux`.
    pub fn num_den_partials(&self, aux: &[C64], dn_daux: &mut [C64]) -> (C64, C64) {
        match &self.kind {
            AtomKind::Ginibre { coef } => (C64::new(*coef, 0.0), ZERO),
            AtomKind::Constant { .. } => (ZERO, ZERO),
            AtomKind::Equal { norm2, l } => (C64::new(*norm2, 0.0), C64::new(1.0 / l, 0.0)),
            AtomKind::Two(_) => {
                dn_daux[0] = C64::new(1.0, 0.0);
                (ZERO, ZERO)
            }
            AtomKind::General(g) => {
                let p = aux[0];
                let s: C64 = g.rho.iter().zip(&aux[1..]).map(|(&r, &ml)| r / (ml + 1.0)).sum();
                let (f1, f2) = (1.0 + (p + 1.0) * s, 1.0 + p * s);
                dn_daux[0] = g.w1sq * s * (f1 + f2);
                let dn_ds = g.w1sq * ((p + 1.0) * f2 + p * f1);
                for (l, &r) in g.rho.iter().enumerate() {
                    let e = aux[l + 1] + 1.0;
                    dn_daux[l + 1] = -dn_ds * r / (e * e);
                }
                (ZERO, ZERO)
            }
        }
    }

    /// Partials of [`Atom::aux_residual`]: `d/du` into `dr_du`, and the
    /// row-major `d/daux` block into `dr_daux`.
    pub fn aux_partials(&self, u: C64, aux: &[C64], dr_du: &mut [C64], dr_daux: &mut [C64]) {
        match &self.kind {
            AtomKind::Two(t) => {
                let y = aux[0];
                dr_du[0] = y * y - (t.a + t.b) * y + t.a * t.b;
                dr_daux[0] = 2.0 * (u + 2.0) * y - (t.a + t.b) * (u + 1.0);
            }
            AtomKind::General(g) => {
                dr_du.iter_mut().for_each(|v| *v = ZERO);
                dr_du[0] = C64::new(-1.0, 0.0);
                g.jacobian(aux, dr_daux);
            }
            _ => {}
        }
    }

    pub fn aux_residual(&self, u: C64, aux: &[C64], out: &mut [C64]) {
        match &self.kind {
            AtomKind::Two(t) => out[0] = t.residual(u, aux[0]),
            AtomKind::General(g) => g.residual(u, aux, out),
            _ => {}
        }
    }

    /// Real value and `dv/du` on the physical branch, `u >= -1` for the
    /// multi-valued kinds.
    pub fn real(&self, u: f64) -> Result<(f64, f64), TransformError> {
        match &self.kind {
            AtomKind::Ginibre { coef } => Ok((coef * (u + 1.0), *coef)),
            AtomKind::Constant { value } => Ok((*value, 0.0)),
            AtomKind::Equal { norm2, l } => {
                let den = u / l + 1.0;
                if den.abs() < POLE_GUARD / l {
                    return Err(TransformError::PoleHit { at: C64::new(u, 0.0) });
                }
                Ok((norm2 * (u + 1.0) / den, norm2 * (1.0 - 1.0 / l) / (den * den)))
            }
            AtomKind::Two(t) => {
                if u < -1.0 - 1e-14 {
                    return Err(TransformError::BranchLoss { at: C64::new(u, 0.0) });
                }
                Ok(t.real(u.max(-1.0)))
            }
            AtomKind::General(g) => g.real(u).map(|(v, dv, _)| (v, dv)),
        }
    }

    pub fn complex(&self, u: C64) -> Result<C64, TransformError> {
        match &self.kind {
            AtomKind::Equal { l, .. } if (u + *l).norm() < POLE_GUARD => Err(TransformError::PoleHit { at: u }),
            AtomKind::Two(t) => t.eval(u),
            AtomKind::General(g) => Ok(g.value(&g.solve(u)?)),
            _ => {
                let (n, d) = self.num_den(u, &[]);
                Ok(n / d)
            }
        }
    }

    /// State for diagnostics at real `u`; only general sums carry one.
    pub fn state_real(&self, u: f64) -> Option<SFactorState> {
        match &self.kind {
            AtomKind::General(g) => g.solve_p(u).ok().map(|p| g.state(&g.aux_at_p(p))),
            _ => None,
        }
    }
}

/// The flat product of atoms for one validated model.
#[derive(Clone, Debug, PartialEq)]
pub struct Composition {
    pub(crate) atoms: Vec<Atom>,
    s1: crate::model::Rational,
}

impl Composition {
    pub fn new(model: &ValidatedModel) -> Self {
        let atoms = model
            .factors()
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let scale = ratio_to_f64(model.row_ratio(i));
                let kind = match f {
                    EnsembleFactor::Ginibre(_) => AtomKind::Ginibre {
                        coef: model.ginibre_coefficient(i).expect("ginibre factor").0,
                    },
                    EnsembleFactor::CueSum(c) => {
                        let norm2: f64 = c.weights.iter().map(|w| w.norm_sqr()).sum();
                        match example_form(c) {
                            _ if c.weights.len() == 1 => AtomKind::Constant { value: norm2 },
                            ExampleForm::EqualWeights => AtomKind::Equal {
                                norm2,
                                l: c.weights.len() as f64,
                            },
                            ExampleForm::TwoWeights => AtomKind::Two(TwoWeights::new(c.weights[0].norm(), c.weights[1].norm())),
                            ExampleForm::GeneralWeights => AtomKind::General(GeneralWeights::new(&c.weights)),
                        }
                    }
                };
                Atom { kind, scale }
            })
            .collect();
        Composition {
            atoms,
            s1: model.row_ratio(0),
        }
    }

    pub fn is_square(&self) -> bool {
        self.s1 == crate::model::Rational::from_integer(1)
    }

    /// `prod_atoms v(M / s)`, which is `𝔑_X(M)` for a square model.
    pub fn product(&self, m: C64) -> Result<C64, TransformError> {
        if m.im == 0.0 {
            if let Ok((v, _)) = self.real(m.re) {
                return Ok(C64::new(v, 0.0));
            }
        }
        let mut v = C64::new(1.0, 0.0);
        for a in &self.atoms {
            v *= a.complex(m / a.scale)?;
        }
        Ok(v)
    }

    /// Real product and its derivative in `M`, for `M` at or above the
    /// base point of every atom.
    pub fn real(&self, m: f64) -> Result<(f64, f64), TransformError> {
        let vals: Vec<(f64, f64)> = self
            .atoms
            .iter()
            .map(|a| a.real(m / a.scale).map(|(v, dv)| (v, dv / a.scale)))
            .collect::<Result<_, _>>()?;
        let value: f64 = vals.iter().map(|v| v.0).product();
        let mut deriv = 0.0;
        for i in 0..vals.len() {
            let mut term = vals[i].1;
            for (j, v) in vals.iter().enumerate() {
                if j != i {
                    term *= v.0;
                }
            }
            deriv += term;
        }
        Ok((value, deriv))
    }

    pub fn eigen(&self, m: C64) -> Result<C64, TransformError> {
        if !self.is_square() {
            return Err(TransformError::Model(ModelError::NotSquare { s1: self.s1 }));
        }
        self.product(m)
    }

    pub fn singular(&self, mm: C64) -> Result<C64, TransformError> {
        if mm.norm() < POLE_GUARD {
            return Err(TransformError::PoleHit { at: mm });
        }
        Ok((mm + 1.0) / mm * self.product(mm)?)
    }

    /// Diagnostic states of the general-weight sums at real `M`.
    pub fn states_real(&self, m: f64) -> Vec<SFactorState> {
        self.atoms.iter().filter_map(|a| a.state_real(m / a.scale)).collect()
    }
}
