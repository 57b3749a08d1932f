//! Solvers for the master relations and the densities they determine.
//!
//! * [`solve_radial`] / [`radial_density`]: the real root `ℳ(R^2)` of
//!   `𝔑_X(ℳ) = R^2` and the radial eigenvalue density `d ℳ / d R`.
//! * [`singular_density`]: the physical root `M(x + i0)` of `N_{X†X}(M) = x`
//!   and the density `-Im G / π` with `G = (M + 1) / x`.
//! * [`domain_geometry`], [`singular_support`]: borderlines of both spectra.
//! * closed-form curves used as oracles ([`bures_closed_form`],
//!   [`t_example1_closed_form`]) and series-inverted moments.

mod grid;
mod moments;
mod oracles;
mod radial;
mod singular;

pub use grid::GridSpec;
pub use moments::singular_moments;
pub use oracles::{bures_closed_form, example_family_radii, scaling_relation_check, t_example1_closed_form, BURES_EDGE};
pub use radial::{domain_geometry, radial_density, radial_density_continued, radial_density_fd, solve_radial};
pub use singular::{singular_density, singular_density_at, singular_support};

use crate::model::{ModelError, SpectrumKind};
use crate::transforms::{SFactorState, TransformError};
use num_complex::Complex64 as C64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("no real root of the radial master relation at R = {r}")]
    NoRealRoot { r: f64 },
    #[error("continuation stalled near z = {at}")]
    ContinuationStall { at: C64 },
    #[error("no branch with nonpositive Im G at x = {x}")]
    NoUpperBranch { x: f64 },
    #[error("singular support degenerates to a point between x = {lo} and x = {hi}")]
    SupportEdgeAmbiguity { lo: f64, hi: f64 },
    #[error("radius {computed} disagrees with the closed form {closed_form}")]
    GeometryMismatch { computed: f64, closed_form: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("not applicable: {0}")]
    NotApplicable(&'static str),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadialSolution {
    pub r: f64,
    pub m_value: f64,
    pub factor_states: Vec<SFactorState>,
}

/// Eigenvalue domain: a disk (`r_int = 0`) or an annulus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DomainGeometry {
    pub r_ext: f64,
    pub r_int: f64,
    pub alpha: f64,
    pub d: Option<u32>,
}

/// Support `[lower, upper]` of the continuous part of the singular spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularSupport {
    pub lower: f64,
    pub upper: f64,
    /// `M` at the lower edge; `alpha - 1` when the support reaches zero.
    pub m_lower: f64,
    /// `M` at the upper edge; infinite for edges reached as `M -> infinity`.
    pub m_upper: f64,
    pub alpha: f64,
    pub d: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CurveGeometry {
    Radial(DomainGeometry),
    Singular(SingularSupport),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Diagnostic {
    /// The implicit derivative vanishes here, so the density diverges; the
    /// reported value is taken at the nearest resolvable point.
    DerivativeBlowup { index: usize, at: f64 },
    /// The real-axis Newton polish did not converge; the value comes from the
    /// offset `x + i eta` solution.
    PolishSkipped { index: usize, at: f64 },
    /// Mass of the continuous part differs from `1 - alpha`.
    Normalization { expected: f64, found: f64 },
}

impl Diagnostic {
    /// Whether the diagnostic invalidates the curve, as opposed to annotating it.
    pub fn is_failure(&self) -> bool {
        matches!(self, Diagnostic::Normalization { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityCurve {
    pub kind: SpectrumKind,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// `ℳ(R^2)` (real) or `M(x + i0)` per grid point.
    pub transform: Vec<C64>,
    pub geometry: CurveGeometry,
    pub diagnostics: Vec<Diagnostic>,
    /// Relative imaginary offset used before the real-axis polish (singular
    /// curves only).
    pub imag_offset: f64,
}

impl DensityCurve {
    pub fn is_flagged(&self) -> bool {
        self.diagnostics.iter().any(Diagnostic::is_failure)
    }
}

/// Predicted log-log slope of the density near zero for a zero of order `d`
/// at the base point. For singular spectra with zero modes the `(M + 1)`
/// prefactor no longer vanishes there, which lowers the order by one.
pub fn predicted_slope(kind: SpectrumKind, d: u32, alpha: f64) -> f64 {
    let d = d as f64;
    match kind {
        SpectrumKind::Eigenvalue => -(d - 2.0) / d,
        SpectrumKind::Singular if alpha > 0.0 => -(d - 1.0) / d,
        SpectrumKind::Singular => -d / (d + 1.0),
    }
}

fn check_grid(grid: &[f64], allow_zero: bool) -> Result<(), SolverError> {
    for (i, &g) in grid.iter().enumerate() {
        if !g.is_finite() || g < 0.0 || (!allow_zero && g == 0.0) {
            return Err(SolverError::InvalidGrid(format!("point {i} = {g} is not admissible")));
        }
    }
    Ok(())
}
