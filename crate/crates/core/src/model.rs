//! Model specifications for generalized Bures products.
//!
//! A model is an ordered product of factors. Each factor is either a weighted
//! sum of independent Haar unitaries (`CueSumFactor`) or a rectangular Ginibre
//! matrix (`GinibreFactor`). Dimensions are carried as exact rationals and,
//! after validation, normalized so that the last column dimension equals one.

use num_complex::Complex64;
use num_rational::Ratio;
use std::fmt;

/// Exact dimension ratio.
pub type Rational = Ratio<i64>;

/// Relative tolerance used when comparing absolute values of weights.
pub const WEIGHT_TIE_RTOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct CueSumFactor {
    pub weights: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GinibreFactor {
    pub sigma: f64,
    pub rows: Rational,
    pub cols: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EnsembleFactor {
    CueSum(CueSumFactor),
    Ginibre(GinibreFactor),
}

impl EnsembleFactor {
    pub fn cue(weights: Vec<Complex64>) -> Self {
        EnsembleFactor::CueSum(CueSumFactor { weights })
    }

    /// Real positive weights.
    pub fn cue_real(weights: &[f64]) -> Self {
        Self::cue(weights.iter().map(|&w| Complex64::new(w, 0.0)).collect())
    }

    /// `L` equal weights `w / sqrt(L)`, so that the sum of |w_l|^2 is |w|^2.
    pub fn cue_equal(l: usize, w: f64) -> Self {
        Self::cue_real(&vec![w / (l as f64).sqrt(); l])
    }

    pub fn ginibre(sigma: f64, rows: i64, cols: i64) -> Self {
        EnsembleFactor::Ginibre(GinibreFactor {
            sigma,
            rows: Rational::from_integer(rows),
            cols: Rational::from_integer(cols),
        })
    }

    pub fn is_cue(&self) -> bool {
        matches!(self, EnsembleFactor::CueSum(_))
    }
}

/// Ordered product `X = F_1 F_2 ... F_n`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ModelSpec {
    pub factors: Vec<EnsembleFactor>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpectrumKind {
    Eigenvalue,
    Singular,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("model has no factors")]
    EmptyModel,
    #[error("factor {index}: row dimension {found} does not match the preceding column dimension {expected}")]
    DimensionMismatch {
        index: usize,
        expected: Rational,
        found: Rational,
    },
    #[error("factor {index}: {what} must be positive and finite")]
    NonPositiveScale { index: usize, what: &'static str },
    #[error("factor {index}: {reason}")]
    InvalidWeights { index: usize, reason: &'static str },
    #[error("eigenvalue queries need a square product, but the outer row ratio is {s1}")]
    NotSquare { s1: Rational },
    #[error("divergence exponent not applicable: the spectral domain does not reach zero")]
    NotApplicable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelTag {
    S,
    P,
    T,
    W,
    V,
    GeneralChain,
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelTag::S => "S",
            ModelTag::P => "P",
            ModelTag::T => "T",
            ModelTag::W => "W",
            ModelTag::V => "V",
            ModelTag::GeneralChain => "GeneralChain",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExampleForm {
    /// All |w_l| equal (includes L = 1).
    EqualWeights,
    /// L = 2 with unequal moduli.
    TwoWeights,
    /// L >= 3 with unequal moduli.
    GeneralWeights,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelClass {
    pub tag: ModelTag,
    /// One entry per CUE-sum factor, in product order.
    pub example_forms: Vec<ExampleForm>,
}

fn close_rel(a: f64, b: f64) -> bool {
    (a - b).abs() <= WEIGHT_TIE_RTOL * a.abs().max(b.abs())
}

pub fn example_form(factor: &CueSumFactor) -> ExampleForm {
    let mods: Vec<f64> = factor.weights.iter().map(|w| w.norm()).collect();
    let first = mods[0];
    if mods.iter().all(|&m| close_rel(m, first)) {
        ExampleForm::EqualWeights
    } else if mods.len() == 2 {
        ExampleForm::TwoWeights
    } else {
        ExampleForm::GeneralWeights
    }
}

/// Classifies a specification by the pattern of its factor kinds.
///
/// `C` stands for a CUE sum and `G` for a Ginibre factor:
/// `C` is S, `C C+` is T, `G+` is P, `C+ G+` is W, `(C+ G+){2,}` is V.
/// Anything else is a general chain.
pub fn classify(spec: &ModelSpec) -> ModelClass {
    let example_forms = spec
        .factors
        .iter()
        .filter_map(|f| match f {
            EnsembleFactor::CueSum(c) if !c.weights.is_empty() => Some(example_form(c)),
            EnsembleFactor::CueSum(_) => Some(ExampleForm::GeneralWeights),
            EnsembleFactor::Ginibre(_) => None,
        })
        .collect();
    ModelClass {
        tag: tag_of(&spec.factors),
        example_forms,
    }
}

fn tag_of(factors: &[EnsembleFactor]) -> ModelTag {
    if factors.is_empty() {
        return ModelTag::GeneralChain;
    }
    // run-length encode the kind sequence
    let mut runs: Vec<(bool, usize)> = Vec::new();
    for f in factors {
        let c = f.is_cue();
        match runs.last_mut() {
            Some((k, n)) if *k == c => *n += 1,
            _ => runs.push((c, 1)),
        }
    }
    match runs.as_slice() {
        [(true, 1)] => ModelTag::S,
        [(true, _)] => ModelTag::T,
        [(false, _)] => ModelTag::P,
        [(true, _), (false, _)] => ModelTag::W,
        _ if runs.len() % 2 == 0 && runs.len() >= 4 && runs[0].0 => ModelTag::V,
        _ => ModelTag::GeneralChain,
    }
}

impl ModelSpec {
    pub fn new(factors: Vec<EnsembleFactor>) -> Self {
        ModelSpec { factors }
    }

    pub fn validate(&self) -> Result<ValidatedModel, ModelError> {
        validate(self)
    }

    /// Canonical representative with the same spectra: weight phases dropped,
    /// weights sorted by decreasing modulus, equal-modulus sums made exactly
    /// equal. Ginibre factors are left untouched.
    pub fn normalized(&self) -> ModelSpec {
        let factors = self
            .factors
            .iter()
            .map(|f| match f {
                EnsembleFactor::CueSum(c) if !c.weights.is_empty() => {
                    let mut mods: Vec<f64> = c.weights.iter().map(|w| w.norm()).collect();
                    if example_form(c) == ExampleForm::EqualWeights {
                        let total: f64 = mods.iter().map(|m| m * m).sum();
                        let each = (total / mods.len() as f64).sqrt();
                        mods.iter_mut().for_each(|m| *m = each);
                    }
                    mods.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
                    EnsembleFactor::cue_real(&mods)
                }
                other => other.clone(),
            })
            .collect();
        ModelSpec { factors }
    }
}

/// A model whose dimension chain has been checked and normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedModel {
    spec: ModelSpec,
    /// `chain[i]` is the row ratio of factor `i`; `chain[n]` (the last column) is 1.
    chain: Vec<Rational>,
    class: ModelClass,
}

pub fn validate(spec: &ModelSpec) -> Result<ValidatedModel, ModelError> {
    if spec.factors.is_empty() {
        return Err(ModelError::EmptyModel);
    }
    for (index, f) in spec.factors.iter().enumerate() {
        match f {
            EnsembleFactor::CueSum(c) => {
                if c.weights.is_empty() {
                    return Err(ModelError::InvalidWeights { index, reason: "no weights given" });
                }
                if c.weights.iter().any(|w| !w.re.is_finite() || !w.im.is_finite()) {
                    return Err(ModelError::InvalidWeights { index, reason: "weights must be finite" });
                }
                if c.weights.iter().all(|w| w.norm() == 0.0) {
                    return Err(ModelError::InvalidWeights { index, reason: "at least one weight must be nonzero" });
                }
            }
            EnsembleFactor::Ginibre(g) => {
                if !(g.sigma > 0.0) || !g.sigma.is_finite() {
                    return Err(ModelError::NonPositiveScale { index, what: "sigma" });
                }
                if g.rows <= Rational::from_integer(0) {
                    return Err(ModelError::NonPositiveScale { index, what: "rows" });
                }
                if g.cols <= Rational::from_integer(0) {
                    return Err(ModelError::NonPositiveScale { index, what: "cols" });
                }
            }
        }
    }

    // CUE sums are square; a leading run takes the rows of the first Ginibre.
    let first_rows = spec
        .factors
        .iter()
        .find_map(|f| match f {
            EnsembleFactor::Ginibre(g) => Some(g.rows),
            _ => None,
        })
        .unwrap_or_else(|| Rational::from_integer(1));
    let mut raw = Vec::with_capacity(spec.factors.len() + 1);
    let mut current = first_rows;
    for (index, f) in spec.factors.iter().enumerate() {
        match f {
            EnsembleFactor::CueSum(_) => raw.push(current),
            EnsembleFactor::Ginibre(g) => {
                if g.rows != current {
                    return Err(ModelError::DimensionMismatch {
                        index,
                        expected: current,
                        found: g.rows,
                    });
                }
                raw.push(current);
                current = g.cols;
            }
        }
    }
    raw.push(current);
    let last = current;
    let chain = raw.into_iter().map(|d| d / last).collect();
    Ok(ValidatedModel {
        spec: spec.clone(),
        chain,
        class: classify(spec),
    })
}

impl ValidatedModel {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn factors(&self) -> &[EnsembleFactor] {
        &self.spec.factors
    }

    pub fn class(&self) -> &ModelClass {
        &self.class
    }

    /// Dimension chain `s_1, ..., s_{n+1}` relative to the final column size.
    pub fn dimension_chain(&self) -> &[Rational] {
        &self.chain
    }

    pub fn row_ratio(&self, index: usize) -> Rational {
        self.chain[index]
    }

    pub fn col_ratio(&self, index: usize) -> Rational {
        self.chain[index + 1]
    }

    pub fn is_square(&self) -> bool {
        self.chain[0] == Rational::from_integer(1)
    }

    pub fn require_square(&self) -> Result<(), ModelError> {
        if self.is_square() {
            Ok(())
        } else {
            Err(ModelError::NotSquare { s1: self.chain[0] })
        }
    }

    /// Smallest ratio along the chain, including both outer dimensions.
    pub fn min_ratio(&self) -> Rational {
        *self.chain.iter().min().expect("chain is never empty")
    }

    /// Exact zero-mode fraction `alpha = 1 - min(ratio)`, floored at zero.
    pub fn zero_mode_fraction_exact(&self) -> Rational {
        let one = Rational::from_integer(1);
        let m = self.min_ratio();
        if m >= one {
            Rational::from_integer(0)
        } else {
            one - m
        }
    }

    pub fn zero_mode_fraction(&self) -> f64 {
        ratio_to_f64(self.zero_mode_fraction_exact())
    }

    /// Number of structural zeros of the spectrum at outer size `n`
    /// (the outer column dimension), from the rank bound of the chain.
    pub fn structural_zero_count(&self, n_outer: usize) -> usize {
        let rank = self.min_ratio() * Rational::from_integer(n_outer as i64);
        let rank = rank.floor().to_integer().max(0) as usize;
        n_outer.saturating_sub(rank)
    }

    /// Integer dimensions `T_i * n` of the chain, if they are all integral.
    pub fn integer_dimensions(&self, n_outer: usize) -> Option<Vec<usize>> {
        self.chain
            .iter()
            .map(|r| {
                let d = *r * Rational::from_integer(n_outer as i64);
                if d.is_integer() && d.to_integer() > 0 {
                    Some(d.to_integer() as usize)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Order `d` of the zero of the master relation at the base point
    /// `alpha - 1`, which fixes the small-argument power laws of the densities.
    ///
    /// A factor contributes when its row ratio equals the chain minimum and its
    /// transform vanishes there: every Ginibre factor, and every CUE sum with at
    /// least two equal-modulus weights. Returns `Ok(None)` when a general-weight
    /// sum sits at the minimum ratio (no closed form for its order).
    pub fn divergence_exponent(&self, kind: SpectrumKind) -> Result<Option<u32>, ModelError> {
        if kind == SpectrumKind::Eigenvalue {
            self.require_square()?;
        }
        let s_min = self.min_ratio();
        let mut d = 0u32;
        for (i, f) in self.spec.factors.iter().enumerate() {
            if self.chain[i] != s_min {
                continue;
            }
            match f {
                EnsembleFactor::Ginibre(_) => d += 1,
                EnsembleFactor::CueSum(c) => match example_form(c) {
                    ExampleForm::EqualWeights if c.weights.len() >= 2 => d += 1,
                    ExampleForm::EqualWeights | ExampleForm::TwoWeights => {}
                    ExampleForm::GeneralWeights => return Ok(None),
                },
            }
        }
        if d == 0 {
            Err(ModelError::NotApplicable)
        } else {
            Ok(Some(d))
        }
    }

    /// Pure-Ginibre sub-chain description for factor `index`:
    /// `sigma^2 * sqrt(rows / cols)` and the row ratio.
    pub fn ginibre_coefficient(&self, index: usize) -> Option<(f64, f64)> {
        match &self.spec.factors[index] {
            EnsembleFactor::Ginibre(g) => {
                let r = ratio_to_f64(self.row_ratio(index) / self.col_ratio(index));
                Some((g.sigma * g.sigma * r.sqrt(), ratio_to_f64(self.row_ratio(index))))
            }
            _ => None,
        }
    }
}

pub fn ratio_to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Ready-made specifications for the example families.
pub mod presets {
    use super::*;

    /// One CUE sum of two weights `1/sqrt(2)` times a square Ginibre with sigma = 1.
    pub fn bures() -> ModelSpec {
        ModelSpec::new(vec![EnsembleFactor::cue_equal(2, 1.0), EnsembleFactor::ginibre(1.0, 1, 1)])
    }

    /// `J` CUE sums of `L` equal weights whose total weights multiply to `w`.
    pub fn t_example1(j: usize, l: usize, w: f64) -> ModelSpec {
        let each = w.abs().powf(1.0 / j as f64);
        ModelSpec::new((0..j).map(|_| EnsembleFactor::cue_equal(l, each)).collect())
    }

    /// CUE sums with two weights each.
    pub fn t_example2(pairs: &[(f64, f64)]) -> ModelSpec {
        ModelSpec::new(pairs.iter().map(|&(a, b)| EnsembleFactor::cue_real(&[a, b])).collect())
    }

    /// CUE sums followed by a Ginibre chain with integer dimensions
    /// `dims[0] x dims[1] x ... x dims[K]`.
    pub fn w_model(cues: Vec<EnsembleFactor>, sigmas: &[f64], dims: &[i64]) -> ModelSpec {
        assert_eq!(sigmas.len() + 1, dims.len());
        let mut factors = cues;
        for (k, &s) in sigmas.iter().enumerate() {
            factors.push(EnsembleFactor::ginibre(s, dims[k], dims[k + 1]));
        }
        ModelSpec::new(factors)
    }

    /// Single square Ginibre.
    pub fn ginibre(sigma: f64) -> ModelSpec {
        ModelSpec::new(vec![EnsembleFactor::ginibre(sigma, 1, 1)])
    }

    /// Single CUE matrix (one weight).
    pub fn single_cue(w: f64) -> ModelSpec {
        ModelSpec::new(vec![EnsembleFactor::cue_real(&[w])])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use presets::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn single_equal_sum_is_square() {
        let m = ModelSpec::new(vec![EnsembleFactor::cue_equal(2, 1.0)]).validate().unwrap();
        assert!(m.is_square());
        assert_eq!(m.row_ratio(0), q(1, 1));
        assert_eq!(m.class().tag, ModelTag::S);
    }

    #[test]
    fn mismatched_chain_is_rejected() {
        let spec = ModelSpec::new(vec![EnsembleFactor::ginibre(1.0, 1, 2), EnsembleFactor::ginibre(1.0, 3, 1)]);
        assert!(matches!(spec.validate(), Err(ModelError::DimensionMismatch { index: 1, .. })));
    }

    #[test]
    fn empty_and_bad_scales() {
        assert_eq!(ModelSpec::default().validate(), Err(ModelError::EmptyModel));
        let spec = ModelSpec::new(vec![EnsembleFactor::ginibre(0.0, 1, 1)]);
        assert!(matches!(spec.validate(), Err(ModelError::NonPositiveScale { .. })));
        let spec = ModelSpec::new(vec![EnsembleFactor::cue_real(&[0.0, 0.0])]);
        assert!(matches!(spec.validate(), Err(ModelError::InvalidWeights { .. })));
    }

    #[test]
    fn bures_is_w_with_unit_ratio() {
        let m = bures().validate().unwrap();
        assert!(m.is_square());
        assert_eq!(m.class().tag, ModelTag::W);
        assert_eq!(m.class().example_forms, vec![ExampleForm::EqualWeights]);
        assert_eq!(m.zero_mode_fraction(), 0.0);
        assert_eq!(m.divergence_exponent(SpectrumKind::Eigenvalue), Ok(Some(2)));
        assert_eq!(m.divergence_exponent(SpectrumKind::Singular), Ok(Some(2)));
    }

    #[test]
    fn bottleneck_gives_half_zero_modes() {
        // r = (1, 1/2, 1) relative to the outer size
        let spec = w_model(vec![EnsembleFactor::cue_equal(2, 1.0)], &[1.0, 1.0], &[2, 1, 2]);
        let m = spec.validate().unwrap();
        assert_eq!(m.zero_mode_fraction_exact(), q(1, 2));
        assert_eq!(m.structural_zero_count(512), 256);
    }

    #[test]
    fn t_divergence_and_annulus() {
        let m = t_example1(3, 2, 1.0).validate().unwrap();
        assert_eq!(m.divergence_exponent(SpectrumKind::Eigenvalue), Ok(Some(3)));
        let m = t_example2(&[(1.0, 0.5)]).validate().unwrap();
        assert_eq!(m.divergence_exponent(SpectrumKind::Eigenvalue), Err(ModelError::NotApplicable));
        let m = ModelSpec::new(vec![EnsembleFactor::cue_real(&[1.0, 0.5, 0.25])]).validate().unwrap();
        assert_eq!(m.divergence_exponent(SpectrumKind::Eigenvalue), Ok(None));
    }

    #[test]
    fn tags() {
        let c = || EnsembleFactor::cue_equal(2, 1.0);
        let g = |r, c| EnsembleFactor::ginibre(1.0, r, c);
        assert_eq!(classify(&ModelSpec::new(vec![c(), c()])).tag, ModelTag::T);
        assert_eq!(classify(&ModelSpec::new(vec![g(1, 1), g(1, 1)])).tag, ModelTag::P);
        assert_eq!(classify(&ModelSpec::new(vec![c(), g(1, 1), c(), g(1, 1)])).tag, ModelTag::V);
        assert_eq!(classify(&ModelSpec::new(vec![g(1, 1), c()])).tag, ModelTag::GeneralChain);
        assert_eq!(classify(&ModelSpec::new(vec![c(), g(1, 1), c()])).tag, ModelTag::GeneralChain);
    }

    #[test]
    fn leading_cue_takes_first_ginibre_rows() {
        let spec = ModelSpec::new(vec![
            EnsembleFactor::cue_equal(2, 1.0),
            EnsembleFactor::ginibre(1.0, 3, 6),
            EnsembleFactor::cue_equal(3, 1.0),
            EnsembleFactor::ginibre(1.0, 6, 3),
        ]);
        let m = spec.validate().unwrap();
        assert_eq!(m.dimension_chain(), &[q(1, 1), q(1, 1), q(2, 1), q(2, 1), q(1, 1)]);
        assert_eq!(m.class().tag, ModelTag::V);
    }
}
