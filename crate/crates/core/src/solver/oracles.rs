use super::{solve_radial, SolverError};
use crate::model::{example_form, EnsembleFactor, ExampleForm, ModelSpec, ModelTag, ValidatedModel};

/// Upper edge of the Bures singular-value support, `3 sqrt(3)`.
pub const BURES_EDGE: f64 = 5.196_152_422_706_632;

/// Closed-form Bures density
/// `(1 / (4 sqrt(3) pi)) [(b/x + sqrt(b^2/x^2 - 1))^(2/3) - (b/x - sqrt(b^2/x^2 - 1))^(2/3)]`
/// with `b = 3 sqrt(3)`, zero outside `(0, b]`.
pub fn bures_closed_form(x: f64) -> f64 {
    if !(x > 0.0) {
        return if x == 0.0 { f64::INFINITY } else { 0.0 };
    }
    if x >= BURES_EDGE {
        return 0.0;
    }
    let t = BURES_EDGE / x;
    let s = (t * t - 1.0).sqrt();
    // t - s = 1 / (t + s) avoids cancellation for small x
    let hi = t + s;
    let lo = 1.0 / hi;
    (hi.powf(2.0 / 3.0) - lo.powf(2.0 / 3.0)) / (4.0 * 3f64.sqrt() * std::f64::consts::PI)
}

/// Radial density of `J` identical factors, each a sum of `L` equal-modulus
/// unitaries with total weight `|w|^(2/J)`:
///
/// `rho(R) = (2/J)(1 - 1/L) R^(2/J - 1) c / (c - R^(2/J) / L)^2`, `c = |w|^(2/J)`,
///
/// on `0 <= R <= |w|` and zero beyond.
pub fn t_example1_closed_form(r: f64, j: usize, l: usize, w: f64) -> f64 {
    let w = w.abs();
    if r > w || r < 0.0 {
        return 0.0;
    }
    let jf = j as f64;
    let c = w.powf(2.0 / jf);
    let y = r.powf(2.0 / jf);
    let den = c - y / l as f64;
    (2.0 / jf) * (1.0 - 1.0 / l as f64) * r.powf(2.0 / jf - 1.0) * c / (den * den)
}

fn cue_weight2(f: &EnsembleFactor) -> f64 {
    match f {
        EnsembleFactor::CueSum(c) => c.weights.iter().map(|w| w.norm_sqr()).sum(),
        EnsembleFactor::Ginibre(g) => g.sigma * g.sigma,
    }
}

/// Closed-form radii `(R_ext, R_int)` of the example families, when the model
/// is square and belongs to one of them.
///
/// * products of Ginibre matrices: `R_ext^2 = prod sigma^2`, `R_int = 0`;
/// * products of CUE sums: `R_ext^2 = prod sum |w|^2`, and `R_int^2` the
///   product of `0` (equal moduli, `L >= 2`), `|w|^2` (`L = 1`) or
///   `||w_1|^2 - |w_2|^2|` (two weights);
/// * mixed chains: `R_ext^2 = prod sigma^2 prod sum |w|^2`, `R_int = 0`.
///
/// General-weight sums in a pure CUE product have no closed inner radius and
/// yield `None`.
pub fn example_family_radii(model: &ValidatedModel) -> Option<(f64, f64)> {
    if !model.is_square() {
        return None;
    }
    let ext2: f64 = model.factors().iter().map(cue_weight2).product();
    match model.class().tag {
        ModelTag::P | ModelTag::W | ModelTag::V => Some((ext2.sqrt(), 0.0)),
        ModelTag::S | ModelTag::T => {
            let mut int2 = 1.0;
            for f in model.factors() {
                let EnsembleFactor::CueSum(c) = f else { return None };
                int2 *= match example_form(c) {
                    _ if c.weights.len() == 1 => c.weights[0].norm_sqr(),
                    ExampleForm::EqualWeights => 0.0,
                    ExampleForm::TwoWeights => (c.weights[0].norm_sqr() - c.weights[1].norm_sqr()).abs(),
                    ExampleForm::GeneralWeights => return None,
                };
            }
            Some((ext2.sqrt(), int2.sqrt()))
        }
        ModelTag::GeneralChain => None,
    }
}

/// `|ℳ_T(R^2) - ℳ_S(R^(2/J))|` for a product of `J` identical CUE sums,
/// from two independent radial solves.
pub fn scaling_relation_check(model: &ValidatedModel, r: f64) -> Result<f64, SolverError> {
    let factors = model.factors();
    let first = &factors[0];
    if !first.is_cue() || factors.iter().any(|f| f != first) {
        return Err(SolverError::NotApplicable("scaling relation needs identical CUE-sum factors"));
    }
    let j = factors.len() as f64;
    let single = ModelSpec::new(vec![first.clone()]).validate()?;
    let mt = solve_radial(model, &[r])?[0].m_value;
    let ms = solve_radial(&single, &[r.powf(1.0 / j)])?[0].m_value;
    Ok((mt - ms).abs())
}
