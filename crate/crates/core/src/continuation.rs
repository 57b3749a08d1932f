//! Newton corrector and straight-segment path tracker for small holomorphic
//! systems `F(x; t) = 0`, `x` in C^n, with a complex parameter `t`.

use crate::numeric::solve_dense;
use num_complex::Complex64 as C64;

pub trait System {
    fn dim(&self) -> usize;

    fn residual(&self, x: &[C64], t: C64, out: &mut [C64]);

    /// Row-major Jacobian `dF_i/dx_j`. The default uses central differences,
    /// which are accurate for holomorphic residuals.
    fn jacobian(&self, x: &[C64], t: C64, jac: &mut [C64]) {
        let n = self.dim();
        let mut xp = x.to_vec();
        let mut fp = vec![C64::new(0.0, 0.0); n];
        let mut fm = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            let h = 1e-7 * (1.0 + x[j].norm());
            xp[j] = x[j] + h;
            self.residual(&xp, t, &mut fp);
            xp[j] = x[j] - h;
            self.residual(&xp, t, &mut fm);
            xp[j] = x[j];
            for i in 0..n {
                jac[i * n + j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct NewtonReport {
    pub converged: bool,
    pub iterations: usize,
    pub first_step: f64,
    pub second_step: f64,
}

fn inf_norm(v: &[C64]) -> f64 {
    v.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Newton iteration in place. Converged when the update falls below
/// `tol * (1 + |x|)` in the max norm.
pub fn newton<S: System + ?Sized>(sys: &S, x: &mut [C64], t: C64, tol: f64, max_iter: usize) -> NewtonReport {
    let n = sys.dim();
    let mut f = vec![C64::new(0.0, 0.0); n];
    let mut jac = vec![C64::new(0.0, 0.0); n * n];
    let mut report = NewtonReport {
        converged: false,
        iterations: 0,
        first_step: f64::INFINITY,
        second_step: f64::INFINITY,
    };
    let mut prev = f64::INFINITY;
    for it in 0..max_iter {
        sys.residual(x, t, &mut f);
        if f.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return report;
        }
        sys.jacobian(x, t, &mut jac);
        for v in f.iter_mut() {
            *v = -*v;
        }
        if solve_dense(&mut jac, &mut f, n).is_none() {
            return report;
        }
        let step = inf_norm(&f);
        for (xi, di) in x.iter_mut().zip(&f) {
            *xi += di;
        }
        report.iterations = it + 1;
        match it {
            0 => report.first_step = step,
            1 => report.second_step = step,
            _ => {}
        }
        if !step.is_finite() {
            return report;
        }
        let scale = 1.0 + inf_norm(x);
        // a step that no longer shrinks quadratically has hit the roundoff floor
        if step <= tol * scale || (it >= 2 && step <= 1e-10 * scale && step > 0.1 * prev) {
            report.converged = true;
            return report;
        }
        prev = step;
    }
    report
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TrackFailure {
    /// Step size underflow at the given parameter value.
    Stall(C64),
}

/// Follows the solution branch through `x` from `t0` to `t1` along the
/// straight segment, with a secant predictor and a contraction test that
/// rejects steps whose corrector leaves the Newton basin of the prediction.
pub fn track<S: System + ?Sized>(sys: &S, x: &mut Vec<C64>, t0: C64, t1: C64) -> Result<(), TrackFailure> {
    const TOL: f64 = 1e-14;
    let mut s = 0.0f64;
    let mut h = 1.0f64;
    let mut prev: Option<(Vec<C64>, f64)> = None;
    let seg = t1 - t0;
    if seg.norm() == 0.0 {
        let r = newton(sys, x, t0, TOL, 30);
        return if r.converged { Ok(()) } else { Err(TrackFailure::Stall(t0)) };
    }
    while s < 1.0 {
        let step = h.min(1.0 - s);
        let s_new = if step >= 1.0 - s { 1.0 } else { s + step };
        let t = t0 + seg * s_new;
        let mut trial = x.clone();
        if let Some((xp, hp)) = &prev {
            let k = (s_new - s) / hp;
            for (ti, (xi, xpi)) in trial.iter_mut().zip(x.iter().zip(xp)) {
                *ti = xi + (xi - xpi) * k;
            }
        }
        let rep = newton(sys, &mut trial, t, TOL, 8);
        let contracting = rep.iterations <= 1
            || rep.first_step <= 1e-10 * (1.0 + inf_norm(x))
            || rep.second_step <= 0.15 * rep.first_step;
        if rep.converged && contracting {
            prev = Some((std::mem::replace(x, trial), s_new - s));
            s = s_new;
            if rep.iterations <= 3 {
                h = (2.0 * step).min(1.0);
            }
        } else {
            h = 0.5 * step;
            if h < 1e-13 {
                return Err(TrackFailure::Stall(t0 + seg * s));
            }
        }
    }
    Ok(())
}
