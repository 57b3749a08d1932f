//! Small numerical kernels shared by the solvers: dense complex linear solves,
//! bracketed root finding, golden-section search and tanh-sinh quadrature.

use num_complex::Complex64;

/// Solves `a x = b` in place by Gaussian elimination with partial pivoting.
///
/// `a` is row-major `n x n`; on success `b` holds the solution. Returns `None`
/// when a pivot vanishes relative to the largest entry of its column.
pub fn solve_dense(a: &mut [Complex64], b: &mut [Complex64], n: usize) -> Option<()> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    for col in 0..n {
        let (piv, piv_abs) = (col..n)
            .map(|r| (r, a[r * n + col].norm()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv_abs <= 1e-300 || piv_abs < 1e-15 * scale * f64::EPSILON {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in col..n {
                let t = a[col * n + k];
                a[r * n + k] -= f * t;
            }
            let t = b[col];
            b[r] -= f * t;
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col * n + k] * b[k];
        }
        b[col] = acc / a[col * n + col];
    }
    if b.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        Some(())
    } else {
        None
    }
}

/// Finds a root of `f` in `[lo, hi]` with a Newton step guarded by bisection.
///
/// `f` returns the value and derivative. The bracket must straddle a sign
/// change (a zero at either end is accepted). `x0` seeds the Newton iteration.
pub fn safeguarded_newton<F>(mut f: F, mut lo: f64, mut hi: f64, x0: f64, xtol: f64) -> Option<f64>
where
    F: FnMut(f64) -> Option<(f64, f64)>,
{
    let (flo, _) = f(lo)?;
    if flo == 0.0 {
        return Some(lo);
    }
    let (fhi, _) = f(hi)?;
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    let rising = fhi > 0.0;
    let mut x = x0.clamp(lo, hi);
    for _ in 0..200 {
        let (fx, dfx) = f(x)?;
        if fx == 0.0 {
            return Some(x);
        }
        if (fx > 0.0) == rising {
            hi = x;
        } else {
            lo = x;
        }
        let newton = x - fx / dfx;
        let next = if dfx.is_finite() && dfx != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - x).abs();
        x = next;
        if step <= xtol * (1.0 + x.abs()) || hi - lo <= xtol * (1.0 + x.abs()) {
            return Some(x);
        }
    }
    Some(x)
}

/// Plain bisection on a sign change of `f` in `[lo, hi]`.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    let flo = f(lo);
    for _ in 0..300 {
        if (hi - lo).abs() <= xtol * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section search for the minimum of `f` on `[a, b]`.
/// Returns `(argmin, min)`.
pub fn golden_min<F>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> Option<(f64, f64)>
where
    F: FnMut(f64) -> Option<f64>,
{
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..400 {
        if (b - a).abs() <= xtol * (1.0 + c.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Some(if fc < fd { (c, fc) } else { (d, fd) })
}

/// Tanh-sinh quadrature of `f` over `[a, b]`.
///
/// Endpoint singularities are handled by the double-exponential change of
/// variables; `f` is never evaluated exactly at the endpoints. Refinement stops
/// when two consecutive levels agree to `tol` (absolute).
pub fn tanh_sinh<F>(mut f: F, a: f64, b: f64, tol: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    let half = 0.5 * (b - a);
    let pi2 = std::f64::consts::FRAC_PI_2;
    let tmax = 4.5;
    let mut eval = |t: f64| -> f64 {
        let s = pi2 * t.sinh();
        let cosh_s = s.cosh();
        let w = pi2 * t.cosh() / (cosh_s * cosh_s);
        let x = s.tanh();
        // distance to the nearer endpoint, computed without cancellation
        let gap = half / (s.abs().exp() * cosh_s);
        if gap <= 0.0 || w * half < 1e-300 {
            return 0.0;
        }
        let xv = if x >= 0.0 { b - gap } else { a + gap };
        let fx = f(xv);
        if fx.is_finite() {
            w * fx
        } else {
            0.0
        }
    };
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while (k as f64) * h <= tmax {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut prev = sum * h * half;
    for _level in 0..9 {
        h *= 0.5;
        let mut k = 1;
        while (k as f64) * h <= tmax {
            let t = k as f64 * h;
            sum += eval(t) + eval(-t);
            k += 2;
        }
        let cur = sum * h * half;
        if (cur - prev).abs() <= tol {
            return cur;
        }
        prev = cur;
    }
    prev
}
