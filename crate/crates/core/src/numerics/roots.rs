//! Bracketed root finding, golden-section refinement and supremum scans.

use crate::error::{Error, Result};
use crate::numerics::Tolerance;

/// Brent's method: bisection safeguarding secant / inverse quadratic steps.
///
/// Stops when `|f(root)| <= tol.abs` or the bracket is narrower than `tol.abs`.
pub fn find_root<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: Tolerance) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::NoSignChange {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..tol.max_subdivisions.max(200) {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol.abs;
        let m = 0.5 * (c - b);
        if m.abs() <= tol1 || fb.abs() <= tol.abs {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(m) };
        fb = f(b);
    }
    Ok(b)
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
pub fn maximize_golden<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > xtol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Location and value of a numerically computed supremum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Supremum {
    pub arg: f64,
    pub value: f64,
}

/// Number of grid points used by [`sup_scan`] unless told otherwise.
pub const SCAN_POINTS: usize = 4096;

/// Supremum of `f` on `[a, b]`: uniform grid scan, then golden-section
/// refinement on the bracket spanned by the best grid point and its two
/// neighbours.
pub fn sup_scan<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, points: usize) -> Supremum {
    let points = points.max(3);
    let h = (b - a) / (points - 1) as f64;
    let mut best = Supremum {
        arg: a,
        value: f64::NEG_INFINITY,
    };
    let mut best_i = 0;
    for i in 0..points {
        let x = if i + 1 == points { b } else { a + h * i as f64 };
        let v = f(x);
        if v > best.value {
            best = Supremum { arg: x, value: v };
            best_i = i;
        }
    }
    if h > 0.0 {
        let lo = a + h * best_i.saturating_sub(1) as f64;
        let hi = (a + h * (best_i + 1) as f64).min(b);
        let (x, v) = maximize_golden(&mut f, lo, hi, 1e-12 * (1.0 + (b - a).abs()));
        if v > best.value {
            best = Supremum { arg: x, value: v };
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tol() -> Tolerance {
        Tolerance::new(1e-14, 1e-14, 200).unwrap()
    }

    fn bisection_oracle(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo).signum() == f(mid).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn simple_roots() {
        assert_abs_diff_eq!(find_root(|t| t - 0.5, 0.0, 1.0, tol()).unwrap(), 0.5, epsilon = 1e-13);
        assert_abs_diff_eq!(
            find_root(f64::cos, 0.0, std::f64::consts::PI, tol()).unwrap(),
            std::f64::consts::FRAC_PI_2,
            epsilon = 1e-13
        );
    }

    #[test]
    fn tanh_root_matches_bisection() {
        let f = |t: f64| t.tanh() - 0.5;
        let oracle = bisection_oracle(f, 0.0, 2.0);
        assert_abs_diff_eq!(oracle, 0.5f64.atanh(), epsilon = 1e-14);
        assert_abs_diff_eq!(find_root(f, 0.0, 2.0, tol()).unwrap(), oracle, epsilon = 1e-13);
    }

    #[test]
    fn missing_sign_change() {
        assert!(matches!(
            find_root(|t| t * t + 1.0, -1.0, 1.0, tol()),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn golden_finds_interior_max() {
        let (x, v) = maximize_golden(|t| -(t - 0.3) * (t - 0.3) + 2.0, 0.0, 1.0, 1e-12);
        assert_abs_diff_eq!(x, 0.3, epsilon = 1e-6);
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn scan_handles_endpoint_and_interior() {
        let s = sup_scan(|t| 1.0 - t, 0.0, 1.0, 64);
        assert_eq!(s.arg, 0.0);
        assert_eq!(s.value, 1.0);
        let s = sup_scan(|t: f64| (t * 7.3).sin(), 0.0, 1.0, 64);
        assert_abs_diff_eq!(s.value, 1.0, epsilon = 1e-12);
    }
}
