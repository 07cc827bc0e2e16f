//! One-dimensional search helpers.

use crate::scalar::Real;

/// Golden-section search for the maximiser of a unimodal `f` on `[a, b]`.
pub(crate) fn golden_max<T: Real, F: FnMut(T) -> T>(mut f: F, mut a: T, mut b: T, tol: T) -> T {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a + b) / T::lit(2.0)
}

/// Bisection for a sign change of `f` on `[a, b]`; runs until the bracket
/// stops shrinking or is narrower than `tol`. Returns `None` without a sign
/// change.
pub(crate) fn bisect<T: Real, F: FnMut(T) -> T>(mut f: F, mut a: T, mut b: T, tol: T) -> Option<T> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == T::zero() {
        return Some(a);
    }
    if fb == T::zero() {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..400 {
        let m = a + (b - a) / T::lit(2.0);
        if m <= a || m >= b || (b - a) <= tol {
            break;
        }
        let fm = f(m);
        if fm == T::zero() {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(a + (b - a) / T::lit(2.0))
}
