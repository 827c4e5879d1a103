//! Scalar root finding and one-dimensional maximization.

use crate::scalar::Scalar;

/// Outcome of [`newton_bisect`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root<T> {
    pub x: T,
    pub fx: T,
    pub iterations: usize,
}

/// Safeguarded Newton iteration on a sign-changing bracket `[lo, hi]`.
///
/// `f` returns the value and the derivative. A Newton step is taken when it
/// stays inside the current bracket and shrinks it at least as fast as
/// bisection would; otherwise the bracket is bisected. Stops once
/// `|f| <= ftol`, the bracket collapses to a few ulps, or `max_iter` is hit.
pub fn newton_bisect<T, F>(mut f: F, mut lo: T, mut hi: T, ftol: T, max_iter: usize) -> Root<T>
where
    T: Scalar,
    F: FnMut(T) -> (T, T),
{
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo.abs() <= ftol {
        return Root { x: lo, fx: flo, iterations: 0 };
    }
    if fhi.abs() <= ftol {
        return Root { x: hi, fx: fhi, iterations: 0 };
    }
    // orient so that f(lo) > 0 > f(hi)
    let increasing = flo < T::zero();
    let half = T::lit(0.5);
    let mut x = if increasing { hi } else { lo };
    let (mut fx, mut dfx) = f(x);
    let mut width_before = (hi - lo).abs();
    for it in 1..=max_iter {
        let newton = x - fx / dfx;
        let (a, b) = if lo < hi { (lo, hi) } else { (hi, lo) };
        let inside = newton.is_finite() && newton > a && newton < b;
        let next = if inside && (newton - x).abs() * T::lit(2.0) < width_before {
            newton
        } else {
            (lo + hi) * half
        };
        width_before = (hi - lo).abs();
        x = next;
        let (v, d) = f(x);
        fx = v;
        dfx = d;
        if fx.abs() <= ftol {
            return Root { x, fx, iterations: it };
        }
        let positive = (fx > T::zero()) != increasing;
        if positive {
            lo = x;
        } else {
            hi = x;
        }
        if (hi - lo).abs() <= T::epsilon() * T::lit(4.0) * (T::one() + x.abs()) {
            return Root { x, fx, iterations: it };
        }
    }
    Root { x, fx, iterations: max_iter }
}

/// Plain bisection on a sign change, to absolute width `xtol`.
pub fn bisect<T, F>(mut pred: F, mut inside: T, mut outside: T, xtol: T) -> T
where
    T: Scalar,
    F: FnMut(T) -> bool,
{
    // pred(inside) == true, pred(outside) == false
    while (outside - inside).abs() > xtol {
        let mid = (inside + outside) * T::lit(0.5);
        if mid == inside || mid == outside {
            break;
        }
        if pred(mid) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    (inside + outside) * T::lit(0.5)
}

/// Golden-section maximization of a unimodal `f` on `[a, b]`.
/// Returns `(argmax, max)`.
pub fn golden_max<T, F>(mut f: F, mut a: T, mut b: T, xtol: T, max_iter: usize) -> (T, T)
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let inv_phi = T::lit(0.618_033_988_749_894_9);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        if (b - a).abs() <= xtol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
