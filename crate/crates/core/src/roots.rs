//! Bracketed root finding for monotone scalar functions.

use crate::scalar::Real;

/// Outcome of a bracketed solve.
#[derive(Debug, Clone, Copy)]
pub struct Root<T> {
    pub x: T,
    pub residual: T,
    pub iterations: usize,
}

const MAX_ITER: usize = 400;

/// Finds a root of `f` in `[a, b]` where `f(a)` and `f(b)` have opposite
/// signs (or one of them vanishes).
///
/// Each step tries a secant (regula falsi) update through the current
/// bracket ends and falls back to bisection whenever the secant point lands
/// too close to an end or the bracket failed to halve over the last two
/// steps. Stops once `|f(x)| <= ftol` or the bracket collapses to adjacent
/// floating-point numbers. Returns `None` when the input is not a bracket.
pub fn bracketed<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, ftol: T) -> Option<Root<T>> {
    let (mut a, mut b) = if a <= b { (a, b) } else { (b, a) };
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == T::zero() {
        return Some(Root { x: a, residual: fa, iterations: 0 });
    }
    if fb == T::zero() {
        return Some(Root { x: b, residual: fb, iterations: 0 });
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return None;
    }

    let two = T::lit(2.0);
    let mut best = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    let mut widths = [T::infinity(); 2];
    for it in 1..=MAX_ITER {
        let width = b - a;
        let mid = a + width / two;
        if mid <= a || mid >= b {
            return Some(Root { x: best.0, residual: best.1, iterations: it });
        }
        let guard = width / T::lit(64.0);
        let stalled = width > widths[0] / two;
        let mut x = a - fa * (b - a) / (fb - fa);
        if stalled || !x.is_finite() || x <= a + guard || x >= b - guard {
            x = mid;
        }
        let fx = f(x);
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx == T::zero() || fx.abs() <= ftol {
            return Some(Root { x, residual: fx, iterations: it });
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        widths = [widths[1], b - a];
    }
    Some(Root { x: best.0, residual: best.1, iterations: MAX_ITER })
}

/// Expands `[start, start + dir·step]` geometrically away from `start`
/// until `f` changes sign relative to `f(start)`. Returns the last two
/// probe points as `(inner, outer)`.
pub fn expand_bracket<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    start: T,
    dir: T,
    initial_step: T,
    max_doublings: usize,
) -> Option<(T, T)> {
    let f0 = f(start);
    if f0 == T::zero() {
        return Some((start, start));
    }
    let mut inner = start;
    let mut step = initial_step;
    for _ in 0..max_doublings {
        let outer = start + dir * step;
        let fo = f(outer);
        if !fo.is_finite() {
            return None;
        }
        if fo == T::zero() || fo.signum() != f0.signum() {
            return Some((inner, outer));
        }
        inner = outer;
        step *= T::lit(2.0);
    }
    None
}
