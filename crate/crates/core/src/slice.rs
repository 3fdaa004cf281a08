//! Axial slices of the twisted tube: for a transverse point `y`, the set of
//! `x₁` with `(x₁, y)` inside the tube, together with the checks on
//! angular widths that the bound relies on.
//!
//! Membership is `φ + θ(x₁) ∈ A(|y|)` modulo `2π`, where `φ = arg y` and
//! `A(r)` is the admissible angle set of the cross-section. On each monotone
//! piece of `θ` the crossings of `θ(x₁) = β - φ + 2πk` for every endpoint
//! `β` of `A(r)` are solved directly, and the sub-intervals between
//! consecutive crossings are classified by a midpoint test.

use serde::Serialize;

use crate::bound::{EffectivePotential, Variant};
use crate::error::{Error, Result};
use crate::roots;
use crate::scalar::{Interval, Real};
use crate::section::{CrossSection, Point};
use crate::twist::TwistProfile;

/// Tolerance for the two angular-width laws.
pub const TOL_LAW: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceInterval<T> {
    pub a: T,
    pub b: T,
    /// Clipped by the window on at least one side.
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceIntervals<T> {
    pub y: Point<T>,
    pub window: Interval<T>,
    /// Disjoint, sorted, maximal.
    pub intervals: Vec<SliceInterval<T>>,
}

impl<T: Real> SliceIntervals<T> {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn total_length(&self) -> T {
        self.intervals.iter().map(|i| i.b - i.a).sum()
    }

    pub fn contains(&self, x1: T) -> bool {
        self.intervals.iter().any(|i| i.a < x1 && x1 < i.b)
    }
}

/// Solves `θ(x) = c` on a piece where `θ` is monotone.
fn solve_on_piece<T: Real>(profile: &TwistProfile<T>, piece: Interval<T>, c: T) -> Option<T> {
    let g = |x: T| profile.theta(x).map(|t| t - c).unwrap_or(T::nan());
    let ftol = T::tol(1e-14) * c.abs().max(T::one());
    roots::bracketed(g, piece.lo, piece.hi, ftol).map(|r| r.x)
}

/// Maximal open intervals `(a_k, b_k) ⊂ window` of `{x₁ : (x₁, y) ∈ Ω}`.
pub fn slice_intervals<T: Real>(
    profile: &TwistProfile<T>,
    cs: &CrossSection<T>,
    y: Point<T>,
    window: Interval<T>,
) -> Result<SliceIntervals<T>> {
    if !(window.hi > window.lo) {
        return Err(Error::Precondition("slice window must have positive length".into()));
    }
    let r = y.norm();
    if !(r > T::zero()) {
        return Err(Error::Precondition("slice point must not be the origin".into()));
    }
    let phi = y.angle();
    let angles = cs.admissible_angles(r);
    let empty = SliceIntervals {
        y,
        window,
        intervals: Vec::new(),
    };
    if angles.is_empty() {
        return Ok(empty);
    }
    let two_pi = T::TAU();
    let mut cuts = Vec::new();
    for piece in profile.monotone_pieces(window) {
        cuts.push(piece.lo);
        cuts.push(piece.hi);
        let t0 = profile.theta(piece.lo)?;
        let t1 = profile.theta(piece.hi)?;
        let (lo, hi) = (t0.min(t1), t0.max(t1));
        for iv in &angles.intervals {
            for beta in [iv.lo, iv.hi] {
                let base = beta - phi;
                let k0 = ((lo - base) / two_pi).ceil().to_i64().unwrap_or(0);
                let k1 = ((hi - base) / two_pi).floor().to_i64().unwrap_or(-1);
                for k in k0..=k1 {
                    let c = base + two_pi * T::lit(k as f64);
                    if c > lo && c < hi {
                        if let Some(x) = solve_on_piece(profile, piece, c) {
                            cuts.push(x);
                        }
                    }
                }
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite cut points"));
    cuts.dedup_by(|a, b| (*a - *b).abs() <= T::epsilon() * a.abs().max(T::one()));

    let mut intervals: Vec<SliceInterval<T>> = Vec::new();
    for w in cuts.windows(2) {
        let (p, q) = (w[0], w[1]);
        if !(q > p) {
            continue;
        }
        let mid = (p + q) / T::lit(2.0);
        if !angles.contains_angle(phi + profile.theta(mid)?) {
            continue;
        }
        match intervals.last_mut() {
            Some(last) if last.b == p => last.b = q,
            _ => intervals.push(SliceInterval {
                a: p,
                b: q,
                partial: false,
            }),
        }
    }
    for iv in &mut intervals {
        iv.partial = iv.a <= window.lo || iv.b >= window.hi;
    }
    Ok(SliceIntervals { intervals, ..empty })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalLaw<T> {
    pub k: usize,
    pub a: T,
    pub b: T,
    /// `|θ(b) - θ(a)|`.
    pub delta_in: T,
    pub ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapLaw<T> {
    /// Gap between intervals `k` and `k + 1`.
    pub k: usize,
    pub b_k: T,
    pub a_next: T,
    /// `|θ(a_{k+1}) - θ(b_k)|`.
    pub delta_gap: T,
    pub ok: bool,
}

/// Outcome of the width checks on one slice. Only complete intervals and
/// gaps lying inside a single monotone piece of `θ` are checked.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceLawReport<T> {
    pub intervals: Vec<IntervalLaw<T>>,
    pub gaps: Vec<GapLaw<T>>,
    /// Every checked interval has `Δ_in ≤ π`.
    pub law1_ok: bool,
    /// Every checked gap has `Δ_gap ≥ π`.
    pub law2_ok: bool,
}

fn in_one_piece<T: Real>(pieces: &[Interval<T>], a: T, b: T) -> bool {
    pieces.iter().any(|p| p.lo <= a && b <= p.hi)
}

/// Checks `Δ_in ≤ π` on complete intervals and `Δ_gap ≥ π` on gaps, with
/// tolerance [`TOL_LAW`].
pub fn check_slice_laws<T: Real>(profile: &TwistProfile<T>, slice: &SliceIntervals<T>) -> Result<SliceLawReport<T>> {
    let pieces = profile.monotone_pieces(slice.window);
    let tol = T::lit(TOL_LAW);
    let pi = T::PI();
    let mut intervals = Vec::new();
    for (k, iv) in slice.intervals.iter().enumerate() {
        if iv.partial || !in_one_piece(&pieces, iv.a, iv.b) {
            continue;
        }
        let delta_in = (profile.theta(iv.b)? - profile.theta(iv.a)?).abs();
        intervals.push(IntervalLaw {
            k,
            a: iv.a,
            b: iv.b,
            delta_in,
            ok: delta_in <= pi + tol,
        });
    }
    let mut gaps = Vec::new();
    for (k, w) in slice.intervals.windows(2).enumerate() {
        let (b_k, a_next) = (w[0].b, w[1].a);
        if !in_one_piece(&pieces, b_k, a_next) {
            continue;
        }
        let delta_gap = (profile.theta(a_next)? - profile.theta(b_k)?).abs();
        gaps.push(GapLaw {
            k,
            b_k,
            a_next,
            delta_gap,
            ok: delta_gap >= pi - tol,
        });
    }
    Ok(SliceLawReport {
        law1_ok: intervals.iter().all(|l| l.ok),
        law2_ok: gaps.iter().all(|g| g.ok),
        intervals,
        gaps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FriedrichsSample<T> {
    pub k: usize,
    pub x1: T,
    pub f: T,
    /// `π² / (b_k - a_k)²`.
    pub friedrichs: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FriedrichsReport<T> {
    pub checked_intervals: usize,
    /// Sample with the largest ratio `f / (π²/(b-a)²)`.
    pub worst: Option<FriedrichsSample<T>>,
    pub ok: bool,
}

/// Samples `f` on every complete slice interval that lies beyond the
/// `θ(0) ± π` threshold on either side and checks
/// `f(x₁) ≤ (1 + tol) π² / (b_k - a_k)²` there.
pub fn check_friedrichs<T: Real>(
    profile: &TwistProfile<T>,
    slice: &SliceIntervals<T>,
    variant: Variant<T>,
    samples_per_interval: usize,
    tol: T,
) -> Result<FriedrichsReport<T>> {
    let pot = EffectivePotential::new(profile, variant)?;
    let pieces = profile.monotone_pieces(slice.window);
    let pi = T::PI();
    let t0 = profile.theta_at_origin();
    let odd = matches!(variant, Variant::Odd | Variant::LocalizedOdd(_));
    let beyond = |iv: &SliceInterval<T>| -> Result<bool> {
        if iv.a >= T::zero() {
            Ok(profile.theta(iv.a)? >= t0 + pi)
        } else if iv.b <= T::zero() {
            let t = profile.theta(iv.b)?;
            Ok(if odd { t <= t0 - pi } else { t >= t0 + pi })
        } else {
            Ok(false)
        }
    };
    let mut checked = 0;
    let mut worst: Option<(T, FriedrichsSample<T>)> = None;
    let n = samples_per_interval.max(1);
    for (k, iv) in slice.intervals.iter().enumerate() {
        if iv.partial || !in_one_piece(&pieces, iv.a, iv.b) || !beyond(iv)? {
            continue;
        }
        checked += 1;
        let bound = pi * pi / ((iv.b - iv.a) * (iv.b - iv.a));
        for i in 0..=n {
            let x1 = iv.a + (iv.b - iv.a) * T::from_usize_lossy(i) / T::from_usize_lossy(n);
            let f = pot.value(x1)?;
            let ratio = f / bound;
            if worst.as_ref().is_none_or(|(r, _)| ratio > *r) {
                worst = Some((
                    ratio,
                    FriedrichsSample {
                        k,
                        x1,
                        f,
                        friedrichs: bound,
                    },
                ));
            }
        }
    }
    let ok = worst.as_ref().is_none_or(|(r, _)| *r <= T::one() + tol);
    Ok(FriedrichsReport {
        checked_intervals: checked,
        worst: worst.map(|(_, s)| s),
        ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn square_twist() -> TwistProfile<f64> {
        TwistProfile::even_poly(vec![0.0, 1.0]).unwrap()
    }

    fn unit_square() -> CrossSection<f64> {
        CrossSection::rectangle(1.0, 2.0, -0.5, 0.5).unwrap()
    }

    fn ends(s: &SliceIntervals<f64>) -> Vec<(f64, f64)> {
        s.intervals.iter().map(|i| (i.a, i.b)).collect()
    }

    #[test]
    fn worked_example_positive_side() {
        // y = (1.5, 0): admissible half-width asin(1/3); crossings at √c
        let s = slice_intervals(&square_twist(), &unit_square(), Point::new(1.5, 0.0), Interval::new(0.0, 3.6)).unwrap();
        let w = (1.0f64 / 3.0).asin();
        let e = ends(&s);
        assert!(s.intervals[0].partial);
        assert_abs_diff_eq!(e[0].0, 0.0);
        assert_abs_diff_eq!(e[0].1, w.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(e[1].0, (2.0 * PI - w).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(e[1].1, (2.0 * PI + w).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(e[2].0, (4.0 * PI - w).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(e[2].1, (4.0 * PI + w).sqrt(), epsilon = 1e-12);
        assert_eq!(e.len(), 3);
        assert!(!s.intervals[2].partial);
        assert_abs_diff_eq!(e[2].0, 3.496_646_065_146_578_6, epsilon = 1e-12);
        assert_abs_diff_eq!(e[2].1, 3.592_521_054_052_891, epsilon = 1e-12);
        assert_abs_diff_eq!(e[0].1, 0.582_955_323_720_542, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1].0, 2.437_898_356_725_617, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1].1, 2.573_523_307_963_949, epsilon = 1e-12);
    }

    #[test]
    fn worked_example_full_window() {
        let s = slice_intervals(&square_twist(), &unit_square(), Point::new(1.5, 0.0), Interval::new(-3.0, 3.0)).unwrap();
        let w = (1.0f64 / 3.0).asin().sqrt();
        let e = ends(&s);
        assert_eq!(e.len(), 3);
        assert_abs_diff_eq!(e[1].0, -w, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1].1, w, epsilon = 1e-12);
        let report = check_slice_laws(&square_twist(), &s).unwrap();
        // the middle interval straddles the turning point and is skipped
        assert!(report.intervals.iter().all(|l| l.k != 1));
        assert!(report.law1_ok);
        assert!(report.gaps.iter().all(|g| g.ok));
        assert_eq!(report.gaps.len(), 2);
        assert_abs_diff_eq!(report.gaps[1].delta_gap, 2.0 * PI - 2.0 * (1.0f64 / 3.0).asin(), epsilon = 1e-10);
    }

    #[test]
    fn mirror_symmetry_for_even_twist() {
        let p = TwistProfile::even_poly(vec![0.2, 0.7, 0.1]).unwrap();
        let cs = CrossSection::polygon(vec![Point::new(0.8, -0.4), Point::new(2.0, 0.1), Point::new(1.1, 0.9)]).unwrap();
        let y = Point::new(1.2, 0.3);
        let s = slice_intervals(&p, &cs, y, Interval::new(-4.0, 4.0)).unwrap();
        let e = ends(&s);
        let m: Vec<(f64, f64)> = e.iter().rev().map(|&(a, b)| (-b, -a)).collect();
        assert_eq!(e.len(), m.len());
        for (u, v) in e.iter().zip(&m) {
            assert_abs_diff_eq!(u.0, v.0, epsilon = 1e-10);
            assert_abs_diff_eq!(u.1, v.1, epsilon = 1e-10);
        }
    }

    #[test]
    fn origin_is_rejected_and_far_points_are_empty() {
        let p = square_twist();
        assert!(slice_intervals(&p, &unit_square(), Point::new(0.0, 0.0), Interval::new(0.0, 1.0)).is_err());
        let s = slice_intervals(&p, &unit_square(), Point::new(5.0, 0.0), Interval::new(-2.0, 2.0)).unwrap();
        assert!(s.is_empty());
    }

    fn dense_membership(p: &TwistProfile<f64>, cs: &CrossSection<f64>, y: Point<f64>, x: f64) -> bool {
        cs.contains(y.rotated(p.theta(x).unwrap()))
    }

    #[test]
    fn agrees_with_dense_scan() {
        let p = TwistProfile::odd_poly(vec![0.3, 0.0, 0.4]).unwrap();
        let cs = CrossSection::polygon(vec![Point::new(0.5, -1.0), Point::new(3.0, -0.2), Point::new(1.2, 0.1), Point::new(2.5, 1.5), Point::new(0.8, 0.9)]).unwrap();
        for y in [Point::new(1.0, 0.2), Point::new(-1.3, 0.7), Point::new(0.1, -2.0), Point::new(2.1, 0.0)] {
            let s = slice_intervals(&p, &cs, y, Interval::new(-3.0, 3.0)).unwrap();
            let step = 1e-4;
            let mut x = -3.0 + step / 2.0;
            while x < 3.0 {
                let truth = dense_membership(&p, &cs, y, x);
                if truth != s.contains(x) {
                    let near = s.intervals.iter().any(|i| (i.a - x).abs() < 2e-4 || (i.b - x).abs() < 2e-4);
                    assert!(near, "y={y:?} x={x}");
                }
                x += step;
            }
        }
    }

    #[test]
    fn law_two_counterexample_is_reported() {
        // at r = 2.03 the unit square admits two short arcs separated by
        // ≈ 0.346 rad, so consecutive slice intervals are closer than π
        let y = Point::new(2.03, 0.0);
        let s = slice_intervals(&square_twist(), &unit_square(), y, Interval::new(0.5, 6.0)).unwrap();
        let report = check_slice_laws(&square_twist(), &s).unwrap();
        assert!(report.law1_ok);
        assert!(!report.law2_ok);
        let r = 2.03f64;
        let expected = 2.0 * (2.0 / r).acos();
        let min_gap = report.gaps.iter().map(|g| g.delta_gap).fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(min_gap, expected, epsilon = 1e-9);
    }

    #[test]
    fn friedrichs_holds_on_worked_example() {
        let p = square_twist();
        for y in [Point::new(1.5, 0.0), Point::new(1.2, 0.4), Point::new(1.9, -0.45)] {
            let s = slice_intervals(&p, &unit_square(), y, Interval::new(-8.0, 8.0)).unwrap();
            let rep = check_friedrichs(&p, &s, Variant::Even, 32, 1e-6).unwrap();
            assert!(rep.checked_intervals > 10);
            assert!(rep.ok, "{rep:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn intervals_disjoint_sorted_and_law_one(r in 1.05..2.0f64, phi in -PI..PI, c1 in 0.1..2.0f64, c2 in 0.0..0.5f64) {
            let p = TwistProfile::even_poly(vec![0.0, c1, c2]).unwrap();
            let y = Point::from_polar(r, phi);
            let s = slice_intervals(&p, &unit_square(), y, Interval::new(-4.0, 4.0)).unwrap();
            for w in s.intervals.windows(2) {
                prop_assert!(w[0].b < w[1].a);
            }
            for iv in &s.intervals {
                prop_assert!(iv.a < iv.b);
            }
            let rep = check_slice_laws(&p, &s).unwrap();
            prop_assert!(rep.law1_ok);
        }

        #[test]
        fn law_two_holds_for_single_arc_radii(r in 1.05..2.0f64, phi in -PI..PI, c1 in 0.1..2.0f64) {
            // for |y| < 2 the admissible set of the unit square is one arc
            let p = TwistProfile::even_poly(vec![0.0, c1]).unwrap();
            let s = slice_intervals(&p, &unit_square(), Point::from_polar(r, phi), Interval::new(-4.0, 4.0)).unwrap();
            prop_assert!(check_slice_laws(&p, &s).unwrap().law2_ok);
        }
    }
}
