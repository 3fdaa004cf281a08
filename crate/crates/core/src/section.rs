//! Polygonal cross-sections lying in the open half-plane `x₂ > 0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{Interval, Real};

/// Point `(x₂, x₃)` of the transversal plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point<T> {
    pub x2: T,
    pub x3: T,
}

impl<T: Real> Point<T> {
    pub fn new(x2: T, x3: T) -> Self {
        Point { x2, x3 }
    }

    pub fn norm(self) -> T {
        self.x2.hypot(self.x3)
    }

    pub fn angle(self) -> T {
        self.x3.atan2(self.x2)
    }

    pub fn from_polar(r: T, alpha: T) -> Self {
        Point::new(r * alpha.cos(), r * alpha.sin())
    }

    /// Counter-clockwise rotation by `angle`.
    pub fn rotated(self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x2 - s * self.x3, s * self.x2 + c * self.x3)
    }

    fn sub(self, o: Self) -> Self {
        Point::new(self.x2 - o.x2, self.x3 - o.x3)
    }

    fn dot(self, o: Self) -> T {
        self.x2 * o.x2 + self.x3 * o.x3
    }

    fn cross(self, o: Self) -> T {
        self.x2 * o.x3 - self.x3 * o.x2
    }
}

/// Angle-merge tolerance for circle/edge intersections, radians.
pub const TOL_ANGLE: f64 = 1e-10;

/// Disjoint open angle intervals inside `(-π/2, π/2)`, sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleWindow<T> {
    pub intervals: Vec<Interval<T>>,
}

impl<T: Real> AngleWindow<T> {
    pub fn empty() -> Self {
        AngleWindow { intervals: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn total_width(&self) -> T {
        self.intervals.iter().map(|i| i.width()).sum()
    }

    /// Membership of an arbitrary angle after reduction to `(-π, π]`.
    pub fn contains_angle(&self, alpha: T) -> bool {
        let a = wrap_angle(alpha);
        self.intervals.iter().any(|i| a > i.lo && a < i.hi)
    }
}

/// Reduces an angle to `(-π, π]`.
pub fn wrap_angle<T: Real>(alpha: T) -> T {
    let two_pi = T::TAU();
    let mut a = alpha - two_pi * (alpha / two_pi).round();
    if a <= -T::PI() {
        a += two_pi;
    }
    a
}

/// Simple polygon `ω` in the open half-plane `x₂ > 0`, stored
/// counter-clockwise.
#[derive(Debug, Clone, Serialize)]
pub struct CrossSection<T> {
    vertices: Vec<Point<T>>,
    area: T,
    r_min: T,
    r_max: T,
}

fn segments_intersect<T: Real>(a: Point<T>, b: Point<T>, c: Point<T>, d: Point<T>) -> bool {
    let orient = |p: Point<T>, q: Point<T>, r: Point<T>| q.sub(p).cross(r.sub(p));
    let on_segment = |p: Point<T>, q: Point<T>, r: Point<T>| {
        r.x2 >= p.x2.min(q.x2) && r.x2 <= p.x2.max(q.x2) && r.x3 >= p.x3.min(q.x3) && r.x3 <= p.x3.max(q.x3)
    };
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    let z = T::zero();
    if ((d1 > z && d2 < z) || (d1 < z && d2 > z)) && ((d3 > z && d4 < z) || (d3 < z && d4 > z)) {
        return true;
    }
    (d1 == z && on_segment(c, d, a))
        || (d2 == z && on_segment(c, d, b))
        || (d3 == z && on_segment(a, b, c))
        || (d4 == z && on_segment(a, b, d))
}

fn segment_distance<T: Real>(p: Point<T>, a: Point<T>, b: Point<T>) -> T {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    let t = if len2 > T::zero() {
        (p.sub(a).dot(ab) / len2).max(T::zero()).min(T::one())
    } else {
        T::zero()
    };
    let foot = Point::new(a.x2 + t * ab.x2, a.x3 + t * ab.x3);
    p.sub(foot).norm()
}

impl<T: Real> CrossSection<T> {
    /// Validates and normalises a vertex list (either orientation).
    pub fn polygon(vertices: Vec<Point<T>>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidGeometry(format!(
                "a polygon needs at least 3 vertices, got {n}"
            )));
        }
        if let Some((i, v)) = vertices
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.x2.is_finite() && v.x3.is_finite()))
        {
            return Err(Error::InvalidGeometry(format!("vertex {i} ({}, {}) is not finite", v.x2, v.x3)));
        }
        if let Some((i, v)) = vertices.iter().enumerate().find(|(_, v)| v.x2 <= T::zero()) {
            return Err(Error::InvalidGeometry(format!(
                "vertex {i} = ({}, {}) violates x2 > 0",
                v.x2, v.x3
            )));
        }
        let twice_area: T = (0..n)
            .map(|i| vertices[i].cross(vertices[(i + 1) % n]))
            .sum();
        if twice_area == T::zero() || !twice_area.is_finite() {
            return Err(Error::InvalidGeometry("polygon has zero area".into()));
        }
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return Err(Error::InvalidGeometry(format!(
                        "edges {i} and {j} intersect; polygon is not simple"
                    )));
                }
            }
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            if a == b {
                return Err(Error::InvalidGeometry(format!("repeated vertex {i}")));
            }
        }
        let mut vertices = vertices;
        if twice_area < T::zero() {
            vertices.reverse();
        }
        let origin = Point::new(T::zero(), T::zero());
        let r_min = (0..n)
            .map(|i| segment_distance(origin, vertices[i], vertices[(i + 1) % n]))
            .fold(T::infinity(), T::min);
        let r_max = vertices.iter().map(|v| v.norm()).fold(T::zero(), T::max);
        Ok(CrossSection {
            vertices,
            area: twice_area.abs() / T::lit(2.0),
            r_min,
            r_max,
        })
    }

    /// Axis-aligned rectangle `[x2_lo, x2_hi] × [x3_lo, x3_hi]`.
    pub fn rectangle(x2_lo: T, x2_hi: T, x3_lo: T, x3_hi: T) -> Result<Self> {
        Self::polygon(vec![
            Point::new(x2_lo, x3_lo),
            Point::new(x2_hi, x3_lo),
            Point::new(x2_hi, x3_hi),
            Point::new(x2_lo, x3_hi),
        ])
    }

    pub fn vertices(&self) -> &[Point<T>] {
        &self.vertices
    }

    pub fn area(&self) -> T {
        self.area
    }

    pub fn r_min(&self) -> T {
        self.r_min
    }

    pub fn r_max(&self) -> T {
        self.r_max
    }

    fn edges(&self) -> impl Iterator<Item = (Point<T>, Point<T>)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    fn boundary_tol(&self) -> T {
        T::tol(1e-12) * self.r_max.max(T::one())
    }

    /// Strict interior test; points on the boundary are outside.
    pub fn contains(&self, p: Point<T>) -> bool {
        let r = p.norm();
        let tol = self.boundary_tol();
        if r < self.r_min - tol || r > self.r_max + tol {
            return false;
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            if segment_distance(p, a, b) <= tol {
                return false;
            }
            if (a.x3 > p.x3) != (b.x3 > p.x3) {
                let t = (p.x3 - a.x3) / (b.x3 - a.x3);
                let x = a.x2 + t * (b.x2 - a.x2);
                if p.x2 < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// `A(r) = {α : (r cos α, r sin α) ∈ ω}` from exact circle/edge
    /// intersections; arcs are classified by their midpoints.
    pub fn admissible_angles(&self, r: T) -> AngleWindow<T> {
        if !(r > T::zero()) || r <= self.r_min || r >= self.r_max {
            return AngleWindow::empty();
        }
        let mut angles: Vec<T> = Vec::new();
        let r2 = r * r;
        for (a, b) in self.edges() {
            let d = b.sub(a);
            let qa = d.dot(d);
            let qb = T::lit(2.0) * a.dot(d);
            let qc = a.dot(a) - r2;
            let disc = qb * qb - T::lit(4.0) * qa * qc;
            if disc < T::zero() {
                continue;
            }
            let sq = disc.sqrt();
            // numerically stable pair of roots
            let q = -T::lit(0.5) * (qb + qb.signum() * sq);
            let mut ts = Vec::with_capacity(2);
            if q != T::zero() {
                ts.push(q / qa);
                ts.push(qc / q);
            } else {
                ts.push(T::zero());
            }
            for t in ts {
                if t >= T::zero() && t <= T::one() {
                    let p = Point::new(a.x2 + t * d.x2, a.x3 + t * d.x3);
                    angles.push(p.angle());
                }
            }
        }
        angles.sort_by(|x, y| x.partial_cmp(y).expect("finite angles"));
        let tol = T::lit(TOL_ANGLE);
        angles.dedup_by(|later, earlier| (*later - *earlier).abs() <= tol);
        if angles.len() < 2 {
            return AngleWindow::empty();
        }
        let mut intervals: Vec<Interval<T>> = Vec::new();
        for w in angles.windows(2) {
            let mid = T::lit(0.5) * (w[0] + w[1]);
            if self.contains(Point::from_polar(r, mid)) {
                match intervals.last_mut() {
                    Some(last) if (w[0] - last.hi).abs() <= tol => last.hi = w[1],
                    _ => intervals.push(Interval::new(w[0], w[1])),
                }
            }
        }
        AngleWindow { intervals }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_square() -> CrossSection<f64> {
        CrossSection::rectangle(1.0, 2.0, -0.5, 0.5).unwrap()
    }

    #[test]
    fn polygon_examples() {
        let s = unit_square();
        assert_relative_eq!(s.area(), 1.0);
        assert_relative_eq!(s.r_min(), 1.0);
        assert_relative_eq!(s.r_max(), 4.25f64.sqrt());
        let tri = CrossSection::polygon(vec![
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(1.0, 1.0),
        ])
        .unwrap();
        assert_relative_eq!(tri.area(), 0.5);
        assert!(matches!(
            CrossSection::rectangle(-1.0, 1.0, -1.0, 1.0),
            Err(Error::InvalidGeometry(_))
        ));
    }

    #[test]
    fn rejects_bowtie_and_degenerate() {
        let bowtie = vec![
            Point::new(1.0, 0.0),
            Point::new(2.0, 1.0),
            Point::new(2.0, 0.0),
            Point::new(1.0, 1.0),
        ];
        assert!(CrossSection::polygon(bowtie).is_err());
        let flat = vec![Point::new(1.0, 0.0), Point::new(2.0, 0.0), Point::new(3.0, 0.0)];
        assert!(CrossSection::polygon(flat).is_err());
        assert!(CrossSection::polygon(vec![Point::new(1.0, 0.0), Point::new(2.0, 0.0)]).is_err());
    }

    #[test]
    fn clockwise_input_is_normalised() {
        let cw = CrossSection::polygon(vec![
            Point::new(1.0, 0.5),
            Point::new(2.0, 0.5),
            Point::new(2.0, -0.5),
            Point::new(1.0, -0.5),
        ])
        .unwrap();
        assert_relative_eq!(cw.area(), 1.0);
        assert!(cw.contains(Point::new(1.5, 0.0)));
    }

    #[test]
    fn contains_examples() {
        let s = unit_square();
        assert!(s.contains(Point::new(1.5, 0.0)));
        assert!(!s.contains(Point::new(0.5, 0.0)));
        assert!(!s.contains(Point::new(1.0, 0.0)));
        assert!(!s.contains(Point::new(2.0, 0.5)));
    }

    #[test]
    fn admissible_angle_examples() {
        let s = unit_square();
        let w = s.admissible_angles(1.5);
        assert_eq!(w.intervals.len(), 1);
        let a = (1.0f64 / 3.0).asin();
        assert_relative_eq!(w.intervals[0].lo, -a, epsilon = 1e-12);
        assert_relative_eq!(w.intervals[0].hi, a, epsilon = 1e-12);
        assert!(s.admissible_angles(0.5).is_empty());
        assert!(s.admissible_angles(3.0).is_empty());
    }

    #[test]
    fn two_arcs_beyond_the_outer_edge() {
        // for 2 < r < sqrt(4.25) the circle leaves through x2 = 2 near α = 0
        let s = unit_square();
        let r = 2.03;
        let w = s.admissible_angles(r);
        assert_eq!(w.intervals.len(), 2);
        let inner = (2.0 / r).acos();
        let outer = (0.5 / r).asin();
        assert_relative_eq!(w.intervals[1].lo, inner, epsilon = 1e-12);
        assert_relative_eq!(w.intervals[1].hi, outer, epsilon = 1e-12);
    }

    #[test]
    fn dense_sampling_agrees_with_arcs() {
        let s = CrossSection::polygon(vec![
            Point::new(0.5, -1.0),
            Point::new(3.0, -0.2),
            Point::new(1.2, 0.1),
            Point::new(2.5, 1.5),
            Point::new(0.8, 0.9),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let r = rng.gen_range(s.r_min()..s.r_max());
            let w = s.admissible_angles(r);
            assert!(w.total_width() < std::f64::consts::PI);
            for k in 0..2000 {
                let alpha = -1.6 + 3.2 * (k as f64 + 0.5) / 2000.0;
                let near_end = w
                    .intervals
                    .iter()
                    .any(|i| (alpha - i.lo).abs() < 1e-9 || (alpha - i.hi).abs() < 1e-9);
                if near_end {
                    continue;
                }
                let inside = s.contains(Point::from_polar(r, alpha));
                assert_eq!(inside, w.contains_angle(alpha), "r={r} alpha={alpha}");
            }
        }
    }

    #[test]
    fn monte_carlo_area() {
        let s = CrossSection::polygon(vec![
            Point::new(1.0, 0.0),
            Point::new(3.0, 1.0),
            Point::new(2.0, 2.0),
            Point::new(1.5, 1.0),
        ])
        .unwrap();
        let (lo2, hi2, lo3, hi3) = (1.0, 3.0, 0.0, 2.0);
        let box_area = (hi2 - lo2) * (hi3 - lo3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| s.contains(Point::new(rng.gen_range(lo2..hi2), rng.gen_range(lo3..hi3))))
            .count();
        let p = hits as f64 / n as f64;
        let estimate = p * box_area;
        let stderr = (p * (1.0 - p) / n as f64).sqrt() * box_area;
        assert!((estimate - s.area()).abs() < 3.0 * stderr, "{estimate} vs {}", s.area());
    }

    proptest! {
        #[test]
        fn window_width_below_pi(r in 1.0..2.0616f64) {
            let w = unit_square().admissible_angles(r);
            prop_assert!(w.total_width() < std::f64::consts::PI);
            for pair in w.intervals.windows(2) {
                prop_assert!(pair[0].hi < pair[1].lo);
            }
        }

        #[test]
        fn wrap_angle_range(a in -100.0..100.0f64) {
            let w = wrap_angle(a);
            prop_assert!(w > -std::f64::consts::PI - 1e-12 && w <= std::f64::consts::PI + 1e-12);
            prop_assert!(((a - w) / std::f64::consts::TAU - ((a - w) / std::f64::consts::TAU).round()).abs() < 1e-9);
        }
    }
}
