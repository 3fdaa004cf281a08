//! Rotation-angle profiles `θ(x₁)` and their monotone-branch inverses.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::roots;
use crate::scalar::{Interval, Real};

/// Which family a profile belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `θ(x) = θ₀ + Σ_{k=0}^m A_k x^{2k}`
    EvenPoly,
    /// `θ(x) = θ₀ + Σ_{k=0}^m A_k x^{2k+1}`
    OddPoly,
    /// Piecewise-cubic Hermite interpolant of sampled `(x, θ, θ̇)`.
    Tabulated,
}

/// Monotone half-line of `θ`: `Plus` is `z ≥ start`, `Minus` is `z ≤ start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        }
    }

    fn outward<T: Real>(self) -> T {
        match self {
            Branch::Plus => T::one(),
            Branch::Minus => -T::one(),
        }
    }
}

#[derive(Debug, Clone)]
struct Table<T> {
    x: Vec<T>,
    theta: Vec<T>,
    slope: Vec<T>,
}

impl<T: Real> Table<T> {
    fn segment(&self, x: T) -> usize {
        // index i with x in [x_i, x_{i+1}]
        let n = self.x.len();
        match self
            .x
            .binary_search_by(|p| p.partial_cmp(&x).expect("finite samples"))
        {
            Ok(i) => i.min(n - 2),
            Err(i) => (i.max(1) - 1).min(n - 2),
        }
    }

    fn eval(&self, x: T) -> (T, T) {
        let i = self.segment(x);
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        let (y0, y1) = (self.theta[i], self.theta[i + 1]);
        let (d0, d1) = (self.slope[i] * h, self.slope[i + 1] * h);
        let one = T::one();
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = two * t3 - three * t2 + one;
        let h10 = t3 - two * t2 + t;
        let h01 = -two * t3 + three * t2;
        let h11 = t3 - t2;
        let value = h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1;
        let six = T::lit(6.0);
        let four = T::lit(4.0);
        let dh00 = six * t2 - six * t;
        let dh10 = three * t2 - four * t + one;
        let dh01 = -six * t2 + six * t;
        let dh11 = three * t2 - two * t;
        let deriv = (dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1) / h;
        (value, deriv)
    }

    /// Shape-preserving slopes (Fritsch–Butland weighted harmonic mean).
    fn pchip_slopes(x: &[T], y: &[T]) -> Vec<T> {
        let n = x.len();
        let h: Vec<T> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<T> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![T::zero(); n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
            return d;
        }
        for i in 1..n - 1 {
            let (a, b) = (delta[i - 1], delta[i]);
            if a * b <= T::zero() {
                d[i] = T::zero();
            } else {
                let w1 = T::lit(2.0) * h[i] + h[i - 1];
                let w2 = h[i] + T::lit(2.0) * h[i - 1];
                d[i] = (w1 + w2) / (w1 / a + w2 / b);
            }
        }
        d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
        d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        d
    }
}

fn end_slope<T: Real>(h0: T, h1: T, d0: T, d1: T) -> T {
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let d = ((two * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() || d0 == T::zero() {
        T::zero()
    } else if d0.signum() != d1.signum() && d.abs() > three * d0.abs() {
        three * d0
    } else {
        d
    }
}

#[derive(Debug, Clone)]
enum Shape<T> {
    Even(Vec<T>),
    Odd(Vec<T>),
    Tabulated(Table<T>),
}

/// Rotation angle `θ(x₁)` of the cross-section along the tube axis.
///
/// Immutable once built; every query is a pure function of the profile.
#[derive(Debug, Clone)]
pub struct TwistProfile<T> {
    shape: Shape<T>,
    offset: T,
    s0: Option<T>,
}

fn check_coefficients<T: Real>(coefficients: &[T], first_constrained: usize) -> Result<()> {
    if coefficients.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidProfile("non-finite coefficient".into()));
    }
    for (k, c) in coefficients.iter().enumerate().skip(first_constrained) {
        if *c < T::zero() {
            return Err(Error::InvalidProfile(format!(
                "coefficient A_{k} = {c} must be non-negative"
            )));
        }
    }
    match coefficients.last() {
        Some(c) if *c > T::zero() => Ok(()),
        _ => Err(Error::InvalidProfile(
            "leading coefficient A_m must be positive".into(),
        )),
    }
}

impl<T: Real> TwistProfile<T> {
    /// `θ(x) = Σ_{k=0}^m A_k x^{2k}` with `A_k ≥ 0` for `k ≥ 1`, `A_m > 0`, `m ≥ 1`.
    pub fn even_poly(coefficients: Vec<T>) -> Result<Self> {
        if coefficients.len() < 2 {
            return Err(Error::InvalidProfile(
                "even polynomial needs at least A_0 and A_1 (m >= 1)".into(),
            ));
        }
        check_coefficients(&coefficients, 1)?;
        Ok(TwistProfile {
            shape: Shape::Even(coefficients),
            offset: T::zero(),
            s0: None,
        })
    }

    /// `θ(x) = Σ_{k=0}^m A_k x^{2k+1}` with all `A_k ≥ 0`, `A_m > 0`.
    pub fn odd_poly(coefficients: Vec<T>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidProfile("odd polynomial needs A_0".into()));
        }
        check_coefficients(&coefficients, 0)?;
        Ok(TwistProfile {
            shape: Shape::Odd(coefficients),
            offset: T::zero(),
            s0: None,
        })
    }

    /// Sampled profile. Without `dtheta`, shape-preserving slopes are
    /// derived from the samples. Every segment of the resulting cubic
    /// Hermite interpolant must be monotone.
    pub fn tabulated(x: Vec<T>, theta: Vec<T>, dtheta: Option<Vec<T>>) -> Result<Self> {
        let n = x.len();
        if n < 2 {
            return Err(Error::InvalidProfile(
                "tabulated profile needs at least two samples".into(),
            ));
        }
        if theta.len() != n || dtheta.as_ref().is_some_and(|d| d.len() != n) {
            return Err(Error::InvalidProfile(
                "tabulated arrays must have equal length".into(),
            ));
        }
        let all_finite = x
            .iter()
            .chain(theta.iter())
            .chain(dtheta.iter().flatten())
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidProfile("non-finite sample".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidProfile(
                "sample abscissae must be strictly increasing".into(),
            ));
        }
        let slope = match dtheta {
            Some(d) => d,
            None => Table::pchip_slopes(&x, &theta),
        };
        for i in 0..n - 1 {
            let h = x[i + 1] - x[i];
            let delta = (theta[i + 1] - theta[i]) / h;
            let (d0, d1) = (slope[i], slope[i + 1]);
            let ok = if delta == T::zero() {
                d0 == T::zero() && d1 == T::zero()
            } else {
                let a = d0 / delta;
                let b = d1 / delta;
                a >= T::zero() && b >= T::zero() && a * a + b * b <= T::lit(9.0) + T::tol(1e-12)
            };
            if !ok {
                return Err(Error::InvalidProfile(format!(
                    "interpolant is not monotone on segment [{}, {}]",
                    x[i], x[i + 1]
                )));
            }
        }
        Ok(TwistProfile {
            shape: Shape::Tabulated(Table { x, theta, slope }),
            offset: T::zero(),
            s0: None,
        })
    }

    /// Adds a constant to `θ`.
    pub fn with_offset(mut self, theta0: T) -> Self {
        self.offset = theta0;
        self
    }

    /// Records the threshold beyond which the admissibility conditions hold.
    pub fn with_s0(mut self, s0: T) -> Result<Self> {
        if !(s0 >= T::zero()) || !s0.is_finite() {
            return Err(Error::InvalidProfile(format!("s0 = {s0} must be >= 0")));
        }
        self.s0 = Some(s0);
        Ok(self)
    }

    pub fn family(&self) -> Family {
        match self.shape {
            Shape::Even(_) => Family::EvenPoly,
            Shape::Odd(_) => Family::OddPoly,
            Shape::Tabulated(_) => Family::Tabulated,
        }
    }

    pub fn coefficients(&self) -> Option<&[T]> {
        match &self.shape {
            Shape::Even(c) | Shape::Odd(c) => Some(c),
            Shape::Tabulated(_) => None,
        }
    }

    pub fn s0(&self) -> Option<T> {
        self.s0
    }

    /// Sampled window of a tabulated profile; `None` for polynomials.
    pub fn domain(&self) -> Option<Interval<T>> {
        match &self.shape {
            Shape::Tabulated(t) => Some(Interval::new(t.x[0], t.x[t.x.len() - 1])),
            _ => None,
        }
    }

    /// `(θ(x₁), θ̇(x₁))`.
    pub fn eval(&self, x1: T) -> Result<(T, T)> {
        if !x1.is_finite() {
            return Err(Error::Precondition(format!("x1 = {x1} is not finite")));
        }
        let (theta, dtheta) = match &self.shape {
            Shape::Even(c) => {
                // Horner in u = x²
                let u = x1 * x1;
                let mut p = T::zero();
                let mut dp = T::zero();
                for (k, a) in c.iter().enumerate().rev() {
                    p = p * u + *a;
                    if k >= 1 {
                        dp = dp * u + T::from_usize_lossy(2 * k) * *a;
                    }
                }
                // dp currently holds Σ 2k A_k u^{k-1}
                (p, dp * x1)
            }
            Shape::Odd(c) => {
                let u = x1 * x1;
                let mut q = T::zero();
                let mut dq = T::zero();
                for (k, a) in c.iter().enumerate().rev() {
                    q = q * u + *a;
                    dq = dq * u + T::from_usize_lossy(2 * k + 1) * *a;
                }
                (q * x1, dq)
            }
            Shape::Tabulated(t) => {
                let (lo, hi) = (t.x[0], t.x[t.x.len() - 1]);
                if x1 < lo || x1 > hi {
                    return Err(Error::OutOfRange {
                        x: x1.as_f64(),
                        lo: lo.as_f64(),
                        hi: hi.as_f64(),
                    });
                }
                t.eval(x1)
            }
        };
        Ok((theta + self.offset, dtheta))
    }

    pub fn theta(&self, x1: T) -> Result<T> {
        self.eval(x1).map(|e| e.0)
    }

    pub fn dtheta(&self, x1: T) -> Result<T> {
        self.eval(x1).map(|e| e.1)
    }

    /// `θ(0)`, or `θ` at the nearest sample when 0 lies outside a table.
    pub fn theta_at_origin(&self) -> T {
        let x = match self.domain() {
            Some(d) => T::zero().max(d.lo).min(d.hi),
            None => T::zero(),
        };
        self.theta(x).expect("origin inside domain")
    }

    /// Splits `window` into maximal pieces on which `θ` is monotone.
    pub fn monotone_pieces(&self, window: Interval<T>) -> Vec<Interval<T>> {
        let mut cuts = vec![window.lo];
        match &self.shape {
            Shape::Even(_) => {
                if window.lo < T::zero() && window.hi > T::zero() {
                    cuts.push(T::zero());
                }
            }
            Shape::Odd(_) => {}
            Shape::Tabulated(t) => {
                let n = t.x.len();
                let dir = |i: usize| (t.theta[i + 1] - t.theta[i]).signum();
                for i in 1..n - 1 {
                    let changes = t.theta[i + 1] == t.theta[i]
                        || t.theta[i] == t.theta[i - 1]
                        || dir(i) != dir(i - 1);
                    if changes && t.x[i] > window.lo && t.x[i] < window.hi {
                        cuts.push(t.x[i]);
                    }
                }
            }
        }
        cuts.push(window.hi);
        cuts.windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| Interval::new(w[0], w[1]))
            .collect()
    }

    /// `θ₊⁻¹(α) = {z ≥ 0 : θ(z) = α}` or `θ₋⁻¹(α) = {z ≤ 0 : θ(z) = α}`.
    pub fn branch_inverse(&self, branch: Branch, alpha: T) -> Result<T> {
        self.branch_inverse_from(branch, T::zero(), alpha)
    }

    /// Inverse of `θ` restricted to `[start, ∞)` (plus) or `(-∞, start]`
    /// (minus). Used with `start = ±s₀` by the localized bound variants.
    pub fn branch_inverse_from(&self, branch: Branch, start: T, alpha: T) -> Result<T> {
        if !alpha.is_finite() {
            return Err(self.domain_error(branch, alpha, "alpha is not finite".into()));
        }
        let dir: T = branch.outward();
        let theta_start = self.theta(start)?;
        let outward_increasing = match (&self.shape, branch) {
            (Shape::Even(_), _) | (Shape::Odd(_), Branch::Plus) => true,
            (Shape::Odd(_), Branch::Minus) => false,
            (Shape::Tabulated(t), _) => {
                let end = if branch == Branch::Plus {
                    t.x[t.x.len() - 1]
                } else {
                    t.x[0]
                };
                let span = Interval::new(start.min(end), start.max(end));
                let pieces = self.monotone_pieces(span);
                let theta_end = self.theta(end)?;
                if pieces.len() != 1 || theta_end == theta_start {
                    return Err(Error::Precondition(format!(
                        "tabulated profile is not strictly monotone on the {} branch from {}",
                        branch.name(),
                        start
                    )));
                }
                theta_end > theta_start
            }
        };
        if matches!(self.shape, Shape::Even(_) | Shape::Odd(_)) {
            let sign_ok = match (&self.shape, branch) {
                (Shape::Even(_), Branch::Plus) => start >= T::zero(),
                (Shape::Even(_), Branch::Minus) => start <= T::zero(),
                _ => true,
            };
            if !sign_ok {
                return Err(Error::Precondition(format!(
                    "even profile is not monotone on the {} branch from {start}",
                    branch.name()
                )));
            }
        }

        let ftol = (T::tol(1e-12) * alpha.abs()).max(T::tol(1e-14));
        let gap = if outward_increasing {
            alpha - theta_start
        } else {
            theta_start - alpha
        };
        // targets a rounding error short of the branch start snap to it
        let slack = T::tol(1e-10) * alpha.abs().max(theta_start.abs()).max(T::one());
        if gap < -slack {
            return Err(self.domain_error(
                branch,
                alpha,
                format!("branch starts at theta = {theta_start}"),
            ));
        }
        if gap <= T::zero() {
            return Ok(start);
        }
        let g = |z: T| self.theta(z).map(|t| t - alpha).unwrap_or(T::nan());
        let (inner, outer) = match &self.shape {
            Shape::Tabulated(t) => {
                let end = if branch == Branch::Plus {
                    t.x[t.x.len() - 1]
                } else {
                    t.x[0]
                };
                let theta_end = t.eval(end).0 + self.offset;
                let beyond = if outward_increasing {
                    alpha > theta_end
                } else {
                    alpha < theta_end
                };
                if beyond {
                    return Err(self.domain_error(
                        branch,
                        alpha,
                        format!("table ends at theta = {theta_end}"),
                    ));
                }
                (start, end)
            }
            _ => roots::expand_bracket(g, start, dir, T::one(), 2000).ok_or_else(|| {
                self.domain_error(branch, alpha, "no sign change while expanding".into())
            })?,
        };
        let root = roots::bracketed(g, inner, outer, ftol).ok_or_else(|| {
            self.domain_error(branch, alpha, "failed to bracket the root".into())
        })?;
        Ok(root.x)
    }

    fn domain_error(&self, branch: Branch, alpha: T, detail: String) -> Error {
        Error::Domain {
            branch: branch.name(),
            alpha: alpha.as_f64(),
            detail,
        }
    }

    /// Samples `θ̇` on a uniform grid of `window` and reports which
    /// admissibility condition sets are observed to hold.
    ///
    /// Divergence of `|θ̇|` cannot be decided from finite data;
    /// `explosion_ok` only records that `|θ̇|` reaches `dtheta_threshold` at
    /// both window ends.
    pub fn validate_conditions(&self, window: Interval<T>, dtheta_threshold: T) -> ConditionReport<T> {
        let samples = ConditionSamples::new(self, window);
        let even_ok = samples.holds(T::zero(), ConditionSet::Even);
        let odd_ok = samples.holds(T::zero(), ConditionSet::Odd);
        let effective_s0 = samples
            .right
            .iter()
            .map(|&i| samples.xs[i])
            .find(|&s| samples.holds(s, ConditionSet::Even) || samples.holds(s, ConditionSet::Odd))
            .unwrap_or(window.hi);
        let at = |x: T| self.dtheta(x).map(|d| d.abs()).unwrap_or(T::zero());
        let explosion_ok = at(window.lo) >= dtheta_threshold && at(window.hi) >= dtheta_threshold;
        ConditionReport {
            explosion_ok,
            even_conditions_ok: even_ok,
            odd_conditions_ok: odd_ok,
            effective_s0,
        }
    }

    /// Whether `set` is observed to hold on `{|x₁| ≥ s} ∩ window`.
    pub fn conditions_hold(&self, window: Interval<T>, set: ConditionSet, s: T) -> bool {
        ConditionSamples::new(self, window).holds(s, set)
    }
}

struct ConditionSamples<T> {
    xs: Vec<T>,
    ds: Vec<Option<T>>,
    slack: T,
    /// Sample indices on each side, ordered outward from the origin.
    right: Vec<usize>,
    left: Vec<usize>,
}

impl<T: Real> ConditionSamples<T> {
    const SAMPLES: usize = 2001;

    fn new(profile: &TwistProfile<T>, window: Interval<T>) -> Self {
        let n = Self::SAMPLES - 1;
        let xs: Vec<T> = (0..=n)
            .map(|i| window.lo + window.width() * T::from_usize_lossy(i) / T::from_usize_lossy(n))
            .collect();
        let ds: Vec<Option<T>> = xs.iter().map(|&x| profile.dtheta(x).ok()).collect();
        let scale = ds
            .iter()
            .flatten()
            .fold(T::zero(), |m, d| m.max(d.abs()))
            .max(T::one());
        let right = (0..=n).filter(|&i| xs[i] >= T::zero()).collect();
        let left = (0..=n).rev().filter(|&i| xs[i] <= T::zero()).collect();
        ConditionSamples {
            xs,
            ds,
            slack: T::tol(1e-12) * scale,
            right,
            left,
        }
    }

    fn side_ok(&self, idx: &[usize], s: T, set: ConditionSet, positive: bool) -> bool {
        let slack = self.slack;
        let mut prev: Option<T> = None;
        for &i in idx {
            if self.xs[i].abs() < s {
                continue;
            }
            let Some(d) = self.ds[i] else { return false };
            let sign_ok = match (set, positive) {
                (ConditionSet::Even, true) | (ConditionSet::Odd, _) => d >= -slack,
                (ConditionSet::Even, false) => d <= slack,
            };
            if !sign_ok {
                return false;
            }
            if let Some(p) = prev {
                // moving outward: θ̇ must not decrease on the right;
                // on the left Even needs θ̇ non-increasing outward,
                // Odd needs |θ̇| non-decreasing outward.
                let ok = match (set, positive) {
                    (_, true) => d >= p - slack,
                    (ConditionSet::Even, false) => d <= p + slack,
                    (ConditionSet::Odd, false) => d >= p - slack,
                };
                if !ok {
                    return false;
                }
            }
            prev = Some(d);
        }
        true
    }

    fn holds(&self, s: T, set: ConditionSet) -> bool {
        self.side_ok(&self.right, s, set, true) && self.side_ok(&self.left, s, set, false)
    }
}

/// Which of the two admissibility condition sets to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionSet {
    Even,
    Odd,
}

/// Finite-window evidence for the admissibility conditions of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionReport<T> {
    /// `|θ̇| ≥ threshold` at both ends of the window.
    pub explosion_ok: bool,
    /// `θ̇` increasing, `θ̇ ≥ 0` on `ℝ₊`, `θ̇ ≤ 0` on `ℝ₋`.
    pub even_conditions_ok: bool,
    /// `θ̇ ≥ 0`, increasing on `ℝ₊`, decreasing on `ℝ₋`.
    pub odd_conditions_ok: bool,
    /// Smallest sampled `s ≥ 0` such that one condition set holds on `|x₁| ≥ s`.
    pub effective_s0: T,
}
