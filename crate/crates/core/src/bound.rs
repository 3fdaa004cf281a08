//! Upper bound for `tr(-Δ_D^Ω - Λ)_-^σ` on a twisted tube, built from the
//! effective axial potential `f` and a Lieb–Thirring constant.
//!
//! The right-hand side is
//!
//! ```text
//! L_σ / (1-ε)^{3/2} · |ω| · ∫_ℝ (ε f(x₁) - Λ)_-^{σ+3/2} dx₁
//! ```
//!
//! where `f` vanishes on a central plateau and grows without bound on both
//! tails, so the integrand has compact support. The support ends are
//! located by outward bracketing followed by a monotone root solve, and the
//! integral is computed with adaptive Gauss–Kronrod panels aligned to the
//! jump points of `f`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature;
use crate::roots;
use crate::scalar::{neg_part, Interval, Real};
use crate::section::CrossSection;
use crate::special::ln_gamma;
use crate::twist::{Branch, ConditionSet, Family, TwistProfile};

/// Relative tolerance of the support integral.
pub const TOL_QUAD: f64 = 1e-8;
/// Width at which the golden-section search over ε stops.
pub const TOL_EPS: f64 = 1e-4;

/// Which effective potential to use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant<T> {
    /// `θ̇` increasing, `θ̇ ≥ 0` on `ℝ₊`, `θ̇ ≤ 0` on `ℝ₋` (e.g. even polynomials).
    Even,
    /// `θ̇ ≥ 0`, increasing on `ℝ₊`, decreasing on `ℝ₋` (e.g. odd polynomials).
    Odd,
    /// `Even` conditions holding only for `|x₁| ≥ s₀`.
    LocalizedEven(T),
    /// `Odd` conditions holding only for `|x₁| ≥ s₀`.
    LocalizedOdd(T),
}

impl<T: Real> Variant<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Even => "even",
            Variant::Odd => "odd",
            Variant::LocalizedEven(_) => "localized_even",
            Variant::LocalizedOdd(_) => "localized_odd",
        }
    }

    fn s0(&self) -> Option<T> {
        match *self {
            Variant::LocalizedEven(s) | Variant::LocalizedOdd(s) => Some(s),
            _ => None,
        }
    }

    fn odd_reading(&self) -> bool {
        matches!(self, Variant::Odd | Variant::LocalizedOdd(_))
    }

    /// Interpretation of the localized indicator sets, reported with results.
    pub fn indicator_reading(&self) -> Option<&'static str> {
        match self {
            Variant::LocalizedEven(_) => Some(
                "f restricted to {x1 >= max(s0, theta_+^-1(2pi + theta(s0)))} U {x1 <= min(-s0, theta_-^-1(2pi + theta(-s0)))}; inverses taken on |z| >= s0",
            ),
            Variant::LocalizedOdd(_) => Some(
                "f~ restricted to {x1 >= max(s0, theta_+^-1(2pi + theta(s0)))} U {x1 <= min(-s0, theta_-^-1(-2pi + theta(-s0)))}; inverses taken on |z| >= s0",
            ),
            _ => None,
        }
    }
}

/// Lieb–Thirring constant used for `L_σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantPolicy<T> {
    /// `L^cl_{σ,3}`; only admissible for `σ ≥ 3/2`.
    Semiclassical,
    /// A caller-chosen multiple of `L^cl_{σ,3}`.
    Scaled(T),
}

/// Fixed splitting parameter or a request to minimise over it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonChoice<T> {
    Fixed(T),
    Optimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundQuery<T> {
    pub sigma: T,
    pub lambda: T,
    pub epsilon: EpsilonChoice<T>,
    pub variant: Variant<T>,
    pub constant_policy: ConstantPolicy<T>,
}

impl<T: Real> BoundQuery<T> {
    pub fn new(sigma: T, lambda: T, epsilon: T) -> Self {
        BoundQuery {
            sigma,
            lambda,
            epsilon: EpsilonChoice::Fixed(epsilon),
            variant: Variant::Even,
            constant_policy: ConstantPolicy::Semiclassical,
        }
    }

    pub fn optimized(sigma: T, lambda: T) -> Self {
        BoundQuery {
            epsilon: EpsilonChoice::Optimize,
            ..Self::new(sigma, lambda, T::lit(0.5))
        }
    }

    pub fn with_variant(mut self, variant: Variant<T>) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_policy(mut self, policy: ConstantPolicy<T>) -> Self {
        self.constant_policy = policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= T::zero()) || !self.sigma.is_finite() {
            return Err(Error::Precondition(format!("sigma = {} must be >= 0", self.sigma)));
        }
        if !(self.lambda >= T::zero()) || !self.lambda.is_finite() {
            return Err(Error::Precondition(format!("lambda = {} must be >= 0", self.lambda)));
        }
        if let EpsilonChoice::Fixed(e) = self.epsilon {
            if !(e > T::zero() && e < T::one()) {
                return Err(Error::Precondition(format!("epsilon = {e} must lie in (0, 1)")));
            }
        }
        if let Some(s0) = self.variant.s0() {
            if !(s0 >= T::zero()) || !s0.is_finite() {
                return Err(Error::Precondition(format!("s0 = {s0} must be >= 0")));
            }
        }
        l_sigma(self.constant_policy, self.sigma).map(|_| ())
    }
}

/// Interval pair `{x₁ ≤ 0 : εf < Λ}`, `{x₁ ≥ 0 : εf < Λ}` (closure).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Support<T> {
    pub minus: Interval<T>,
    pub plus: Interval<T>,
}

impl<T: Real> Support<T> {
    fn empty() -> Self {
        Support {
            minus: Interval::new(T::zero(), T::zero()),
            plus: Interval::new(T::zero(), T::zero()),
        }
    }

    fn from_ends(lo: T, hi: T) -> Self {
        Support {
            minus: Interval::new(lo.min(T::zero()), T::zero().min(hi)),
            plus: Interval::new(T::zero().max(lo), hi.max(T::zero())),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundResult<T> {
    pub sigma: T,
    pub lambda: T,
    pub rhs: T,
    pub epsilon_used: T,
    pub support: Support<T>,
    /// `∫ (εf - Λ)_-^{σ+3/2} dx₁` before prefactors.
    pub integral_value: T,
    pub l_sigma: T,
    pub variant: Variant<T>,
    pub indicator_reading: Option<&'static str>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticResult<T> {
    pub rhs: T,
    pub integral_value: T,
    pub epsilon_used: T,
    pub support: Support<T>,
    pub l_sigma: T,
    /// `sup |θ₊⁻¹(θ(x₁)-π) - x₁|` sampled on the plus side.
    pub k1: T,
    /// Same on the minus side.
    pub k2: T,
}

/// `L^cl_{σ,d} = Γ(σ+1) / ((4π)^{d/2} Γ(σ+1+d/2))`.
pub fn lt_constant<T: Real>(sigma: T, d: u32) -> T {
    let half_d = T::lit(f64::from(d) / 2.0);
    let one = T::one();
    let log = ln_gamma(sigma + one) - ln_gamma(sigma + one + half_d) - half_d * (T::lit(4.0) * T::PI()).ln();
    log.exp()
}

/// `L_σ` for the three-dimensional bound under the given policy.
pub fn l_sigma<T: Real>(policy: ConstantPolicy<T>, sigma: T) -> Result<T> {
    match policy {
        ConstantPolicy::Semiclassical => {
            if sigma < T::lit(1.5) {
                Err(Error::Policy(format!(
                    "the semiclassical constant is only valid for sigma >= 3/2 (got sigma = {sigma}); supply a scaled constant"
                )))
            } else {
                Ok(lt_constant(sigma, 3))
            }
        }
        ConstantPolicy::Scaled(c) => {
            if !(c > T::zero()) || !c.is_finite() {
                Err(Error::Policy(format!("scale factor {c} must be positive")))
            } else {
                Ok(c * lt_constant(sigma, 3))
            }
        }
    }
}

/// `f` (or its odd/localized counterpart) with its thresholds resolved.
#[derive(Debug, Clone)]
pub struct EffectivePotential<'a, T> {
    profile: &'a TwistProfile<T>,
    variant: Variant<T>,
    plus_base: T,
    minus_base: T,
    /// `f` is supported on `x₁ ≥ plus_start` and `x₁ ≤ minus_start`.
    pub plus_start: T,
    pub minus_start: T,
}

fn check_variant<T: Real>(profile: &TwistProfile<T>, variant: Variant<T>) -> Result<()> {
    let set = if variant.odd_reading() {
        ConditionSet::Odd
    } else {
        ConditionSet::Even
    };
    let s = variant.s0().unwrap_or(T::zero());
    match (profile.family(), set) {
        (Family::EvenPoly, ConditionSet::Even) | (Family::OddPoly, ConditionSet::Odd) => Ok(()),
        (Family::EvenPoly, ConditionSet::Odd) | (Family::OddPoly, ConditionSet::Even) => {
            Err(Error::Precondition(format!(
                "{:?} profile does not satisfy the conditions of the {} variant",
                profile.family(),
                variant.name()
            )))
        }
        (Family::Tabulated, _) => {
            let d = profile.domain().expect("tabulated domain");
            let half = d.hi.min(-d.lo);
            if !(half > s) {
                return Err(Error::Precondition(
                    "tabulated window must extend beyond s0 on both sides of the origin".into(),
                ));
            }
            if profile.conditions_hold(Interval::new(-half, half), set, s) {
                Ok(())
            } else {
                Err(Error::Precondition(format!(
                    "tabulated profile fails the {} conditions beyond s0 = {s}",
                    variant.name()
                )))
            }
        }
    }
}

impl<'a, T: Real> EffectivePotential<'a, T> {
    pub fn new(profile: &'a TwistProfile<T>, variant: Variant<T>) -> Result<Self> {
        check_variant(profile, variant)?;
        let two_pi = T::TAU();
        let (plus_base, minus_base) = match variant.s0() {
            Some(s0) => (s0, -s0),
            None => (T::zero(), T::zero()),
        };
        let theta_plus = profile.theta(plus_base)?;
        let theta_minus = profile.theta(minus_base)?;
        let plus_start = profile
            .branch_inverse_from(Branch::Plus, plus_base, theta_plus + two_pi)?
            .max(plus_base);
        let minus_target = if variant.odd_reading() {
            theta_minus - two_pi
        } else {
            theta_minus + two_pi
        };
        let minus_start = profile
            .branch_inverse_from(Branch::Minus, minus_base, minus_target)?
            .min(minus_base);
        Ok(EffectivePotential {
            profile,
            variant,
            plus_base,
            minus_base,
            plus_start,
            minus_start,
        })
    }

    pub fn variant(&self) -> Variant<T> {
        self.variant
    }

    /// Shifted preimage `θ±⁻¹(θ(x₁) ∓ π)` used by `f` and the K constants.
    fn shifted_preimage(&self, x1: T) -> Result<T> {
        let theta = self.profile.theta(x1)?;
        if x1 >= T::zero() {
            self.profile
                .branch_inverse_from(Branch::Plus, self.plus_base, theta - T::PI())
        } else {
            let target = if self.variant.odd_reading() {
                theta + T::PI()
            } else {
                theta - T::PI()
            };
            self.profile
                .branch_inverse_from(Branch::Minus, self.minus_base, target)
        }
    }

    pub fn value(&self, x1: T) -> Result<T> {
        if x1 >= self.plus_start || x1 <= self.minus_start {
            let z = self.shifted_preimage(x1)?;
            let d = self.profile.dtheta(z)?;
            Ok(d * d)
        } else {
            Ok(T::zero())
        }
    }

    /// Outermost point where `ε·f` reaches `level`, searching outward from
    /// the jump of `f` on the given side.
    pub(crate) fn crossing(&self, eps: T, level: T, branch: Branch) -> Result<T> {
        let (start, dir) = match branch {
            Branch::Plus => (self.plus_start, T::one()),
            Branch::Minus => (self.minus_start, -T::one()),
        };
        let h = |x: T| match self.value(x) {
            Ok(v) => eps * v - level,
            Err(_) => T::nan(),
        };
        if h(start) >= T::zero() {
            return Ok(start);
        }
        let step = T::lit(0.25) * (self.plus_start - self.minus_start).max(T::one());
        let (inner, outer) = roots::expand_bracket(h, start, dir, step, 200).ok_or_else(|| {
            Error::Precondition(format!(
                "eps*f never reaches {level} on the {} side (profile window too short?)",
                branch.name()
            ))
        })?;
        if inner == outer {
            return Ok(inner);
        }
        let root = roots::bracketed(h, inner, outer, T::zero())
            .ok_or_else(|| Error::Numerical("support crossing not bracketed".into()))?;
        Ok(root.x)
    }
}

/// `f(x₁)` for the given variant.
pub fn effective_f<T: Real>(profile: &TwistProfile<T>, variant: Variant<T>, x1: T) -> Result<T> {
    EffectivePotential::new(profile, variant)?.value(x1)
}

struct Integral<T> {
    value: T,
    support: Support<T>,
}

fn tail_integral<T: Real>(pot: &EffectivePotential<'_, T>, eps: T, lambda: T, sigma: T) -> Result<Integral<T>> {
    if lambda <= T::zero() {
        return Ok(Integral {
            value: T::zero(),
            support: Support::empty(),
        });
    }
    let hi = pot.crossing(eps, lambda, Branch::Plus)?;
    let lo = pot.crossing(eps, lambda, Branch::Minus)?;
    let power = sigma + T::lit(1.5);
    let mut failure: Option<Error> = None;
    let integrand = |x: T| match pot.value(x) {
        Ok(f) => neg_part(eps * f - lambda).powf(power),
        Err(e) => {
            failure.get_or_insert(e);
            T::zero()
        }
    };
    let mut points = vec![lo, pot.minus_start, pot.plus_start, hi];
    points.dedup();
    let q = quadrature::integrate(integrand, &points, T::tol(TOL_QUAD), T::zero());
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(Integral {
        value: q.value,
        support: Support::from_ends(lo, hi),
    })
}

fn prefactor<T: Real>(l: T, eps: T, area: T) -> T {
    l / (T::one() - eps).powf(T::lit(1.5)) * area
}

/// Right-hand side of the main bound at a fixed ε.
fn rhs_fixed<T: Real>(pot: &EffectivePotential<'_, T>, cs: &CrossSection<T>, q: &BoundQuery<T>, eps: T) -> Result<BoundResult<T>> {
    let l = l_sigma(q.constant_policy, q.sigma)?;
    let integral = tail_integral(pot, eps, q.lambda, q.sigma)?;
    Ok(BoundResult {
        sigma: q.sigma,
        lambda: q.lambda,
        rhs: prefactor(l, eps, cs.area()) * integral.value,
        epsilon_used: eps,
        support: integral.support,
        integral_value: integral.value,
        l_sigma: l,
        variant: q.variant,
        indicator_reading: q.variant.indicator_reading(),
    })
}

/// Evaluates the bound; `EpsilonChoice::Optimize` defers to
/// [`optimize_epsilon`].
pub fn berezin_rhs<T: Real>(profile: &TwistProfile<T>, cs: &CrossSection<T>, q: &BoundQuery<T>) -> Result<BoundResult<T>> {
    q.validate()?;
    let pot = EffectivePotential::new(profile, q.variant)?;
    match q.epsilon {
        EpsilonChoice::Fixed(eps) => rhs_fixed(&pot, cs, q, eps),
        EpsilonChoice::Optimize => minimise_over_epsilon(&pot, cs, q),
    }
}

fn minimise_over_epsilon<T: Real>(pot: &EffectivePotential<'_, T>, cs: &CrossSection<T>, q: &BoundQuery<T>) -> Result<BoundResult<T>> {
    if q.lambda <= T::zero() {
        return rhs_fixed(pot, cs, q, T::lit(0.5));
    }
    let eval = |e: T| rhs_fixed(pot, cs, q, e);
    let mut best = eval(T::lit(0.05))?;
    let mut best_k = 1;
    for k in 2..=19 {
        let r = eval(T::lit(0.05 * k as f64))?;
        if r.rhs < best.rhs {
            best = r;
            best_k = k;
        }
    }
    let centre = 0.05 * best_k as f64;
    let mut a = T::lit((centre - 0.05).max(1e-3));
    let mut b = T::lit((centre + 0.05).min(1.0 - 1e-3));
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    while b - a > T::lit(TOL_EPS) {
        if fc.rhs <= fd.rhs {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d)?;
        }
    }
    for cand in [fc, fd] {
        if cand.rhs < best.rhs {
            best = cand;
        }
    }
    Ok(best)
}

/// Minimises the bound over ε ∈ (0, 1): a coarse grid `0.05, …, 0.95`
/// followed by golden-section refinement to [`TOL_EPS`]. Returns `(ε*, rhs*)`.
pub fn optimize_epsilon<T: Real>(
    profile: &TwistProfile<T>,
    cs: &CrossSection<T>,
    sigma: T,
    lambda: T,
    variant: Variant<T>,
    policy: ConstantPolicy<T>,
) -> Result<(T, T)> {
    let q = BoundQuery {
        sigma,
        lambda,
        epsilon: EpsilonChoice::Optimize,
        variant,
        constant_policy: policy,
    };
    let r = berezin_rhs(profile, cs, &q)?;
    Ok((r.epsilon_used, r.rhs))
}

/// Large-Λ surrogate with `f` replaced by `θ̇²`, plus the shift constants
/// `K₁`, `K₂` sampled over the support.
pub fn asymptotic_rhs<T: Real>(profile: &TwistProfile<T>, cs: &CrossSection<T>, q: &BoundQuery<T>) -> Result<AsymptoticResult<T>> {
    q.validate()?;
    let pot = EffectivePotential::new(profile, q.variant)?;
    let eps = match q.epsilon {
        EpsilonChoice::Fixed(e) => e,
        EpsilonChoice::Optimize => minimise_over_epsilon(&pot, cs, q)?.epsilon_used,
    };
    let l = l_sigma(q.constant_policy, q.sigma)?;
    let (k1, k2) = shift_constants(&pot, q.lambda, eps)?;
    if q.lambda <= T::zero() {
        return Ok(AsymptoticResult {
            rhs: T::zero(),
            integral_value: T::zero(),
            epsilon_used: eps,
            support: Support::empty(),
            l_sigma: l,
            k1,
            k2,
        });
    }
    let s0 = q.variant.s0().unwrap_or(T::zero());
    let h = |x: T| match profile.dtheta(x) {
        Ok(d) => eps * d * d - q.lambda,
        Err(_) => T::nan(),
    };
    let find = |start: T, dir: T| -> Result<T> {
        if h(start) >= T::zero() {
            return Ok(start);
        }
        let (inner, outer) = roots::expand_bracket(h, start, dir, T::lit(0.25), 200).ok_or_else(|| {
            Error::Precondition("eps*theta'^2 never reaches lambda (profile window too short?)".into())
        })?;
        if inner == outer {
            return Ok(inner);
        }
        roots::bracketed(h, inner, outer, T::zero())
            .map(|r| r.x)
            .ok_or_else(|| Error::Numerical("surrogate support crossing not bracketed".into()))
    };
    let hi = find(s0, T::one())?;
    let lo = find(-s0, -T::one())?;
    let power = q.sigma + T::lit(1.5);
    let mut failure: Option<Error> = None;
    let integrand = |x: T| match profile.dtheta(x) {
        Ok(d) => neg_part(eps * d * d - q.lambda).powf(power),
        Err(e) => {
            failure.get_or_insert(e);
            T::zero()
        }
    };
    let mut points = vec![lo];
    for p in [-s0, T::zero(), s0, hi] {
        if p > *points.last().expect("nonempty") && p < hi || p == hi && hi > lo {
            points.push(p);
        }
    }
    let quad = quadrature::integrate(integrand, &points, T::tol(TOL_QUAD), T::zero());
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(AsymptoticResult {
        rhs: prefactor(l, eps, cs.area()) * quad.value,
        integral_value: quad.value,
        epsilon_used: eps,
        support: Support::from_ends(lo, hi),
        l_sigma: l,
        k1,
        k2,
    })
}

fn shift_constants<T: Real>(pot: &EffectivePotential<'_, T>, lambda: T, eps: T) -> Result<(T, T)> {
    const SAMPLES: usize = 256;
    let profile = pot.profile;
    let pi = T::PI();
    let t_plus = profile.theta(pot.plus_base)?;
    let t_minus = profile.theta(pot.minus_base)?;
    let from_plus = profile.branch_inverse_from(Branch::Plus, pot.plus_base, t_plus + pi)?;
    let minus_target = if pot.variant.odd_reading() {
        t_minus - pi
    } else {
        t_minus + pi
    };
    let from_minus = profile.branch_inverse_from(Branch::Minus, pot.minus_base, minus_target)?;
    let reach_plus = if lambda > T::zero() {
        pot.crossing(eps, lambda, Branch::Plus)?
    } else {
        pot.plus_start
    };
    let reach_minus = if lambda > T::zero() {
        pot.crossing(eps, lambda, Branch::Minus)?
    } else {
        pot.minus_start
    };
    let sup_over = |a: T, b: T| -> Result<T> {
        let mut m = T::zero();
        for i in 0..=SAMPLES {
            let x = a + (b - a) * T::from_usize_lossy(i) / T::from_usize_lossy(SAMPLES);
            let z = pot.shifted_preimage(x)?;
            m = m.max((z - x).abs());
        }
        Ok(m)
    };
    let k1 = sup_over(from_plus, reach_plus.max(from_plus))?;
    let k2 = sup_over(reach_minus.min(from_minus), from_minus)?;
    Ok((k1, k2))
}

/// Classical Berezin bound `L_σ Λ^{σ+3/2} |ω| N` for the tube truncated to
/// length `N`. The semiclassical constant is only accepted for `σ ≥ 1`.
pub fn classical_berezin<T: Real>(
    cs: &CrossSection<T>,
    tube_length: T,
    sigma: T,
    lambda: T,
    policy: ConstantPolicy<T>,
) -> Result<T> {
    if !(tube_length > T::zero()) {
        return Err(Error::Precondition(format!("tube length {tube_length} must be positive")));
    }
    if !(lambda >= T::zero()) {
        return Err(Error::Precondition(format!("lambda = {lambda} must be >= 0")));
    }
    if !(sigma >= T::zero()) {
        return Err(Error::Precondition(format!("sigma = {sigma} must be >= 0")));
    }
    let l = match policy {
        ConstantPolicy::Semiclassical if sigma < T::one() => {
            return Err(Error::Policy(format!(
                "the classical Berezin constant requires sigma >= 1 (got {sigma}); supply a scaled constant"
            )))
        }
        ConstantPolicy::Semiclassical => lt_constant(sigma, 3),
        ConstantPolicy::Scaled(c) if c > T::zero() => c * lt_constant(sigma, 3),
        ConstantPolicy::Scaled(c) => return Err(Error::Policy(format!("scale factor {c} must be positive"))),
    };
    Ok(l * lambda.powf(sigma + T::lit(1.5)) * cs.area() * tube_length)
}
