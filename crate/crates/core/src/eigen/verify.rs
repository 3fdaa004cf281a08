//! Checks the bound against eigenvalue moments of truncated tubes.
//!
//! Truncating the tube adds Dirichlet walls, which can only raise
//! eigenvalues, so moments on a window never exceed those of the infinite
//! tube and must stay below the bound. Moments from two grids `h` and
//! `h/2` are combined by Richardson extrapolation for a second-order
//! scheme, `M = M_f + (M_f - M_c)/3`.

use serde::Serialize;

use super::grid::GridSpec;
use super::spectrum::{grid_spectrum, moment, SolverOptions, Spectrum};
use crate::bound::{berezin_rhs, BoundQuery, BoundResult, EffectivePotential, Variant};
use crate::error::{Error, Result};
use crate::scalar::{Interval, Real};
use crate::section::CrossSection;
use crate::twist::{Branch, TwistProfile};

/// Relative slack allowed between the extrapolated moment and the bound.
pub const TOL_VERIFY: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct GridRun<T> {
    pub h: T,
    pub nodes: usize,
    pub eigenvalues_below: usize,
    pub moment: T,
    pub first_above: Option<T>,
    pub inertia_count: Option<usize>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport<T> {
    pub sigma: T,
    pub lambda: T,
    pub epsilon_used: T,
    pub variant: Variant<T>,
    pub window: Interval<T>,
    pub grids: Vec<GridRun<T>>,
    pub lhs_extrapolated: T,
    pub rhs: T,
    pub margin: T,
    pub tol_verify: T,
    pub pass: bool,
}

/// Window `[x₋, x₊]` (multiples of `h`) outside of whose core `ε f ≥ 2Λ`,
/// widened by `margin` cells on each side.
pub fn auto_window<T: Real>(
    profile: &TwistProfile<T>,
    variant: Variant<T>,
    eps: T,
    lambda: T,
    h: T,
    margin: usize,
) -> Result<Interval<T>> {
    let pot = EffectivePotential::new(profile, variant)?;
    let (lo, hi) = if lambda > T::zero() {
        let level = T::lit(2.0) * lambda;
        (
            pot.crossing(eps, level, Branch::Minus)?,
            pot.crossing(eps, level, Branch::Plus)?,
        )
    } else {
        (pot.minus_start, pot.plus_start)
    };
    let pad = T::lit(margin as f64);
    let a = ((lo / h).floor() - pad) * h;
    let b = ((hi / h).ceil() + pad) * h;
    Ok(Interval::new(a, b))
}

fn check_refinement<T: Real>(specs: &[GridSpec<T>]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::Precondition("at least one grid is required".into()));
    }
    for w in specs.windows(2) {
        let ratio = w[0].h / w[1].h;
        if (ratio - T::lit(2.0)).abs() > T::lit(1e-9) || w[0].x1_range != w[1].x1_range {
            return Err(Error::Precondition(
                "grids must share the window and halve h from one to the next".into(),
            ));
        }
    }
    Ok(())
}

/// Moments on each grid and their extrapolation to `h → 0`.
fn extrapolate<T: Real>(moments: &[T]) -> T {
    match moments {
        [] => T::zero(),
        [only] => *only,
        [.., coarse, fine] => *fine + (*fine - *coarse) / T::lit(3.0),
    }
}

/// Computes spectra below `Λ` on every grid.
pub fn grid_spectra<T: Real>(
    profile: &TwistProfile<T>,
    cs: &CrossSection<T>,
    specs: &[GridSpec<T>],
    lambda: T,
    opts: &SolverOptions,
) -> Result<Vec<(usize, Spectrum<T>)>> {
    check_refinement(specs)?;
    specs
        .iter()
        .map(|&spec| {
            if lambda > T::zero() {
                let (mask, s) = grid_spectrum(profile, cs, spec, lambda, opts)?;
                Ok((mask.len(), s))
            } else {
                Ok((0, empty_spectrum(spec)))
            }
        })
        .collect()
}

fn empty_spectrum<T: Real>(spec: GridSpec<T>) -> Spectrum<T> {
    Spectrum {
        eigenvalues: Vec::new(),
        residuals: Vec::new(),
        cutoff: T::zero(),
        first_above: None,
        dimension: 0,
        grid: Some(spec),
        method: "none",
        iterations: 0,
        inertia_count: None,
    }
}

/// Compares precomputed spectra against a bound value. Spectra can be
/// shared between queries that differ only in `σ`.
pub fn verify_with_spectra<T: Real>(
    spectra: &[(usize, Spectrum<T>)],
    q: &BoundQuery<T>,
    bound: &BoundResult<T>,
    tol_verify: T,
) -> Result<VerificationReport<T>> {
    let mut grids = Vec::with_capacity(spectra.len());
    let mut moments = Vec::with_capacity(spectra.len());
    for (nodes, s) in spectra {
        let spec = s
            .grid
            .ok_or_else(|| Error::Precondition("spectrum carries no grid description".into()))?;
        let m = moment(s, q.lambda, q.sigma)?;
        moments.push(m);
        grids.push(GridRun {
            h: spec.h,
            nodes: *nodes,
            eigenvalues_below: s.eigenvalues.iter().filter(|&&l| l < q.lambda).count(),
            moment: m,
            first_above: s.first_above,
            inertia_count: s.inertia_count,
            iterations: s.iterations,
        });
    }
    let window = spectra
        .first()
        .and_then(|(_, s)| s.grid)
        .map(|g| g.x1_range)
        .ok_or_else(|| Error::Precondition("no spectra supplied".into()))?;
    let lhs = extrapolate(&moments).max(T::zero());
    let rhs = bound.rhs;
    Ok(VerificationReport {
        sigma: q.sigma,
        lambda: q.lambda,
        epsilon_used: bound.epsilon_used,
        variant: q.variant,
        window,
        grids,
        lhs_extrapolated: lhs,
        rhs,
        margin: rhs - lhs,
        tol_verify,
        pass: lhs <= rhs * (T::one() + tol_verify),
    })
}

/// Full pipeline for one query: bound, spectra on each grid, moments,
/// extrapolation and the pass flag.
pub fn verify_bound<T: Real>(
    profile: &TwistProfile<T>,
    cs: &CrossSection<T>,
    specs: &[GridSpec<T>],
    q: &BoundQuery<T>,
    opts: &SolverOptions,
) -> Result<VerificationReport<T>> {
    q.validate()?;
    let bound = berezin_rhs(profile, cs, q)?;
    let spectra = grid_spectra(profile, cs, specs, q.lambda, opts)?;
    verify_with_spectra(&spectra, q, &bound, T::lit(TOL_VERIFY))
}
