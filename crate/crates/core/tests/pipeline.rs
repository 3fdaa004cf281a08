//! End-to-end checks across profile, geometry, bound and eigensolver.

use approx::assert_relative_eq;
use proptest::prelude::*;
use twistube::bound::{berezin_rhs, BoundQuery};
use twistube::eigen::{build_mask, grid_spectrum, moment, verify_bound, GridSpec, SolverOptions};
use twistube::{CrossSection, CrossSectionF32, Interval, TwistProfile, TwistProfileF32};

fn square() -> CrossSection<f64> {
    CrossSection::rectangle(1.0, 2.0, -0.5, 0.5).unwrap()
}

fn parabola() -> TwistProfile<f64> {
    TwistProfile::even_poly(vec![0.0, 1.0]).unwrap()
}

fn flat() -> TwistProfile<f64> {
    TwistProfile::tabulated(vec![-10.0, 10.0], vec![0.0, 0.0], None).unwrap()
}

#[test]
fn twist_raises_the_ground_state() {
    let spec = GridSpec::new(Interval::new(-2.0, 2.0), 0.125, 0.125).unwrap();
    let opts = SolverOptions::default();
    let (_, twisted) = grid_spectrum(&parabola(), &square(), spec, 60.0, &opts).unwrap();
    let (_, straight) = grid_spectrum(&flat(), &square(), spec, 60.0, &opts).unwrap();
    assert!(!twisted.is_empty() && !straight.is_empty());
    assert!(twisted.eigenvalues[0] > straight.eigenvalues[0]);
    assert!(twisted.eigenvalues.iter().all(|&l| l > 0.0));
}

#[test]
fn enlarging_the_window_lowers_every_eigenvalue() {
    let opts = SolverOptions::default();
    let small = GridSpec::new(Interval::new(-1.5, 1.5), 0.125, 0.125).unwrap();
    let large = GridSpec::new(Interval::new(-2.5, 2.5), 0.125, 0.125).unwrap();
    let (_, a) = grid_spectrum(&parabola(), &square(), small, 70.0, &opts).unwrap();
    let (_, b) = grid_spectrum(&parabola(), &square(), large, 70.0, &opts).unwrap();
    assert!(b.len() >= a.len());
    for (lb, la) in b.eigenvalues.iter().zip(&a.eigenvalues) {
        assert!(lb <= &(la * (1.0 + 1e-10)), "{lb} > {la}");
    }
}

#[test]
fn moments_grow_with_lambda() {
    let spec = GridSpec::new(Interval::new(-2.0, 2.0), 0.125, 0.125).unwrap();
    let (_, s) = grid_spectrum(&parabola(), &square(), spec, 80.0, &SolverOptions::default()).unwrap();
    let mut prev = 0.0;
    for lambda in [20.0, 40.0, 60.0, 80.0] {
        let m = moment(&s, lambda, 1.5).unwrap();
        assert!(m >= prev);
        prev = m;
    }
    assert!(moment(&s, 90.0, 1.5).is_err());
}

#[test]
fn reference_verification_passes() {
    // Λ = 20 lies below the ground state of every truncation, so the
    // moment vanishes and the margin is the full bound
    let spec = GridSpec::new(Interval::new(-6.0, 6.0), 0.125, 0.125).unwrap();
    let q = BoundQuery::new(1.5, 20.0, 0.5);
    let r = verify_bound(&parabola(), &square(), &[spec, spec.refined()], &q, &SolverOptions::default()).unwrap();
    assert!(r.pass);
    assert_eq!(r.lhs_extrapolated, 0.0);
    assert_eq!(r.grids.len(), 2);
    assert!(r.grids.iter().all(|g| g.first_above.unwrap() > 20.0));
    assert_relative_eq!(r.margin, 586.854_507_577_335_5, max_relative = 1e-8);
}

#[test]
fn single_precision_pipeline_runs() {
    let p = TwistProfileF32::even_poly(vec![0.0, 1.0]).unwrap();
    let cs = CrossSectionF32::rectangle(1.0, 2.0, -0.5, 0.5).unwrap();
    let r = berezin_rhs(&p, &cs, &BoundQuery::new(1.5f32, 1.0, 0.5)).unwrap();
    assert_relative_eq!(r.rhs, 7.052_37e-2, max_relative = 1e-4);
    let spec = GridSpec::new(Interval::new(-1.0f32, 1.0), 0.25, 0.25).unwrap();
    assert!(!build_mask(&p, &cs, spec).unwrap().is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bound_is_monotone_in_lambda(l in 0.0f64..200.0, dl in 0.0f64..50.0, eps in 0.1f64..0.9) {
        let (p, cs) = (parabola(), square());
        let a = berezin_rhs(&p, &cs, &BoundQuery::new(1.5, l, eps)).unwrap().rhs;
        let b = berezin_rhs(&p, &cs, &BoundQuery::new(1.5, l + dl, eps)).unwrap().rhs;
        prop_assert!(b >= a * (1.0 - 1e-9));
    }

    #[test]
    fn bound_is_monotone_in_the_cross_section(scale in 1.0f64..1.5, l in 1.0f64..100.0) {
        let p = parabola();
        let small = CrossSection::rectangle(1.0, 2.0, -0.5, 0.5).unwrap();
        let big = CrossSection::rectangle(1.0, 2.0, -0.5 * scale, 0.5 * scale).unwrap();
        let q = BoundQuery::new(1.5, l, 0.5);
        let a = berezin_rhs(&p, &small, &q).unwrap().rhs;
        let b = berezin_rhs(&p, &big, &q).unwrap().rhs;
        prop_assert!(b >= a);
    }
}
