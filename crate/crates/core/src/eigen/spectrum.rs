//! Eigenvalues below a cutoff and their moments.

use serde::Serialize;

use super::block::Block;
use super::dense::sym_eigen;
use super::grid::{build_mask, GridMask, GridSpec};
use super::inertia;
use super::lobpcg::{lowest_until, LobpcgOptions};
use super::multigrid::Multigrid;
use super::sparse::{assemble_laplacian, SparseOperator};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::section::CrossSection;
use crate::twist::TwistProfile;

/// Relative residual required of every eigenpair.
pub const TOL_EIG: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub tol_eig: f64,
    pub seed: u64,
    /// Active block size of the iterative solver.
    pub block_size: usize,
    pub max_iterations: usize,
    /// Operators up to this dimension are diagonalised densely.
    pub dense_limit: usize,
    /// Largest envelope (stored entries) allowed for the inertia check.
    pub inertia_limit: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_eig: TOL_EIG,
            seed: 0x5eed,
            block_size: 12,
            max_iterations: 4000,
            dense_limit: 400,
            inertia_limit: 25_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum<T> {
    /// Eigenvalues strictly below `cutoff`, ascending, with multiplicity.
    pub eigenvalues: Vec<T>,
    /// `‖Av - λv‖` for unit `v`, aligned with `eigenvalues`.
    pub residuals: Vec<T>,
    pub cutoff: T,
    /// Smallest converged eigenvalue at or above the cutoff, when one was
    /// needed to close the search.
    pub first_above: Option<T>,
    pub dimension: usize,
    pub grid: Option<GridSpec<T>>,
    pub method: &'static str,
    pub iterations: usize,
    /// Eigenvalue count below the cutoff from an `LDLᵀ` inertia check.
    pub inertia_count: Option<usize>,
}

impl<T: Real> Spectrum<T> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

fn dense_spectrum<T: Real>(op: &SparseOperator<T>, cutoff: T) -> Spectrum<T> {
    let n = op.dim();
    let (w, v) = sym_eigen(&op.to_dense(), n);
    let mut eigenvalues = Vec::new();
    let mut residuals = Vec::new();
    let mut first_above = None;
    for (k, &l) in w.iter().enumerate() {
        if l >= cutoff {
            first_above = Some(l);
            break;
        }
        let vec: Vec<T> = (0..n).map(|i| v[i * n + k]).collect();
        let av = op.apply(&vec);
        let r = av
            .iter()
            .zip(&vec)
            .map(|(&a, &x)| (a - l * x) * (a - l * x))
            .sum::<T>()
            .sqrt();
        eigenvalues.push(l);
        residuals.push(r);
    }
    Spectrum {
        eigenvalues,
        residuals,
        cutoff,
        first_above,
        dimension: n,
        grid: None,
        method: "dense",
        iterations: 0,
        inertia_count: None,
    }
}

/// Every eigenvalue of `op` below `cutoff`, each with relative residual at
/// most `tol_eig`. Uses default solver options; a Gauss–Seidel
/// preconditioner is used unless the operator carries grid coordinates.
pub fn lowest_eigenvalues<T: Real>(op: &SparseOperator<T>, cutoff: T, tol_eig: f64) -> Result<Spectrum<T>> {
    let opts = SolverOptions {
        tol_eig,
        ..SolverOptions::default()
    };
    lowest_eigenvalues_with(op, cutoff, &opts)
}

pub fn lowest_eigenvalues_with<T: Real>(op: &SparseOperator<T>, cutoff: T, opts: &SolverOptions) -> Result<Spectrum<T>> {
    if !(cutoff > T::zero()) {
        return Err(Error::Precondition(format!("cutoff {cutoff} must be positive")));
    }
    let n = op.dim();
    if n == 0 {
        return Err(Error::Precondition("operator has dimension 0".into()));
    }
    if n <= opts.dense_limit {
        return Ok(dense_spectrum(op, cutoff));
    }
    let inertia_count = inertia::count_below(op, cutoff, opts.inertia_limit);
    let mg = op.coords().map(|c| Multigrid::new(op.clone(), c));
    let sgs = |b: &Block<T>| symmetric_gauss_seidel(op, b);
    let mut block = opts.block_size.max(1);
    let mut attempt = 0;
    loop {
        let lo = LobpcgOptions {
            tol: T::tol(opts.tol_eig),
            cutoff,
            block,
            max_iterations: opts.max_iterations,
            seed: opts.seed.wrapping_add(attempt),
        };
        let out = match &mg {
            Some(mg) => lowest_until(op, |b: &Block<T>| mg.apply(b), &lo)?,
            None => lowest_until(op, sgs, &lo)?,
        };
        let mut pairs: Vec<(T, T)> = out.values.iter().copied().zip(out.residuals.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite eigenvalues"));
        let first_above = pairs.iter().map(|p| p.0).find(|&l| l >= cutoff);
        let (eigenvalues, residuals): (Vec<T>, Vec<T>) = pairs.into_iter().filter(|p| p.0 < cutoff).unzip();
        match inertia_count {
            Some(c) if c != eigenvalues.len() && attempt < 2 => {
                // a missed eigenvalue: retry with a wider block and new start
                attempt += 1;
                block *= 2;
                continue;
            }
            Some(c) if c != eigenvalues.len() => {
                return Err(Error::Numerical(format!(
                    "inertia count {c} below {cutoff} disagrees with {} computed eigenvalues",
                    eigenvalues.len()
                )));
            }
            _ => {}
        }
        return Ok(Spectrum {
            eigenvalues,
            residuals,
            cutoff,
            first_above,
            dimension: n,
            grid: None,
            method: if mg.is_some() { "lobpcg+multigrid" } else { "lobpcg+sgs" },
            iterations: out.iterations,
            inertia_count,
        });
    }
}

fn symmetric_gauss_seidel<T: Real>(a: &SparseOperator<T>, b: &Block<T>) -> Block<T> {
    let m = b.m;
    let n = a.dim();
    let diag = a.diagonal();
    let mut x = Block::zeros(n, m);
    let mut acc = vec![T::zero(); m];
    let order: Vec<usize> = (0..n).chain((0..n).rev()).collect();
    for i in order {
        acc.copy_from_slice(b.row(i));
        for (j, v) in a.row(i) {
            if j != i {
                for (s, &xj) in acc.iter_mut().zip(&x.data[j * m..(j + 1) * m]) {
                    *s -= v * xj;
                }
            }
        }
        for (xi, &s) in x.data[i * m..(i + 1) * m].iter_mut().zip(&acc) {
            *xi = s / diag[i];
        }
    }
    x
}

/// Builds the mask and operator for `spec` and solves below `cutoff`.
pub fn grid_spectrum<T: Real>(
    profile: &TwistProfile<T>,
    cs: &CrossSection<T>,
    spec: GridSpec<T>,
    cutoff: T,
    opts: &SolverOptions,
) -> Result<(GridMask<T>, Spectrum<T>)> {
    let mask = build_mask(profile, cs, spec)?;
    let op = assemble_laplacian(&mask, spec.h);
    let mut s = lowest_eigenvalues_with(&op, cutoff, opts)?;
    s.grid = Some(spec);
    Ok((mask, s))
}

/// `Σ_k (λ_k - Λ)_-^σ` over the eigenvalues below `Λ`; for `σ = 0` this
/// counts them.
pub fn moment<T: Real>(spec: &Spectrum<T>, lambda: T, sigma: T) -> Result<T> {
    if spec.cutoff < lambda {
        return Err(Error::Incomplete {
            cutoff: spec.cutoff.as_f64(),
            lambda: lambda.as_f64(),
        });
    }
    Ok(spec
        .eigenvalues
        .iter()
        .filter(|&&l| l < lambda)
        .map(|&l| if sigma == T::zero() { T::one() } else { (lambda - l).powf(sigma) })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Interval;
    use std::f64::consts::PI;

    fn listed(values: &[f64], cutoff: f64) -> Spectrum<f64> {
        Spectrum {
            eigenvalues: values.to_vec(),
            residuals: vec![0.0; values.len()],
            cutoff,
            first_above: None,
            dimension: values.len(),
            grid: None,
            method: "dense",
            iterations: 0,
            inertia_count: None,
        }
    }

    #[test]
    fn moment_examples() {
        let s = listed(&[1.0, 2.0, 5.0], 10.0);
        assert_eq!(moment(&s, 3.0, 1.0).unwrap(), 3.0);
        assert_eq!(moment(&s, 3.0, 0.0).unwrap(), 2.0);
        assert_eq!(moment(&s, 0.5, 1.5).unwrap(), 0.0);
        assert!(matches!(moment(&s, 11.0, 1.0), Err(Error::Incomplete { .. })));
    }

    #[test]
    fn moment_monotone_in_lambda() {
        let s = listed(&[1.0, 2.5, 2.5, 4.0], 10.0);
        let mut prev = 0.0;
        for k in 0..40 {
            let lam = 0.25 * k as f64;
            let m = moment(&s, lam, 1.5).unwrap();
            assert!(m >= prev);
            prev = m;
        }
    }

    fn straight_box(h: f64) -> (TwistProfile<f64>, CrossSection<f64>, GridSpec<f64>) {
        let p = TwistProfile::tabulated(vec![-1.0, 5.0], vec![0.0, 0.0], None).unwrap();
        let cs = CrossSection::rectangle(1.0, 2.0, -0.5, 0.5).unwrap();
        (p, cs, GridSpec::new(Interval::new(0.0, 4.0), h, h).unwrap())
    }

    /// Discrete eigenvalues of the 7-point stencil on the box, exactly.
    fn discrete_box(h: f64, cutoff: f64) -> Vec<f64> {
        let f = |k: usize, len: f64| 4.0 / (h * h) * (k as f64 * PI * h / (2.0 * len)).sin().powi(2);
        let mut out = Vec::new();
        for k in 1..(4.0 / h) as usize {
            for m in 1..(1.0 / h) as usize {
                for n in 1..(1.0 / h) as usize {
                    let l = f(k, 4.0) + f(m, 1.0) + f(n, 1.0);
                    if l < cutoff {
                        out.push(l);
                    }
                }
            }
        }
        out.sort_by(|a, b| a.total_cmp(b));
        out
    }

    #[test]
    fn straight_box_matches_discrete_formula() {
        let h = 1.0 / 8.0;
        let (p, cs, spec) = straight_box(h);
        let (_, s) = grid_spectrum(&p, &cs, spec, 60.0, &SolverOptions::default()).unwrap();
        let expected = discrete_box(h, 60.0);
        assert_eq!(s.eigenvalues.len(), expected.len());
        for (a, b) in s.eigenvalues.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-7 * b, "{a} vs {b}");
        }
        assert!(s.first_above.unwrap() >= 60.0);
        assert_eq!(s.inertia_count, Some(expected.len()));
        for (r, l) in s.residuals.iter().zip(&s.eigenvalues) {
            assert!(*r <= 1e-8 * l);
        }
    }

    #[test]
    fn dense_and_iterative_paths_agree() {
        let p = TwistProfile::even_poly(vec![0.0, 1.0]).unwrap();
        let cs = CrossSection::rectangle(1.0, 2.0, -0.5, 0.5).unwrap();
        let spec = GridSpec::new(Interval::new(-2.0, 2.0), 0.25, 0.25).unwrap();
        let mask = build_mask(&p, &cs, spec).unwrap();
        let op = assemble_laplacian(&mask, 0.25);
        assert!(op.dim() > 100);
        let dense: Spectrum<f64> = lowest_eigenvalues_with(&op, 80.0, &SolverOptions { dense_limit: usize::MAX, ..Default::default() }).unwrap();
        let iter = lowest_eigenvalues_with(&op, 80.0, &SolverOptions { dense_limit: 0, ..Default::default() }).unwrap();
        assert_eq!(dense.len(), iter.len());
        for (a, b) in dense.eigenvalues.iter().zip(&iter.eigenvalues) {
            assert!((a - b).abs() < 1e-7 * a, "{a} vs {b}");
        }
    }

    #[test]
    fn single_node_and_empty_cases() {
        let op = SparseOperator::from_rows(1, vec![vec![(0, 96.0)]]);
        let s = lowest_eigenvalues(&op, 160.0, TOL_EIG).unwrap();
        assert_eq!(s.eigenvalues, vec![96.0]);
        let s = lowest_eigenvalues(&op, 50.0, TOL_EIG).unwrap();
        assert!(s.is_empty());
        assert!(lowest_eigenvalues(&op, 0.0, TOL_EIG).is_err());
    }

    #[test]
    fn repeated_runs_are_bitwise_identical() {
        let (p, cs, spec) = straight_box(1.0 / 8.0);
        let a = grid_spectrum(&p, &cs, spec, 45.0, &SolverOptions::default()).unwrap().1;
        let b = grid_spectrum(&p, &cs, spec, 45.0, &SolverOptions::default()).unwrap().1;
        assert_eq!(a, b);
    }
}
