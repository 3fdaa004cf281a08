//! Geometric multigrid V-cycle on masked grids, used as the eigensolver
//! preconditioner.
//!
//! Coarse nodes are the fine nodes with all-even integer coordinates.
//! Prolongation is trilinear, restricted to coarse nodes that exist, and
//! coarse operators are Galerkin products `Pᵀ A P`. Forward Gauss–Seidel
//! before and backward Gauss–Seidel after the coarse correction keep the
//! cycle symmetric, so it is a valid preconditioner for symmetric solvers.

use std::collections::HashMap;

use super::block::Block;
use super::dense::{cholesky, cholesky_solve};
use super::sparse::SparseOperator;
use crate::scalar::Real;

/// Levels at or below this size are solved by dense Cholesky.
const COARSE_MAX: usize = 1200;
const MAX_LEVELS: usize = 12;
const SMOOTHING_STEPS: usize = 1;

struct Level<T> {
    a: SparseOperator<T>,
    diag: Vec<T>,
    /// Prolongation to this level from the next coarser one.
    p: Option<SparseOperator<T>>,
    r: Option<SparseOperator<T>>,
}

enum CoarseSolver<T> {
    Cholesky { l: Vec<T>, n: usize },
    /// Symmetric Gauss–Seidel sweeps when the coarsest level is too large
    /// or not numerically positive definite.
    Sweeps(usize),
}

pub(crate) struct Multigrid<T> {
    levels: Vec<Level<T>>,
    coarse: CoarseSolver<T>,
}

fn prolongation<T: Real>(fine: &[[i32; 3]], coarse: &HashMap<[i32; 3], u32>, nc: usize) -> SparseOperator<T> {
    let half = T::lit(0.5);
    let rows = fine
        .iter()
        .map(|c| {
            let options = c.map(|v| {
                if v.rem_euclid(2) == 0 {
                    vec![(v / 2, T::one())]
                } else {
                    vec![((v - 1).div_euclid(2), half), ((v + 1).div_euclid(2), half)]
                }
            });
            let mut row = Vec::with_capacity(8);
            for &(a, wa) in &options[0] {
                for &(b, wb) in &options[1] {
                    for &(d, wd) in &options[2] {
                        if let Some(&idx) = coarse.get(&[a, b, d]) {
                            row.push((idx, wa * wb * wd));
                        }
                    }
                }
            }
            row
        })
        .collect();
    SparseOperator::from_rows(nc, rows)
}

impl<T: Real> Multigrid<T> {
    pub fn new(a: SparseOperator<T>, coords: &[[i32; 3]]) -> Self {
        let mut levels = Vec::new();
        let mut a = a;
        let mut coords = coords.to_vec();
        loop {
            let n = a.dim();
            let coarse: Vec<[i32; 3]> = coords
                .iter()
                .filter(|c| c.iter().all(|v| v.rem_euclid(2) == 0))
                .map(|c| c.map(|v| v / 2))
                .collect();
            let stop = n <= COARSE_MAX
                || levels.len() + 1 >= MAX_LEVELS
                || coarse.is_empty()
                || coarse.len() * 10 > n * 7;
            if stop {
                let diag = a.diagonal();
                levels.push(Level { a, diag, p: None, r: None });
                break;
            }
            let lookup: HashMap<[i32; 3], u32> = coarse.iter().enumerate().map(|(i, c)| (*c, i as u32)).collect();
            let p = prolongation(&coords, &lookup, coarse.len());
            let r = p.transpose();
            let ac = r.matmul(&a.matmul(&p));
            let diag = a.diagonal();
            levels.push(Level {
                a,
                diag,
                p: Some(p),
                r: Some(r),
            });
            a = ac;
            coords = coarse;
        }
        let last = &levels.last().expect("at least one level").a;
        let n = last.dim();
        let coarse = if n <= COARSE_MAX {
            cholesky(&last.to_dense(), n).map_or(CoarseSolver::Sweeps(8), |l| CoarseSolver::Cholesky { l, n })
        } else {
            CoarseSolver::Sweeps(8)
        };
        Multigrid { levels, coarse }
    }

    #[cfg(test)]
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// One V-cycle applied to every column of `b` with a zero initial guess.
    pub fn apply(&self, b: &Block<T>) -> Block<T> {
        self.cycle(0, b)
    }

    fn cycle(&self, lvl: usize, b: &Block<T>) -> Block<T> {
        let level = &self.levels[lvl];
        let mut x = Block::zeros(b.n, b.m);
        let (Some(p), Some(r)) = (&level.p, &level.r) else {
            match &self.coarse {
                CoarseSolver::Cholesky { l, n } => {
                    x.data.copy_from_slice(&b.data);
                    cholesky_solve(l, *n, &mut x.data, b.m);
                }
                CoarseSolver::Sweeps(k) => {
                    for _ in 0..*k {
                        gauss_seidel(&level.a, &level.diag, &mut x, b, true);
                        gauss_seidel(&level.a, &level.diag, &mut x, b, false);
                    }
                }
            }
            return x;
        };
        for _ in 0..SMOOTHING_STEPS {
            gauss_seidel(&level.a, &level.diag, &mut x, b, true);
        }
        let mut res = level.a.apply_block(&x);
        for (rv, &bv) in res.data.iter_mut().zip(&b.data) {
            *rv = bv - *rv;
        }
        let rc = r.apply_block(&res);
        let ec = self.cycle(lvl + 1, &rc);
        x.add_assign(&p.apply_block(&ec));
        for _ in 0..SMOOTHING_STEPS {
            gauss_seidel(&level.a, &level.diag, &mut x, b, false);
        }
        x
    }
}

/// One Gauss–Seidel sweep on all columns at once, forward or backward.
fn gauss_seidel<T: Real>(a: &SparseOperator<T>, diag: &[T], x: &mut Block<T>, b: &Block<T>, forward: bool) {
    let m = x.m;
    let n = a.dim();
    let mut acc = vec![T::zero(); m];
    let mut step = |i: usize| {
        acc.copy_from_slice(b.row(i));
        for (j, v) in a.row(i) {
            if j != i {
                for (s, &xj) in acc.iter_mut().zip(&x.data[j * m..(j + 1) * m]) {
                    *s -= v * xj;
                }
            }
        }
        let inv = T::one() / diag[i];
        for (xi, &s) in x.data[i * m..(i + 1) * m].iter_mut().zip(&acc) {
            *xi = s * inv;
        }
    };
    if forward {
        (0..n).for_each(&mut step);
    } else {
        (0..n).rev().for_each(&mut step);
    }
}
