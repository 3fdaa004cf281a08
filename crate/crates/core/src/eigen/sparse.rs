//! Compressed-row sparse matrices and the 7-point Dirichlet Laplacian.

use rayon::prelude::*;

use super::block::Block;
use super::grid::GridMask;
use crate::scalar::Real;

/// Rows per parallel task in products; fixed for reproducible scheduling.
const ROW_CHUNK: usize = 512;

/// Square or rectangular CSR matrix with sorted column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator<T> {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<T>,
    /// Integer grid coordinates of each row's node, when assembled on a grid.
    coords: Option<Vec<[i32; 3]>>,
}

impl<T: Real> SparseOperator<T> {
    /// Builds from per-row `(column, value)` lists; duplicates are summed.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(u32, T)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        let nrows = rows.len();
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            let mut last: Option<u32> = None;
            for (c, v) in r {
                debug_assert!((c as usize) < cols);
                if last == Some(c) {
                    *values.last_mut().expect("entry") += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseOperator {
            rows: nrows,
            cols,
            row_ptr,
            col_idx,
            values,
            coords: None,
        }
    }

    pub fn coords(&self) -> Option<&[[i32; 3]]> {
        self.coords.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of row `i`, columns ascending.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().map(|&c| c as usize).zip(self.values[r].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows)
            .map(|i| self.row(i).find(|&(c, _)| c == i).map_or(T::zero(), |e| e.1))
            .collect()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.row(i).find(|&(c, _)| c == j).map_or(T::zero(), |e| e.1)
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.rows];
        y.par_chunks_mut(ROW_CHUNK).enumerate().for_each(|(c, ys)| {
            for (o, yi) in ys.iter_mut().enumerate() {
                let i = c * ROW_CHUNK + o;
                let mut s = T::zero();
                for (j, a) in self.row(i) {
                    s += a * x[j];
                }
                *yi = s;
            }
        });
        y
    }

    /// `Y = A X` for a row-major block.
    pub(crate) fn apply_block(&self, x: &Block<T>) -> Block<T> {
        let m = x.m;
        let mut y = Block::zeros(self.rows, m);
        if m == 0 {
            return y;
        }
        y.data.par_chunks_mut(ROW_CHUNK * m).enumerate().for_each(|(c, ys)| {
            for (o, yr) in ys.chunks_exact_mut(m).enumerate() {
                let i = c * ROW_CHUNK + o;
                for (j, a) in self.row(i) {
                    for (yv, &xv) in yr.iter_mut().zip(x.row(j)) {
                        *yv += a * xv;
                    }
                }
            }
        });
        y
    }

    pub fn transpose(&self) -> Self {
        let mut rows: Vec<Vec<(u32, T)>> = vec![Vec::new(); self.cols];
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                rows[j].push((i as u32, v));
            }
        }
        Self::from_rows(self.rows, rows)
    }

    /// Sparse product `self · other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let rows: Vec<Vec<(u32, T)>> = (0..self.rows)
            .into_par_iter()
            .map(|i| {
                let mut acc: Vec<(u32, T)> = Vec::new();
                for (k, a) in self.row(i) {
                    for (j, b) in other.row(k) {
                        acc.push((j as u32, a * b));
                    }
                }
                acc
            })
            .collect();
        Self::from_rows(other.cols, rows)
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| self.row(i).all(|(j, v)| (self.get(j, i) - v).abs() <= tol))
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.rows * self.cols];
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                d[i * self.cols + j] = v;
            }
        }
        d
    }
}

/// 7-point finite-difference `-Δ` on the masked nodes; neighbours outside
/// the mask carry homogeneous Dirichlet data.
pub fn assemble_laplacian<T: Real>(mask: &GridMask<T>, h: T) -> SparseOperator<T> {
    let inv_h2 = T::one() / (h * h);
    let diag = T::lit(6.0) * inv_h2;
    let rows: Vec<Vec<(u32, T)>> = (0..mask.len())
        .into_par_iter()
        .map(|eq| {
            let [i, j, k] = mask.node(eq).map(i64::from);
            let mut row = vec![(eq as u32, diag)];
            for (di, dj, dk) in [(-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1)] {
                if let Some(nb) = mask.equation_at(i + di, j + dj, k + dk) {
                    row.push((nb as u32, -inv_h2));
                }
            }
            row
        })
        .collect();
    let mut op = SparseOperator::from_rows(mask.len(), rows);
    op.coords = Some(mask.nodes().to_vec());
    op
}
