//! Tall dense blocks of vectors stored row-major (`n × m`), with reductions
//! summed in a fixed order so results do not depend on the thread count.

use rand::Rng;
use rayon::prelude::*;

use crate::scalar::Real;

/// Rows per reduction chunk; fixed so partial sums combine identically on
/// any number of threads.
const CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Block<T> {
    pub n: usize,
    pub m: usize,
    pub data: Vec<T>,
}

impl<T: Real> Block<T> {
    pub fn zeros(n: usize, m: usize) -> Self {
        Block {
            n,
            m,
            data: vec![T::zero(); n * m],
        }
    }

    pub fn random<R: Rng>(n: usize, m: usize, rng: &mut R) -> Self {
        let data = (0..n * m).map(|_| T::lit(rng.gen::<f64>() - 0.5)).collect();
        Block { n, m, data }
    }

    #[cfg(test)]
    pub fn from_columns(cols: &[Vec<T>]) -> Self {
        let m = cols.len();
        let n = cols.first().map_or(0, Vec::len);
        let mut b = Self::zeros(n, m);
        for (j, c) in cols.iter().enumerate() {
            for i in 0..n {
                b.data[i * m + j] = c[i];
            }
        }
        b
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    #[cfg(test)]
    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.n).map(|i| self.data[i * self.m + j]).collect()
    }

    /// Columns `[self | other]`.
    pub fn hcat(&self, other: &Block<T>) -> Block<T> {
        debug_assert_eq!(self.n, other.n);
        let m = self.m + other.m;
        let mut data = Vec::with_capacity(self.n * m);
        for i in 0..self.n {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Block { n: self.n, m, data }
    }

    pub fn select(&self, cols: &[usize]) -> Block<T> {
        let m = cols.len();
        let mut data = Vec::with_capacity(self.n * m);
        for i in 0..self.n {
            let r = self.row(i);
            data.extend(cols.iter().map(|&j| r[j]));
        }
        Block { n: self.n, m, data }
    }

    /// `selfᵀ · other` as a dense `m_a × m_b` row-major matrix.
    pub fn gram(&self, other: &Block<T>) -> Vec<T> {
        debug_assert_eq!(self.n, other.n);
        let (ma, mb) = (self.m, other.m);
        if ma == 0 || mb == 0 {
            return Vec::new();
        }
        let partials: Vec<Vec<T>> = self
            .data
            .par_chunks(CHUNK * ma)
            .zip(other.data.par_chunks(CHUNK * mb))
            .map(|(xa, xb)| {
                let mut acc = vec![T::zero(); ma * mb];
                for (ra, rb) in xa.chunks_exact(ma).zip(xb.chunks_exact(mb)) {
                    for (a, &va) in ra.iter().enumerate() {
                        let out = &mut acc[a * mb..(a + 1) * mb];
                        for (o, &vb) in out.iter_mut().zip(rb) {
                            *o += va * vb;
                        }
                    }
                }
                acc
            })
            .collect();
        let mut total = vec![T::zero(); ma * mb];
        for p in partials {
            for (t, v) in total.iter_mut().zip(p) {
                *t += v;
            }
        }
        total
    }

    /// `self · c` for a dense `m × k` row-major `c`.
    pub fn mul(&self, c: &[T], k: usize) -> Block<T> {
        debug_assert_eq!(c.len(), self.m * k);
        let mut out = Block::zeros(self.n, k);
        let m = self.m;
        if k == 0 || m == 0 {
            return out;
        }
        out.data
            .par_chunks_mut(CHUNK * k)
            .zip(self.data.par_chunks(CHUNK * m))
            .for_each(|(yo, xi)| {
                for (yr, xr) in yo.chunks_exact_mut(k).zip(xi.chunks_exact(m)) {
                    for (l, &v) in xr.iter().enumerate() {
                        let crow = &c[l * k..(l + 1) * k];
                        for (y, &cv) in yr.iter_mut().zip(crow) {
                            *y += v * cv;
                        }
                    }
                }
            });
        out
    }

    /// `self -= x · c`.
    pub fn sub_mul(&mut self, x: &Block<T>, c: &[T]) {
        debug_assert_eq!(c.len(), x.m * self.m);
        let (k, m) = (self.m, x.m);
        if k == 0 || m == 0 {
            return;
        }
        self.data
            .par_chunks_mut(CHUNK * k)
            .zip(x.data.par_chunks(CHUNK * m))
            .for_each(|(yo, xi)| {
                for (yr, xr) in yo.chunks_exact_mut(k).zip(xi.chunks_exact(m)) {
                    for (l, &v) in xr.iter().enumerate() {
                        let crow = &c[l * k..(l + 1) * k];
                        for (y, &cv) in yr.iter_mut().zip(crow) {
                            *y -= v * cv;
                        }
                    }
                }
            });
    }

    /// `self += other`.
    pub fn add_assign(&mut self, other: &Block<T>) {
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Euclidean norms of the columns.
    pub fn column_norms(&self) -> Vec<T> {
        let m = self.m;
        if m == 0 {
            return Vec::new();
        }
        let partials: Vec<Vec<T>> = self
            .data
            .par_chunks(CHUNK * m)
            .map(|x| {
                let mut acc = vec![T::zero(); m];
                for r in x.chunks_exact(m) {
                    for (a, &v) in acc.iter_mut().zip(r) {
                        *a += v * v;
                    }
                }
                acc
            })
            .collect();
        let mut total = vec![T::zero(); m];
        for p in partials {
            for (t, v) in total.iter_mut().zip(p) {
                *t += v;
            }
        }
        total.into_iter().map(|s| s.sqrt()).collect()
    }
}
