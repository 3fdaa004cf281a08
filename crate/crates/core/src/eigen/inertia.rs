//! Eigenvalue counting by Sylvester's law of inertia: the number of
//! negative pivots of `A - s I = L D Lᵀ` equals the number of eigenvalues
//! of `A` below `s`. The factorisation is stored in envelope (skyline)
//! form, which for grids numbered plane by plane costs about one plane's
//! worth of entries per row.

use super::sparse::SparseOperator;
use crate::scalar::Real;

/// Number of stored entries the factorisation of `op` would need.
pub fn envelope_size<T: Real>(op: &SparseOperator<T>) -> usize {
    (0..op.dim())
        .map(|i| {
            let first = op.row(i).map(|(j, _)| j).next().unwrap_or(i).min(i);
            i - first + 1
        })
        .sum()
}

/// Count of eigenvalues of `op` strictly below `shift`, or `None` when the
/// envelope would exceed `max_entries` or a pivot vanishes.
pub fn count_below<T: Real>(op: &SparseOperator<T>, shift: T, max_entries: usize) -> Option<usize> {
    let n = op.dim();
    if envelope_size(op) > max_entries {
        return None;
    }
    let first: Vec<usize> = (0..n)
        .map(|i| op.row(i).map(|(j, _)| j).next().unwrap_or(i).min(i))
        .collect();
    let mut offset = Vec::with_capacity(n + 1);
    offset.push(0);
    for i in 0..n {
        offset.push(offset[i] + i - first[i] + 1);
    }
    let mut env = vec![T::zero(); offset[n]];
    for i in 0..n {
        for (j, v) in op.row(i) {
            if j <= i {
                env[offset[i] + j - first[i]] = v;
            }
        }
        env[offset[i] + i - first[i]] -= shift;
    }
    let scale = (0..n).map(|i| env[offset[i] + i - first[i]].abs()).fold(T::zero(), T::max);
    let tiny = T::epsilon() * scale * T::lit(1e-3);
    let mut d = vec![T::zero(); n];
    let mut negatives = 0;
    for i in 0..n {
        let fi = first[i];
        let (done, rest) = env.split_at_mut(offset[i]);
        let row_i = &mut rest[..i - fi + 1];
        // row_i[j - fi] becomes g_ij = l_ij d_j
        for j in fi..i {
            let fj = first[j];
            let start = fi.max(fj);
            let row_j = &done[offset[j]..offset[j + 1]];
            let mut s = row_i[j - fi];
            for (g, l) in row_i[start - fi..j - fi].iter().zip(&row_j[start - fj..j - fj]) {
                s -= *g * *l;
            }
            row_i[j - fi] = s;
        }
        let mut di = row_i[i - fi];
        for j in fi..i {
            let g = row_i[j - fi];
            let l = g / d[j];
            di -= g * l;
            row_i[j - fi] = l;
        }
        if !(di.abs() > tiny) {
            return None;
        }
        row_i[i - fi] = di;
        d[i] = di;
        if di < T::zero() {
            negatives += 1;
        }
    }
    Some(negatives)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::dense::sym_eigen;
    use crate::eigen::grid::{build_mask, GridSpec};
    use crate::eigen::sparse::assemble_laplacian;
    use crate::scalar::Interval;
    use crate::section::CrossSection;
    use crate::twist::TwistProfile;

    #[test]
    fn matches_dense_count() {
        let p = TwistProfile::even_poly(vec![0.0, 1.0]).unwrap();
        let cs = CrossSection::rectangle(1.0, 2.0, -0.5, 0.5).unwrap();
        let h = 0.25;
        let mask = build_mask(&p, &cs, GridSpec::new(Interval::new(-2.0, 2.0), h, h).unwrap()).unwrap();
        let a = assemble_laplacian(&mask, h);
        let (w, _) = sym_eigen(&a.to_dense(), a.dim());
        for shift in [10.0, 40.5, 81.3, 150.7] {
            let expected = w.iter().filter(|&&l| l < shift).count();
            assert_eq!(count_below(&a, shift, usize::MAX), Some(expected), "shift {shift}");
        }
        assert_eq!(count_below(&a, 40.0, 10), None);
    }
}
