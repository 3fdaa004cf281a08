//! Locally optimal block preconditioned conjugate gradient iteration for the
//! lowest eigenpairs of a sparse SPD matrix.
//!
//! Converged leading Ritz pairs are locked: they leave the active block and
//! every later search direction is kept orthogonal to them, so a fixed-size
//! block can sweep through as many eigenvalues as lie below the cutoff.
//! Search directions are orthonormalised explicitly (two projection passes
//! followed by SVQB), which keeps the Rayleigh–Ritz step a standard
//! symmetric eigenproblem.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::block::Block;
use super::dense::sym_eigen;
use super::sparse::SparseOperator;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Directions whose scaled Gram eigenvalue falls below this fraction of the
/// largest are dropped as linearly dependent.
const SVQB_DROP: f64 = 1e-12;
/// Iterations between explicit re-orthonormalisations of the active block.
const REFRESH_EVERY: usize = 10;

pub(crate) struct LobpcgOptions<T> {
    pub tol: T,
    pub cutoff: T,
    pub block: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

pub(crate) struct LobpcgOutcome<T> {
    /// Locked eigenvalues in locking order with their residual norms.
    pub values: Vec<T>,
    pub residuals: Vec<T>,
    pub iterations: usize,
}

/// Orthonormal basis of the columns of `q` (SVQB), dropping near-dependent
/// directions.
fn svqb<T: Real>(q: &Block<T>) -> Block<T> {
    let k = q.m;
    if k == 0 {
        return q.clone();
    }
    let g = q.gram(q);
    let scale: Vec<T> = (0..k)
        .map(|i| {
            let d = g[i * k + i];
            if d > T::min_positive_value() {
                T::one() / d.sqrt()
            } else {
                T::zero()
            }
        })
        .collect();
    let mut gs = vec![T::zero(); k * k];
    for i in 0..k {
        for j in 0..k {
            gs[i * k + j] = g[i * k + j] * scale[i] * scale[j];
        }
    }
    let (theta, u) = sym_eigen(&gs, k);
    let top = theta.last().copied().unwrap_or(T::zero());
    if !(top > T::zero()) {
        return Block::zeros(q.n, 0);
    }
    let keep: Vec<usize> = (0..k).filter(|&j| theta[j] > T::lit(SVQB_DROP) * top).collect();
    let kk = keep.len();
    let mut c = vec![T::zero(); k * kk];
    for i in 0..k {
        for (col, &j) in keep.iter().enumerate() {
            c[i * kk + col] = scale[i] * u[i * k + j] / theta[j].sqrt();
        }
    }
    q.mul(&c, kk)
}

/// Removes components along every basis in `against`, then orthonormalises;
/// both steps are done twice.
fn orthonormalize_against<T: Real>(q: Block<T>, against: &[&Block<T>]) -> Block<T> {
    let mut q = q;
    for _ in 0..2 {
        for b in against {
            if b.m > 0 && q.m > 0 {
                let c = b.gram(&q);
                q.sub_mul(b, &c);
            }
        }
        q = svqb(&q);
    }
    q
}

/// Rows `r0..r1` of a row-major `rows × cols` matrix, restricted to the
/// first `take` columns.
fn sub_rows<T: Real>(c: &[T], cols: usize, r0: usize, r1: usize, take: usize) -> Vec<T> {
    let mut out = Vec::with_capacity((r1 - r0) * take);
    for i in r0..r1 {
        out.extend_from_slice(&c[i * cols..i * cols + take]);
    }
    out
}

struct Active<T> {
    x: Block<T>,
    ax: Block<T>,
    rho: Vec<T>,
}

/// Rayleigh–Ritz on the orthonormal basis `x`.
fn ritz_on<T: Real>(x: Block<T>, ax: Block<T>) -> Active<T> {
    let m = x.m;
    let h = x.gram(&ax);
    let (rho, c) = sym_eigen(&h, m);
    Active {
        x: x.mul(&c, m),
        ax: ax.mul(&c, m),
        rho,
    }
}

fn fresh_vectors<T: Real>(
    a: &SparseOperator<T>,
    count: usize,
    against: &[&Block<T>],
    rng: &mut ChaCha8Rng,
) -> (Block<T>, Block<T>) {
    let z = orthonormalize_against(Block::random(a.dim(), count, rng), against);
    let az = a.apply_block(&z);
    (z, az)
}

/// Computes eigenpairs in ascending order until one at or above
/// `opts.cutoff` has converged (or the whole space is exhausted).
pub(crate) fn lowest_until<T, P>(a: &SparseOperator<T>, precond: P, opts: &LobpcgOptions<T>) -> Result<LobpcgOutcome<T>>
where
    T: Real,
    P: Fn(&Block<T>) -> Block<T>,
{
    let n = a.dim();
    let m = opts.block.clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked = Block::<T>::zeros(n, 0);
    let mut values: Vec<T> = Vec::new();
    let mut residuals: Vec<T> = Vec::new();

    let (x, ax) = fresh_vectors(a, m, &[], &mut rng);
    let mut act = ritz_on(x, ax);
    let mut p: Option<Block<T>> = None;
    let done = |values: &[T]| values.last().is_some_and(|&v| v >= opts.cutoff);

    for it in 0..opts.max_iterations {
        let mut r = act.ax.clone();
        for i in 0..n {
            for j in 0..act.x.m {
                r.data[i * act.x.m + j] -= act.rho[j] * act.x.data[i * act.x.m + j];
            }
        }
        let norms = r.column_norms();
        let converged: Vec<bool> = norms
            .iter()
            .zip(&act.rho)
            .map(|(&rn, &l)| rn <= opts.tol * l.abs())
            .collect();
        let lead = converged.iter().take_while(|&&c| c).count();
        if lead > 0 {
            let lock: Vec<usize> = (0..lead).collect();
            locked = locked.hcat(&act.x.select(&lock));
            values.extend_from_slice(&act.rho[..lead]);
            residuals.extend_from_slice(&norms[..lead]);
            if done(&values) || locked.m >= n {
                return Ok(LobpcgOutcome {
                    values,
                    residuals,
                    iterations: it + 1,
                });
            }
            let keep: Vec<usize> = (lead..act.x.m).collect();
            let mut x = act.x.select(&keep);
            let mut ax = act.ax.select(&keep);
            p = p.map(|pb| {
                let cols: Vec<usize> = (lead.min(pb.m)..pb.m).collect();
                pb.select(&cols)
            });
            let refill = m.min(n - locked.m) - x.m;
            if refill > 0 {
                let (z, az) = fresh_vectors(a, refill, &[&locked, &x], &mut rng);
                x = x.hcat(&z);
                ax = ax.hcat(&az);
            }
            act = ritz_on(x, ax);
            continue;
        }

        if it > 0 && it % REFRESH_EVERY == 0 {
            let x = orthonormalize_against(act.x.clone(), &[&locked]);
            if x.m == act.x.m {
                let ax = a.apply_block(&x);
                act = ritz_on(x, ax);
                continue;
            }
        }

        let active: Vec<usize> = (0..act.x.m).filter(|&j| !converged[j]).collect();
        let w = precond(&r.select(&active));
        let q = match &p {
            Some(pb) if pb.m > 0 => w.hcat(pb),
            _ => w,
        };
        let mut q = orthonormalize_against(q, &[&locked, &act.x]);
        if q.m == 0 {
            let (z, _) = fresh_vectors(a, act.x.m, &[&locked, &act.x], &mut rng);
            q = z;
        }
        let aq = a.apply_block(&q);

        let (mx, mq) = (act.x.m, q.m);
        let s = mx + mq;
        let hxx = act.x.gram(&act.ax);
        let hxq = act.x.gram(&aq);
        let hqq = q.gram(&aq);
        let mut h = vec![T::zero(); s * s];
        for i in 0..mx {
            for j in 0..mx {
                h[i * s + j] = hxx[i * mx + j];
            }
            for j in 0..mq {
                h[i * s + mx + j] = hxq[i * mq + j];
                h[(mx + j) * s + i] = hxq[i * mq + j];
            }
        }
        for i in 0..mq {
            for j in 0..mq {
                h[(mx + i) * s + mx + j] = hqq[i * mq + j];
            }
        }
        let (theta, c) = sym_eigen(&h, s);
        let take = m.min(s).min(n - locked.m);
        let cx = sub_rows(&c, s, 0, mx, take);
        let cq = sub_rows(&c, s, mx, s, take);
        let mut x_new = act.x.mul(&cx, take);
        let mut ax_new = act.ax.mul(&cx, take);
        let p_new = q.mul(&cq, take);
        x_new.add_assign(&p_new);
        ax_new.add_assign(&aq.mul(&cq, take));
        act = Active {
            x: x_new,
            ax: ax_new,
            rho: theta[..take].to_vec(),
        };
        p = Some(p_new);
    }
    let mut partial: Vec<f64> = values.iter().map(|v| v.as_f64()).collect();
    partial.sort_by(|a, b| a.total_cmp(b));
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        converged: values.len(),
        wanted: values.len() + 1,
        partial,
    })
}
