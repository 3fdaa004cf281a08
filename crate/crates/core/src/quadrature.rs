//! Globally adaptive Gauss–Kronrod (7, 15) quadrature with user-supplied
//! breakpoints.
//!
//! Breakpoints become mandatory panel boundaries, so integrands with jump
//! discontinuities at known locations keep the full order of the rule on
//! every panel. Panels are refined in a fixed order (largest error first,
//! ties broken by position) and the final sum runs left to right, which
//! makes the result independent of any outside parallelism.

use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

// Gauss 7-point weights at XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

fn gk15<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> Panel<T> {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let radius = half * (b - a);
    let fc = f(center);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = radius * T::lit(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kronrod += T::lit(WGK[j]) * pair;
        if j % 2 == 1 {
            gauss += T::lit(WG[j / 2]) * pair;
        }
    }
    Panel {
        a,
        b,
        value: kronrod * radius,
        error: ((kronrod - gauss) * radius).abs(),
    }
}

/// Result of [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Quadrature<T> {
    pub value: T,
    pub error_estimate: T,
    pub evaluations: usize,
    pub panels: usize,
}

/// Integrates `f` over `[points[0], points[last]]`, treating every interior
/// entry of `points` (sorted ascending) as a panel boundary. Refinement stops
/// when the summed error estimate is below `max(abs_tol, rel_tol·|I|)` or the
/// panel budget is exhausted.
pub fn integrate<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    points: &[T],
    rel_tol: T,
    abs_tol: T,
) -> Quadrature<T> {
    const MAX_PANELS: usize = 4000;
    let mut panels: Vec<Panel<T>> = points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gk15(&mut f, w[0], w[1]))
        .collect();
    let mut evaluations = 15 * panels.len();
    if panels.is_empty() {
        return Quadrature {
            value: T::zero(),
            error_estimate: T::zero(),
            evaluations: 0,
            panels: 0,
        };
    }
    loop {
        let total: T = panels.iter().map(|p| p.value).sum();
        let err: T = panels.iter().map(|p| p.error).sum();
        let target = abs_tol.max(rel_tol * total.abs());
        if err <= target || panels.len() >= MAX_PANELS {
            return Quadrature {
                value: total,
                error_estimate: err,
                evaluations,
                panels: panels.len(),
            };
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |acc, (i, p)| {
                if p.error > acc.1 {
                    (i, p.error)
                } else {
                    acc
                }
            });
        let p = panels[worst];
        let mid = T::lit(0.5) * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            // cannot split further; accept as is
            panels[worst].error = T::zero();
            continue;
        }
        let left = gk15(&mut f, p.a, mid);
        let right = gk15(&mut f, mid, p.b);
        evaluations += 30;
        panels[worst] = left;
        panels.insert(worst + 1, right);
    }
}
