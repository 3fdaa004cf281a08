//! One function per subcommand. Each reads the validated configuration,
//! computes, and hands its tables and records to the emitter.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use twistube::bound::{asymptotic_rhs, berezin_rhs, classical_berezin, BoundQuery, EpsilonChoice, Support, Variant};
use twistube::eigen::{
    auto_window, build_mask, grid_spectra, grid_spectrum, verify_with_spectra, GridSpec, MaskHeader, SolverOptions, Spectrum,
    VerificationReport, TOL_VERIFY,
};
use twistube::slice::{check_friedrichs, check_slice_laws, slice_intervals, FriedrichsReport, SliceLawReport};
use twistube::{Interval, Point};

use crate::config::{GridConfig, RunConfig, WindowChoice};
use crate::error::CliError;
use crate::output::{num, Emitter};

/// Friedrichs comparison tolerance used by the `slices` command.
const TOL_FRIEDRICHS: f64 = 1e-4;

fn query(cfg: &RunConfig, sigma: f64, lambda: f64) -> BoundQuery<f64> {
    BoundQuery {
        sigma,
        lambda,
        epsilon: cfg.epsilon,
        variant: cfg.variant,
        constant_policy: cfg.policy,
    }
}

#[derive(Serialize)]
struct Constants {
    #[serde(rename = "L_sigma")]
    l_sigma: f64,
    #[serde(rename = "K1")]
    k1: f64,
    #[serde(rename = "K2")]
    k2: f64,
}

#[derive(Serialize)]
struct BoundRecord {
    sigma: f64,
    lambda: f64,
    epsilon_used: f64,
    variant: Variant<f64>,
    indicator_reading: Option<&'static str>,
    rhs: f64,
    integral_value: f64,
    support: Support<f64>,
    constants: Constants,
    asymptotic_rhs: f64,
    ratio: f64,
    tube_length: f64,
    classical_berezin: Option<f64>,
}

/// `rhs / asymptotic`, taken as 0 when both vanish (`Λ = 0`).
fn ratio(rhs: f64, asym: f64) -> f64 {
    if asym == 0.0 && rhs == 0.0 {
        0.0
    } else {
        rhs / asym
    }
}

fn bound_records(cfg: &RunConfig) -> Result<Vec<BoundRecord>, CliError> {
    let mut out = Vec::new();
    for &sigma in &cfg.sigma {
        for &lambda in &cfg.lambda {
            let q = query(cfg, sigma, lambda);
            let b = berezin_rhs(&cfg.profile, &cfg.cross_section, &q)?;
            // the surrogate uses the same ε as the bound it is compared with
            let qa = BoundQuery {
                epsilon: EpsilonChoice::Fixed(b.epsilon_used),
                ..q
            };
            let a = asymptotic_rhs(&cfg.profile, &cfg.cross_section, &qa)?;
            let classical = classical_berezin(&cfg.cross_section, cfg.tube_length, sigma, lambda, cfg.policy).ok();
            out.push(BoundRecord {
                sigma,
                lambda,
                epsilon_used: b.epsilon_used,
                variant: b.variant,
                indicator_reading: b.indicator_reading,
                rhs: b.rhs,
                integral_value: b.integral_value,
                support: b.support,
                constants: Constants {
                    l_sigma: b.l_sigma,
                    k1: a.k1,
                    k2: a.k2,
                },
                asymptotic_rhs: a.rhs,
                ratio: ratio(b.rhs, a.rhs),
                tube_length: cfg.tube_length,
                classical_berezin: classical,
            });
        }
    }
    Ok(out)
}

pub fn bound(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let records = bound_records(cfg)?;
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                num(r.sigma),
                num(r.lambda),
                num(r.epsilon_used),
                num(r.rhs),
                num(r.asymptotic_rhs),
                num(r.ratio),
                r.classical_berezin.map(num).unwrap_or_default(),
                num(r.integral_value),
            ]
        })
        .collect();
    em.csv(
        "bound.csv",
        &["sigma", "lambda", "epsilon_used", "rhs", "asymptotic_rhs", "ratio", "classical_berezin", "integral_value"],
        &rows,
    )?;
    em.json("bound.json", "bound", records)
}

pub fn asymptotics(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let records = bound_records(cfg)?;
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                num(r.sigma),
                num(r.lambda),
                num(r.epsilon_used),
                num(r.rhs),
                num(r.asymptotic_rhs),
                num(r.ratio),
                num(r.constants.k1),
                num(r.constants.k2),
            ]
        })
        .collect();
    em.csv(
        "asymptotics.csv",
        &["sigma", "lambda", "epsilon_used", "rhs", "asymptotic_rhs", "ratio", "K1", "K2"],
        &rows,
    )?;
    em.json("asymptotics.json", "asymptotics", records)
}

#[derive(Serialize)]
struct CompareRecord {
    sigma: f64,
    lambda: f64,
    tube_length: f64,
    classical_berezin: f64,
    paper_bound: f64,
    epsilon_used: f64,
    /// `classical_berezin / paper_bound`.
    ratio: f64,
    classical_exceeds: bool,
}

pub fn compare(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let mut records = Vec::new();
    for &sigma in &cfg.sigma {
        for &lambda in &cfg.compare_lambda {
            let b = berezin_rhs(&cfg.profile, &cfg.cross_section, &query(cfg, sigma, lambda))?;
            for &n in &cfg.compare_lengths {
                let c = classical_berezin(&cfg.cross_section, n, sigma, lambda, cfg.policy)?;
                records.push(CompareRecord {
                    sigma,
                    lambda,
                    tube_length: n,
                    classical_berezin: c,
                    paper_bound: b.rhs,
                    epsilon_used: b.epsilon_used,
                    ratio: ratio(c, b.rhs),
                    classical_exceeds: c > b.rhs,
                });
            }
        }
    }
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                num(r.sigma),
                num(r.lambda),
                num(r.tube_length),
                num(r.classical_berezin),
                num(r.paper_bound),
                num(r.epsilon_used),
                num(r.ratio),
                r.classical_exceeds.to_string(),
            ]
        })
        .collect();
    em.csv(
        "compare.csv",
        &["sigma", "lambda", "tube_length", "classical_berezin", "paper_bound", "epsilon_used", "ratio", "classical_exceeds"],
        &rows,
    )?;
    em.json("compare.json", "compare", records)
}

#[derive(Serialize)]
struct SliceRecord {
    y: Point<f64>,
    window: Interval<f64>,
    intervals: Vec<twistube::slice::SliceInterval<f64>>,
    laws: SliceLawReport<f64>,
    friedrichs: FriedrichsReport<f64>,
}

/// Points uniformly distributed (by area) over the annulus swept by the
/// cross-section.
pub fn sample_annulus(r_min: f64, r_max: f64, n: usize, seed: u64) -> Vec<Point<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let r = rng.gen_range(r_min * r_min..=r_max * r_max).sqrt();
            let alpha = rng.gen_range(0.0..std::f64::consts::TAU);
            Point::from_polar(r, alpha)
        })
        .collect()
}

pub fn slices(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let s = &cfg.slices;
    let cs = &cfg.cross_section;
    let mut points = s.points.clone();
    points.extend(sample_annulus(cs.r_min(), cs.r_max(), s.random, cfg.seed));
    if points.is_empty() {
        return Err(CliError::validation("slices", "give slices.points or slices.random"));
    }
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for y in points {
        let slice = slice_intervals(&cfg.profile, cs, y, s.window)?;
        let laws = check_slice_laws(&cfg.profile, &slice)?;
        let friedrichs = check_friedrichs(&cfg.profile, &slice, cfg.variant, s.friedrichs_samples, TOL_FRIEDRICHS)?;
        for (k, iv) in slice.intervals.iter().enumerate() {
            let delta_in = (cfg.profile.theta(iv.b)? - cfg.profile.theta(iv.a)?).abs();
            let delta_gap = match slice.intervals.get(k + 1) {
                Some(next) => num((cfg.profile.theta(next.a)? - cfg.profile.theta(iv.b)?).abs()),
                None => String::new(),
            };
            rows.push(vec![
                num(y.x2),
                num(y.x3),
                k.to_string(),
                num(iv.a),
                num(iv.b),
                num(delta_in),
                delta_gap,
                iv.partial.to_string(),
            ]);
        }
        records.push(SliceRecord {
            y,
            window: slice.window,
            intervals: slice.intervals,
            laws,
            friedrichs,
        });
    }
    em.csv("slices.csv", &["y2", "y3", "k", "a_k", "b_k", "delta_in", "delta_gap", "partial"], &rows)?;
    em.json("slices.json", "slices", records)
}

fn solver_options(cfg: &RunConfig, grid: &GridConfig) -> SolverOptions {
    SolverOptions {
        tol_eig: grid.tol_eig,
        seed: cfg.seed,
        max_iterations: grid.max_iterations,
        ..SolverOptions::default()
    }
}

/// Window for a given `Λ`: the configured one, or the automatic choice
/// for the smallest `ε` in use, aligned to the coarsest mesh.
fn window_for(cfg: &RunConfig, grid: &GridConfig, eps: f64, lambda: f64) -> Result<Interval<f64>, CliError> {
    match grid.window {
        WindowChoice::Fixed(w) => Ok(w),
        WindowChoice::Auto => Ok(auto_window(&cfg.profile, cfg.variant, eps, lambda, grid.h[0], grid.margin_cells)?),
    }
}

#[derive(Serialize)]
struct SpectrumRecord {
    grid: GridSpec<f64>,
    nodes: usize,
    cutoff: f64,
    eigenvalues: Vec<f64>,
    residuals: Vec<f64>,
    first_above: Option<f64>,
    method: &'static str,
    iterations: usize,
    inertia_count: Option<usize>,
}

fn spectrum_record(nodes: usize, s: &Spectrum<f64>) -> SpectrumRecord {
    SpectrumRecord {
        grid: s.grid.expect("grid spectra carry their grid"),
        nodes,
        cutoff: s.cutoff,
        eigenvalues: s.eigenvalues.clone(),
        residuals: s.residuals.clone(),
        first_above: s.first_above,
        method: s.method,
        iterations: s.iterations,
        inertia_count: s.inertia_count,
    }
}

pub fn spectrum(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let grid = cfg.grid()?;
    let cutoff = match grid.cutoff {
        Some(c) => c,
        None => cfg.lambda.iter().copied().fold(0.0, f64::max),
    };
    if !(cutoff > 0.0) {
        return Err(CliError::validation("grid.cutoff", "needs a positive cutoff (or a positive bound.lambda)"));
    }
    let eps = match cfg.epsilon {
        EpsilonChoice::Fixed(e) => e,
        EpsilonChoice::Optimize => berezin_rhs(&cfg.profile, &cfg.cross_section, &query(cfg, cfg.sigma[0], cutoff))?.epsilon_used,
    };
    let window = window_for(cfg, grid, eps, cutoff)?;
    let opts = solver_options(cfg, grid);
    let mut records = Vec::new();
    for (i, spec) in grid.specs(window)?.into_iter().enumerate() {
        let (mask, s) = grid_spectrum(&cfg.profile, &cfg.cross_section, spec, cutoff, &opts)?;
        let rows: Vec<Vec<String>> = s
            .eigenvalues
            .iter()
            .zip(&s.residuals)
            .enumerate()
            .map(|(k, (l, r))| vec![(k + 1).to_string(), num(*l), num(*r)])
            .collect();
        em.csv(&format!("spectrum_{i}.csv"), &["index", "lambda", "residual"], &rows)?;
        if grid.export_mask {
            export_mask(em, i, &mask.occupancy(), mask.header())?;
        }
        records.push(spectrum_record(mask.len(), &s));
    }
    em.json("spectrum.json", "spectrum", records)
}

fn export_mask(em: &mut Emitter, i: usize, occupancy: &[u8], header: MaskHeader) -> Result<(), CliError> {
    em.binary(&format!("mask_{i}.bin"), occupancy)?;
    em.json(&format!("mask_{i}.json"), "mask", vec![header])
}

/// Runs every `(σ, Λ)` case; spectra are computed once per `Λ`. Returns
/// the reports so the caller can set the exit status.
pub fn verify(cfg: &RunConfig, em: &mut Emitter) -> Result<Vec<VerificationReport<f64>>, CliError> {
    let grid = cfg.grid()?;
    if grid.h.len() < 2 {
        eprintln!("note: a single grid gives no Richardson extrapolation");
    }
    let opts = solver_options(cfg, grid);
    let mut reports = Vec::new();
    for &lambda in &cfg.lambda {
        let bounds = cfg
            .sigma
            .iter()
            .map(|&s| {
                let q = query(cfg, s, lambda);
                berezin_rhs(&cfg.profile, &cfg.cross_section, &q).map(|b| (q, b))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let eps = bounds.iter().map(|(_, b)| b.epsilon_used).fold(f64::INFINITY, f64::min);
        let window = window_for(cfg, grid, eps, lambda)?;
        let spectra = grid_spectra(&cfg.profile, &cfg.cross_section, &grid.specs(window)?, lambda, &opts)?;
        for (q, b) in &bounds {
            reports.push(verify_with_spectra(&spectra, q, b, TOL_VERIFY)?);
        }
    }
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let fine = r.grids.last().expect("at least one grid");
            vec![
                num(r.sigma),
                num(r.lambda),
                num(r.epsilon_used),
                num(r.window.lo),
                num(r.window.hi),
                num(fine.h),
                fine.eigenvalues_below.to_string(),
                num(r.lhs_extrapolated),
                num(r.rhs),
                num(r.margin),
                r.pass.to_string(),
            ]
        })
        .collect();
    em.csv(
        "verify.csv",
        &["sigma", "lambda", "epsilon_used", "window_lo", "window_hi", "h_fine", "eigenvalues_below", "lhs_extrapolated", "rhs", "margin", "pass"],
        &rows,
    )?;
    em.json("verify.json", "verify", reports.clone())?;
    Ok(reports)
}

#[derive(Serialize)]
struct GeometryRecord {
    window: Interval<f64>,
    x1_samples: usize,
    edge_samples: usize,
    points: usize,
    columns: [&'static str; 6],
    /// A node `(x₁, y)` is inside the tube iff `y` rotated by `θ(x₁)` lies
    /// in the cross-section; exported points are the boundary images.
    convention: &'static str,
}

pub fn geometry(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let g = &cfg.geometry;
    let verts = cfg.cross_section.vertices();
    let mut rows = Vec::new();
    for i in 0..g.x1_samples {
        let x1 = g.window.lo + g.window.width() * i as f64 / (g.x1_samples - 1) as f64;
        let theta = cfg.profile.theta(x1)?;
        for (e, (a, b)) in verts.iter().zip(verts.iter().cycle().skip(1)).enumerate() {
            for j in 0..g.edge_samples {
                let t = j as f64 / g.edge_samples as f64;
                let p = Point::new(a.x2 + (b.x2 - a.x2) * t, a.x3 + (b.x3 - a.x3) * t).rotated(-theta);
                rows.push(vec![num(x1), num(theta), e.to_string(), num(t), num(p.x2), num(p.x3)]);
            }
        }
    }
    const COLUMNS: [&str; 6] = ["x1", "theta", "edge", "t", "x2", "x3"];
    em.csv("geometry.csv", &COLUMNS, &rows)?;
    em.json(
        "geometry.json",
        "geometry",
        vec![GeometryRecord {
            window: g.window,
            x1_samples: g.x1_samples,
            edge_samples: g.edge_samples,
            points: rows.len(),
            columns: COLUMNS,
            convention: "boundary point p of the cross-section maps to (x1, R(-theta(x1)) p)",
        }],
    )?;
    geometry_mask(cfg, em)
}

/// Occupancy of the first grid, without solving, when a `[grid]` section
/// asks for mask export.
fn geometry_mask(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let Some(grid) = cfg.grid.as_ref() else {
        return Ok(());
    };
    if !grid.export_mask {
        return Ok(());
    }
    let window = match grid.window {
        WindowChoice::Fixed(w) => w,
        WindowChoice::Auto => cfg.geometry.window,
    };
    let spec = GridSpec::new(window, grid.h[0], grid.padding)?;
    let mask = build_mask(&cfg.profile, &cfg.cross_section, spec)?;
    export_mask(em, 0, &mask.occupancy(), mask.header())
}
