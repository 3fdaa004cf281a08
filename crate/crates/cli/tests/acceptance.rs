//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;
use twistube::bound::{
    asymptotic_rhs, berezin_rhs, classical_berezin, lt_constant, optimize_epsilon, BoundQuery, ConstantPolicy, Variant,
};
use twistube::eigen::{auto_window, grid_spectra, grid_spectrum, verify_with_spectra, GridSpec, SolverOptions, TOL_VERIFY};
use twistube::slice::{check_friedrichs, check_slice_laws, slice_intervals, SliceIntervals};
use twistube::{CrossSection, Interval, Point, TwistProfile};

type Outcome = Result<String, String>;

fn square() -> CrossSection<f64> {
    CrossSection::rectangle(1.0, 2.0, -0.5, 0.5).unwrap()
}

fn parabola() -> TwistProfile<f64> {
    TwistProfile::even_poly(vec![0.0, 1.0]).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1_closed_form_oracle() -> Outcome {
    // At Λ = 1, ε = 1/2 the support of (εf - Λ)_- is exactly the plateau
    // |x| < √(2π), where the integrand is Λ^{σ+3/2} = 1.
    let l = (ln_gamma(2.5) - ln_gamma(4.0)).exp() / (4.0 * std::f64::consts::PI).powf(1.5);
    let oracle = l / 0.5f64.powf(1.5) * 1.0 * 2.0 * (2.0 * std::f64::consts::PI).sqrt();
    let r = berezin_rhs(&parabola(), &square(), &BoundQuery::new(1.5, 1.0, 0.5)).map_err(|e| e.to_string())?;
    let rel = (r.rhs - oracle).abs() / oracle;
    check(rel < 1e-6, format!("rhs = {:.10e}, oracle = {oracle:.10e}, rel err = {rel:.2e}", r.rhs))
}

fn c2_semiclassical_constants() -> Outcome {
    let mut worst: f64 = 0.0;
    for sigma in [1.5, 2.5] {
        let direct = (ln_gamma(sigma + 1.0) - ln_gamma(sigma + 2.5) - 1.5 * (4.0 * std::f64::consts::PI).ln()).exp();
        worst = worst.max((lt_constant(sigma, 3) - direct).abs() / direct);
    }
    check(worst < 1e-12, format!("max rel err over sigma in {{3/2, 5/2}} = {worst:.2e}"))
}

struct Sample {
    profile: TwistProfile<f64>,
    variant: Variant<f64>,
    slice: SliceIntervals<f64>,
}

const SLICE_WINDOW: (f64, f64) = (-2.5, 2.5);
const SAMPLE_PAIRS: usize = 240;

fn random_samples() -> Result<Vec<Sample>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let cs = square();
    let window = Interval::new(SLICE_WINDOW.0, SLICE_WINDOW.1);
    let mut out = Vec::with_capacity(SAMPLE_PAIRS);
    for i in 0..SAMPLE_PAIRS {
        let m = rng.gen_range(1..=2);
        let even = i % 2 == 0;
        let mut coefficients: Vec<f64> = (0..=m).map(|_| rng.gen_range(0.2..1.2)).collect();
        if even {
            coefficients[0] = rng.gen_range(0.0..std::f64::consts::TAU);
        }
        let (profile, variant) = if even {
            (TwistProfile::even_poly(coefficients), Variant::Even)
        } else {
            (TwistProfile::odd_poly(coefficients), Variant::Odd)
        };
        let profile = profile.map_err(|e| e.to_string())?;
        let r = rng.gen_range(cs.r_min().powi(2)..cs.r_max().powi(2)).sqrt();
        let y = Point::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU));
        let slice = slice_intervals(&profile, &cs, y, window).map_err(|e| e.to_string())?;
        out.push(Sample { profile, variant, slice });
    }
    Ok(out)
}

/// Largest distance between computed endpoints and membership changes of
/// a scan with step `step`. Endpoints bounding a feature shorter than two
/// steps are exempt from needing a scan transition, since the scan cannot
/// resolve them.
fn oracle_mismatch(s: &Sample, step: f64) -> f64 {
    let cs = square();
    let inside = |x: f64| cs.contains(s.slice.y.rotated(s.profile.theta(x).unwrap()));
    let (lo, hi) = SLICE_WINDOW;
    let n = ((hi - lo) / step).round() as usize;
    let mut transitions = Vec::new();
    let mut prev = inside(lo);
    for i in 1..=n {
        let x = lo + step * i as f64;
        let cur = inside(x);
        if cur != prev {
            transitions.push(x - step / 2.0);
        }
        prev = cur;
    }
    let mut ends = Vec::new();
    for iv in &s.slice.intervals {
        if iv.a > lo {
            ends.push(iv.a);
        }
        if iv.b < hi {
            ends.push(iv.b);
        }
    }
    ends.sort_by(f64::total_cmp);
    let nearest = |set: &[f64], x: f64| set.iter().map(|e| (e - x).abs()).fold(f64::INFINITY, f64::min);
    let mut worst: f64 = 0.0;
    for &t in &transitions {
        worst = worst.max(nearest(&ends, t));
    }
    for (i, &e) in ends.iter().enumerate() {
        let tiny = |j: Option<&f64>| j.is_some_and(|&o| (o - e).abs() < 2.0 * step);
        if tiny(i.checked_sub(1).and_then(|j| ends.get(j))) || tiny(ends.get(i + 1)) {
            continue;
        }
        worst = worst.max(nearest(&transitions, e));
    }
    worst
}

fn c3_slice_laws(samples: &[Sample]) -> Outcome {
    let mut law1_fail = 0;
    let mut law2_fail = 0;
    let mut worst_gap = f64::INFINITY;
    let mut worst_gap_r = 0.0;
    let mut checked = (0, 0);
    let mut worst_oracle: f64 = 0.0;
    for s in samples {
        let report = check_slice_laws(&s.profile, &s.slice).map_err(|e| e.to_string())?;
        checked.0 += report.intervals.len();
        checked.1 += report.gaps.len();
        law1_fail += usize::from(!report.law1_ok);
        law2_fail += usize::from(!report.law2_ok);
        for g in &report.gaps {
            if g.delta_gap < worst_gap {
                worst_gap = g.delta_gap;
                worst_gap_r = s.slice.y.norm();
            }
        }
        worst_oracle = worst_oracle.max(oracle_mismatch(s, 1e-4));
    }
    let detail = format!(
        "{} pairs, {} intervals / {} gaps checked; law 1 violated on {law1_fail} pairs, law 2 on {law2_fail} pairs \
         (smallest gap {worst_gap:.4} at |y| = {worst_gap_r:.4}); endpoint vs dense scan max dev {worst_oracle:.1e}",
        samples.len(),
        checked.0,
        checked.1
    );
    check(law1_fail == 0 && law2_fail == 0 && worst_oracle <= 2e-4, detail)
}

fn c4_friedrichs(samples: &[Sample]) -> Outcome {
    let mut checked = 0;
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for s in samples {
        let r = check_friedrichs(&s.profile, &s.slice, s.variant, 32, 1e-4).map_err(|e| e.to_string())?;
        checked += r.checked_intervals;
        failures += usize::from(!r.ok);
        if let Some(w) = r.worst {
            worst = worst.max(w.f / w.friedrichs);
        }
    }
    check(
        failures == 0 && checked > 0,
        format!("{checked} intervals beyond the threshold, {failures} violations, max f / (pi^2/len^2) = {worst:.4}"),
    )
}

fn c5_asymptotic_ratio() -> Outcome {
    let (p, cs) = (parabola(), square());
    let mut lines = Vec::new();
    let mut ok = true;
    for sigma in [1.5, 2.0] {
        let mut ratios = Vec::new();
        for lambda in [1e2, 1e3, 1e4] {
            let q = BoundQuery::new(sigma, lambda, 0.5);
            let b = berezin_rhs(&p, &cs, &q).map_err(|e| e.to_string())?;
            let a = asymptotic_rhs(&p, &cs, &q).map_err(|e| e.to_string())?;
            ratios.push(b.rhs / a.rhs);
        }
        ok &= ratios.windows(2).all(|w| w[1] < w[0]) && (ratios[2] - 1.0).abs() < 0.1;
        lines.push(format!("sigma {sigma}: {:.4} {:.4} {:.4}", ratios[0], ratios[1], ratios[2]));
    }
    check(ok, lines.join("; "))
}

fn c6_box_spectrum() -> Outcome {
    let p = TwistProfile::tabulated(vec![-1.0, 5.0], vec![0.0, 0.0], None).map_err(|e| e.to_string())?;
    let cs = square();
    let pi2 = std::f64::consts::PI.powi(2);
    let mut exact = Vec::new();
    for k in 1..20 {
        for m in 1..4 {
            for n in 1..4 {
                let l = pi2 * ((k * k) as f64 / 16.0 + (m * m + n * n) as f64);
                if l < 60.0 {
                    exact.push(l);
                }
            }
        }
    }
    exact.sort_by(f64::total_cmp);
    let opts = SolverOptions::default();
    let mut spectra = Vec::new();
    for h in [1.0 / 16.0, 1.0 / 32.0] {
        let spec = GridSpec::new(Interval::new(0.0, 4.0), h, h).map_err(|e| e.to_string())?;
        let (_, s) = grid_spectrum(&p, &cs, spec, 60.0, &opts).map_err(|e| e.to_string())?;
        spectra.push(s.eigenvalues);
    }
    let fine = &spectra[1];
    if fine.len() != exact.len() {
        return Err(format!("{} eigenvalues below 60 at h = 1/32, expected {}", fine.len(), exact.len()));
    }
    let mut max_rel: f64 = 0.0;
    let mut min_ratio = f64::INFINITY;
    for (i, &e) in exact.iter().enumerate() {
        max_rel = max_rel.max((fine[i] - e).abs() / e);
        if let Some(&c) = spectra[0].get(i) {
            min_ratio = min_ratio.min((c - e).abs() / (fine[i] - e).abs());
        }
    }
    check(
        max_rel < 0.01 && min_ratio >= 3.0,
        format!("{} eigenvalues, max rel err at h = 1/32 {max_rel:.2e}, min error ratio h=1/16 vs 1/32 {min_ratio:.3}", exact.len()),
    )
}

fn c7_main_inequality() -> Outcome {
    let (p, cs) = (parabola(), square());
    let opts = SolverOptions::default();
    let hs = [1.0 / 16.0, 1.0 / 32.0];
    let mut parts = Vec::new();
    let mut ok = true;
    for lambda in [5.0, 20.0, 50.0] {
        let bounds = [1.5, 2.0]
            .iter()
            .map(|&s| {
                let q = BoundQuery::optimized(s, lambda);
                berezin_rhs(&p, &cs, &q).map(|b| (q, b))
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let eps = bounds.iter().map(|(_, b)| b.epsilon_used).fold(f64::INFINITY, f64::min);
        let window = auto_window(&p, Variant::Even, eps, lambda, hs[0], 2).map_err(|e| e.to_string())?;
        let specs: Vec<GridSpec<f64>> = hs.iter().map(|&h| GridSpec::new(window, h, h).unwrap()).collect();
        let spectra = grid_spectra(&p, &cs, &specs, lambda, &opts).map_err(|e| e.to_string())?;
        for (q, b) in &bounds {
            let r = verify_with_spectra(&spectra, q, b, TOL_VERIFY).map_err(|e| e.to_string())?;
            ok &= r.lhs_extrapolated <= 1.05 * r.rhs;
            parts.push(format!(
                "L={lambda} s={}: lhs {:.4e} ({} eig) <= rhs {:.4e}",
                q.sigma,
                r.lhs_extrapolated,
                r.grids.last().map_or(0, |g| g.eigenvalues_below),
                r.rhs
            ));
        }
    }
    check(ok, parts.join("; "))
}

fn c8_regime_comparison(dir: &Path) -> Outcome {
    let (p, cs) = (parabola(), square());
    let (eps, paper) = optimize_epsilon(&p, &cs, 1.5, 100.0, Variant::Even, ConstantPolicy::Semiclassical).map_err(|e| e.to_string())?;
    let classical = classical_berezin(&cs, 1e4, 1.5, 100.0, ConstantPolicy::Semiclassical).map_err(|e| e.to_string())?;
    let cfg = format!(
        "{BASE}\n[bound]\nsigma = [1.5]\nepsilon = \"optimize\"\n[compare]\nlambda = [100.0]\ntube_length = [10000.0]\n"
    );
    let out = dir.join("compare");
    run_cli("compare", &cfg, dir, &out, &[])?;
    let table = fs::read_to_string(out.join("compare.csv")).map_err(|e| e.to_string())?;
    let row: Vec<f64> = table
        .lines()
        .nth(1)
        .ok_or("empty comparison table")?
        .split(',')
        .take(7)
        .map(|v| v.parse().unwrap_or(f64::NAN))
        .collect();
    let table_ok = (row[3] - classical).abs() <= 1e-12 * classical && (row[4] - paper).abs() <= 1e-12 * paper;
    check(
        classical > paper && table_ok,
        format!("classical {classical:.4e} vs optimized bound {paper:.4e} (eps* = {eps:.4}); table reports both: {table_ok}"),
    )
}

const BASE: &str = r#"
[profile]
family = "even_poly"
coefficients = [0.0, 1.0]
[cross_section]
vertices = [[1.0, -0.5], [2.0, -0.5], [2.0, 0.5], [1.0, 0.5]]
"#;

fn run_cli(cmd: &str, cfg: &str, dir: &Path, out: &Path, extra: &[&str]) -> Result<(), String> {
    let path = dir.join(format!("{cmd}.toml"));
    fs::write(&path, cfg).map_err(|e| e.to_string())?;
    let status = Command::new(env!("CARGO_BIN_EXE_twistube"))
        .arg(cmd)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(format!("{cmd} exited with {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr)))
    }
}

fn c9_determinism(dir: &Path) -> Outcome {
    let cfg = format!(
        "{BASE}\n[bound]\nsigma = [1.5, 2.0]\nlambda = [20.0, 50.0]\n[grid]\nwindow = \"auto\"\nh = [0.125, 0.0625]\n"
    );
    let (a, b) = (dir.join("verify_a"), dir.join("verify_b"));
    for out in [&a, &b] {
        run_cli("verify", &cfg, dir, out, &["--seed", "5", "--threads", "1"])?;
    }
    let mut names: Vec<_> = fs::read_dir(&a)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    let same = names
        .iter()
        .all(|n| fs::read(a.join(n)).ok() == fs::read(b.join(n)).ok());
    check(
        same && !names.is_empty(),
        format!("{} files compared, byte-identical: {same}", names.len()),
    )
}

fn report(n: usize, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let outcome = f();
    let elapsed = t.elapsed();
    let in_time = elapsed <= budget;
    let (ok, detail) = match outcome {
        Ok(d) => (in_time, d),
        Err(d) => (false, d),
    };
    let timing = format!("{:.2} s of {} s budget", elapsed.as_secs_f64(), budget.as_secs());
    println!("criterion {n} [{}] {name}: {detail} ({timing})", if ok { "PASS" } else { "FAIL" });
    ok
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let secs = Duration::from_secs;
    let mut results = Vec::new();
    results.push(report(1, "closed-form bound oracle", secs(1), c1_closed_form_oracle));
    results.push(report(2, "semiclassical constants", secs(1), c2_semiclassical_constants));
    let samples = random_samples();
    let with_samples = |f: fn(&[Sample]) -> Outcome| match &samples {
        Ok(s) => f(s),
        Err(e) => Err(e.clone()),
    };
    results.push(report(3, "slice width laws", secs(30), || with_samples(c3_slice_laws)));
    results.push(report(4, "Friedrichs consistency", secs(30), || with_samples(c4_friedrichs)));
    results.push(report(5, "asymptotic equivalence", secs(10), c5_asymptotic_ratio));
    results.push(report(6, "eigensolver on the straight box", secs(120), c6_box_spectrum));
    results.push(report(7, "moment inequality on truncated tubes", secs(900), c7_main_inequality));
    results.push(report(8, "classical versus twisted regime", secs(10), || c8_regime_comparison(dir.path())));
    results.push(report(9, "determinism of verify", secs(600), || c9_determinism(dir.path())));
    let failed = results.iter().filter(|&&ok| !ok).count();
    println!("acceptance: {} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
