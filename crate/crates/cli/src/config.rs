//! Run configuration: a TOML file parsed into plain structs, then
//! validated field by field into core types.

use std::path::PathBuf;

use serde::Deserialize;
use twistube::bound::{l_sigma, ConstantPolicy, EpsilonChoice, Variant};
use twistube::eigen::GridSpec;
use twistube::{CrossSection, Interval, Point, TwistProfile};

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub profile: RawProfile,
    pub cross_section: RawSection,
    #[serde(default)]
    pub bound: RawBound,
    #[serde(default)]
    pub compare: RawCompare,
    #[serde(default)]
    pub slices: RawSlices,
    pub grid: Option<RawGrid>,
    #[serde(default)]
    pub geometry: RawGeometry,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawProfile {
    pub family: String,
    pub coefficients: Option<Vec<f64>>,
    pub theta0: Option<f64>,
    pub s0: Option<f64>,
    pub x: Option<Vec<f64>>,
    pub theta: Option<Vec<f64>>,
    pub dtheta: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSection {
    pub vertices: Vec<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum RawEpsilon {
    Value(f64),
    Keyword(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum RawPolicy {
    Keyword(String),
    Scaled { scaled: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawLambdaGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    #[serde(default = "default_spacing")]
    pub spacing: String,
}

fn default_spacing() -> String {
    "linear".into()
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawBound {
    pub sigma: Option<Vec<f64>>,
    pub lambda: Option<Vec<f64>>,
    pub lambda_grid: Option<RawLambdaGrid>,
    pub epsilon: Option<RawEpsilon>,
    pub variant: Option<String>,
    pub constant_policy: Option<RawPolicy>,
    pub tube_length: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCompare {
    pub lambda: Option<Vec<f64>>,
    pub tube_length: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSlices {
    pub points: Option<Vec<[f64; 2]>>,
    pub random: Option<usize>,
    pub window: Option<[f64; 2]>,
    pub friedrichs_samples: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum RawWindow {
    Fixed([f64; 2]),
    Keyword(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGrid {
    pub window: RawWindow,
    pub h: Vec<f64>,
    pub padding: Option<f64>,
    pub margin_cells: Option<usize>,
    pub cutoff: Option<f64>,
    pub export_mask: Option<bool>,
    pub tol_eig: Option<f64>,
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGeometry {
    pub window: Option<[f64; 2]>,
    pub x1_samples: Option<usize>,
    pub edge_samples: Option<usize>,
}

/// How the axial window of the verification grids is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowChoice {
    Fixed(Interval<f64>),
    /// Sized per `Λ` so that `εf ≥ 2Λ` outside the core.
    Auto,
}

#[derive(Debug, Clone)]
pub struct GridConfig {
    pub window: WindowChoice,
    pub h: Vec<f64>,
    pub padding: f64,
    pub margin_cells: usize,
    pub cutoff: Option<f64>,
    pub export_mask: bool,
    pub tol_eig: f64,
    pub max_iterations: usize,
}

impl GridConfig {
    /// Grid specs on a given window, one per mesh size.
    pub fn specs(&self, window: Interval<f64>) -> Result<Vec<GridSpec<f64>>, CliError> {
        self.h
            .iter()
            .enumerate()
            .map(|(i, &h)| {
                GridSpec::new(window, h, self.padding).map_err(|e| CliError::validation(format!("grid.h[{i}]"), e.to_string()))
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SliceConfig {
    pub points: Vec<Point<f64>>,
    pub random: usize,
    pub window: Interval<f64>,
    pub friedrichs_samples: usize,
}

#[derive(Debug, Clone)]
pub struct GeometryConfig {
    pub window: Interval<f64>,
    pub x1_samples: usize,
    pub edge_samples: usize,
}

/// Validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub threads: Option<usize>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub profile: TwistProfile<f64>,
    pub cross_section: CrossSection<f64>,
    pub sigma: Vec<f64>,
    pub lambda: Vec<f64>,
    pub epsilon: EpsilonChoice<f64>,
    pub variant: Variant<f64>,
    pub policy: ConstantPolicy<f64>,
    pub tube_length: f64,
    pub compare_lambda: Vec<f64>,
    pub compare_lengths: Vec<f64>,
    pub slices: SliceConfig,
    pub grid: Option<GridConfig>,
    pub geometry: GeometryConfig,
}

fn invalid(path: impl Into<String>, msg: impl Into<String>) -> CliError {
    CliError::validation(path, msg)
}

fn finite_nonneg(path: &str, values: &[f64]) -> Result<(), CliError> {
    for (i, v) in values.iter().enumerate() {
        if !(v.is_finite() && *v >= 0.0) {
            return Err(invalid(format!("{path}[{i}]"), format!("{v} must be a finite number >= 0")));
        }
    }
    Ok(())
}

fn window(path: &str, w: [f64; 2]) -> Result<Interval<f64>, CliError> {
    if !(w[0].is_finite() && w[1].is_finite() && w[0] < w[1]) {
        return Err(invalid(path, format!("[{}, {}] is not an increasing pair", w[0], w[1])));
    }
    Ok(Interval::new(w[0], w[1]))
}

fn profile(raw: &RawProfile) -> Result<TwistProfile<f64>, CliError> {
    let wrap = |field: &str, e: twistube::Error| invalid(format!("profile.{field}"), e.to_string());
    let poly_only = |name: &str| -> Result<(), CliError> {
        if raw.x.is_some() || raw.theta.is_some() || raw.dtheta.is_some() {
            return Err(invalid("profile", format!("x/theta/dtheta are only read for the tabulated family, not {name}")));
        }
        Ok(())
    };
    let mut p = match raw.family.as_str() {
        "even_poly" | "odd_poly" => {
            poly_only(&raw.family)?;
            let c = raw
                .coefficients
                .clone()
                .ok_or_else(|| invalid("profile.coefficients", "required for polynomial families"))?;
            let built = if raw.family == "even_poly" {
                TwistProfile::even_poly(c)
            } else {
                TwistProfile::odd_poly(c)
            };
            built.map_err(|e| wrap("coefficients", e))?
        }
        "tabulated" => {
            if raw.coefficients.is_some() {
                return Err(invalid("profile.coefficients", "not read for the tabulated family"));
            }
            let x = raw.x.clone().ok_or_else(|| invalid("profile.x", "required for the tabulated family"))?;
            let t = raw
                .theta
                .clone()
                .ok_or_else(|| invalid("profile.theta", "required for the tabulated family"))?;
            TwistProfile::tabulated(x, t, raw.dtheta.clone()).map_err(|e| wrap("theta", e))?
        }
        other => {
            return Err(invalid(
                "profile.family",
                format!("unknown family {other:?}; expected even_poly, odd_poly or tabulated"),
            ))
        }
    };
    if let Some(t0) = raw.theta0 {
        if !t0.is_finite() {
            return Err(invalid("profile.theta0", "must be finite"));
        }
        p = p.with_offset(t0);
    }
    if let Some(s0) = raw.s0 {
        p = p.with_s0(s0).map_err(|e| wrap("s0", e))?;
    }
    Ok(p)
}

fn lambdas(raw: &RawBound) -> Result<Vec<f64>, CliError> {
    let values = match (&raw.lambda, &raw.lambda_grid) {
        (Some(_), Some(_)) => return Err(invalid("bound", "give either lambda or lambda_grid, not both")),
        (Some(l), None) => l.clone(),
        (None, Some(g)) => {
            if g.count < 2 {
                return Err(invalid("bound.lambda_grid.count", "must be at least 2"));
            }
            if !(g.start.is_finite() && g.stop.is_finite() && g.start >= 0.0 && g.stop > g.start) {
                return Err(invalid("bound.lambda_grid", "need 0 <= start < stop"));
            }
            let t = |i: usize| i as f64 / (g.count - 1) as f64;
            match g.spacing.as_str() {
                "linear" => (0..g.count).map(|i| g.start + (g.stop - g.start) * t(i)).collect(),
                "log" => {
                    if g.start <= 0.0 {
                        return Err(invalid("bound.lambda_grid.start", "log spacing needs start > 0"));
                    }
                    let (a, b) = (g.start.ln(), g.stop.ln());
                    (0..g.count).map(|i| (a + (b - a) * t(i)).exp()).collect()
                }
                other => {
                    return Err(invalid(
                        "bound.lambda_grid.spacing",
                        format!("unknown spacing {other:?}; expected linear or log"),
                    ))
                }
            }
        }
        (None, None) => vec![1.0, 10.0, 100.0],
    };
    finite_nonneg("bound.lambda", &values)?;
    Ok(values)
}

fn variant(raw: &RawBound, p: &TwistProfile<f64>) -> Result<Variant<f64>, CliError> {
    let default = match p.family() {
        twistube::Family::EvenPoly => "even",
        twistube::Family::OddPoly => "odd",
        twistube::Family::Tabulated => {
            if raw.variant.is_none() {
                return Err(invalid("bound.variant", "required for tabulated profiles"));
            }
            ""
        }
    };
    let name = raw.variant.as_deref().unwrap_or(default);
    let s0 = || p.s0().ok_or_else(|| invalid("profile.s0", format!("the {name} variant needs a threshold s0")));
    Ok(match name {
        "even" => Variant::Even,
        "odd" => Variant::Odd,
        "localized_even" => Variant::LocalizedEven(s0()?),
        "localized_odd" => Variant::LocalizedOdd(s0()?),
        other => {
            return Err(invalid(
                "bound.variant",
                format!("unknown variant {other:?}; expected even, odd, localized_even or localized_odd"),
            ))
        }
    })
}

fn grid(raw: &RawGrid) -> Result<GridConfig, CliError> {
    let window = match &raw.window {
        RawWindow::Fixed(w) => WindowChoice::Fixed(window("grid.window", *w)?),
        RawWindow::Keyword(k) if k == "auto" => WindowChoice::Auto,
        RawWindow::Keyword(k) => return Err(invalid("grid.window", format!("expected [lo, hi] or \"auto\", got {k:?}"))),
    };
    if raw.h.is_empty() {
        return Err(invalid("grid.h", "at least one mesh size is required"));
    }
    for (i, &h) in raw.h.iter().enumerate() {
        if !(h.is_finite() && h > 0.0) {
            return Err(invalid(format!("grid.h[{i}]"), format!("{h} must be positive")));
        }
        if i > 0 && (raw.h[i - 1] / h - 2.0).abs() > 1e-12 {
            return Err(invalid(format!("grid.h[{i}]"), "each mesh size must halve the previous one"));
        }
    }
    let padding = raw.padding.unwrap_or(raw.h[0]);
    if !(padding.is_finite() && padding >= 0.0) {
        return Err(invalid("grid.padding", "must be >= 0"));
    }
    if let Some(c) = raw.cutoff {
        if !(c.is_finite() && c > 0.0) {
            return Err(invalid("grid.cutoff", "must be positive"));
        }
    }
    let tol_eig = raw.tol_eig.unwrap_or(twistube::eigen::TOL_EIG);
    if !(tol_eig > 0.0 && tol_eig < 1.0) {
        return Err(invalid("grid.tol_eig", "must lie in (0, 1)"));
    }
    let cfg = GridConfig {
        window,
        h: raw.h.clone(),
        padding,
        margin_cells: raw.margin_cells.unwrap_or(2),
        cutoff: raw.cutoff,
        export_mask: raw.export_mask.unwrap_or(false),
        tol_eig,
        max_iterations: raw.max_iterations.unwrap_or(4000).max(1),
    };
    if let WindowChoice::Fixed(w) = cfg.window {
        cfg.specs(w)?;
    }
    Ok(cfg)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::validation("config", e.to_string().trim_end().to_string()))?;
        Self::from_raw(raw)
    }

    pub fn from_raw(raw: RawConfig) -> Result<Self, CliError> {
        if raw.threads == Some(0) {
            return Err(invalid("threads", "must be at least 1"));
        }
        let p = profile(&raw.profile)?;
        let vertices: Vec<Point<f64>> = raw.cross_section.vertices.iter().map(|v| Point::new(v[0], v[1])).collect();
        let cs = CrossSection::polygon(vertices).map_err(|e| invalid("cross_section.vertices", e.to_string()))?;

        let b = &raw.bound;
        let sigma = b.sigma.clone().unwrap_or_else(|| vec![1.5]);
        if sigma.is_empty() {
            return Err(invalid("bound.sigma", "at least one value is required"));
        }
        finite_nonneg("bound.sigma", &sigma)?;
        let lambda = lambdas(b)?;
        let epsilon = match &b.epsilon {
            None => EpsilonChoice::Optimize,
            Some(RawEpsilon::Keyword(k)) if k == "optimize" => EpsilonChoice::Optimize,
            Some(RawEpsilon::Keyword(k)) => {
                return Err(invalid("bound.epsilon", format!("expected a number in (0, 1) or \"optimize\", got {k:?}")))
            }
            Some(RawEpsilon::Value(e)) if *e > 0.0 && *e < 1.0 => EpsilonChoice::Fixed(*e),
            Some(RawEpsilon::Value(e)) => return Err(invalid("bound.epsilon", format!("{e} must lie in (0, 1)"))),
        };
        let variant = variant(b, &p)?;
        let policy = match &b.constant_policy {
            None => ConstantPolicy::Semiclassical,
            Some(RawPolicy::Keyword(k)) if k == "semiclassical" => ConstantPolicy::Semiclassical,
            Some(RawPolicy::Keyword(k)) => {
                return Err(invalid(
                    "bound.constant_policy",
                    format!("expected \"semiclassical\" or {{ scaled = <factor> }}, got {k:?}"),
                ))
            }
            Some(RawPolicy::Scaled { scaled }) if *scaled > 0.0 && scaled.is_finite() => ConstantPolicy::Scaled(*scaled),
            Some(RawPolicy::Scaled { scaled }) => {
                return Err(invalid("bound.constant_policy.scaled", format!("{scaled} must be positive")))
            }
        };
        for (i, &s) in sigma.iter().enumerate() {
            l_sigma(policy, s).map_err(|e| invalid(format!("bound.sigma[{i}]"), e.to_string()))?;
        }
        let tube_length = b.tube_length.unwrap_or(1.0);
        if !(tube_length.is_finite() && tube_length > 0.0) {
            return Err(invalid("bound.tube_length", "must be positive"));
        }

        let compare_lambda = raw.compare.lambda.clone().unwrap_or_else(|| lambda.clone());
        finite_nonneg("compare.lambda", &compare_lambda)?;
        let compare_lengths = raw.compare.tube_length.clone().unwrap_or_else(|| vec![tube_length]);
        for (i, &n) in compare_lengths.iter().enumerate() {
            if !(n.is_finite() && n > 0.0) {
                return Err(invalid(format!("compare.tube_length[{i}]"), format!("{n} must be positive")));
            }
        }

        let s = &raw.slices;
        let points: Vec<Point<f64>> = s.points.clone().unwrap_or_default().iter().map(|v| Point::new(v[0], v[1])).collect();
        for (i, y) in points.iter().enumerate() {
            if !(y.norm() > 0.0 && y.norm().is_finite()) {
                return Err(invalid(format!("slices.points[{i}]"), "must be a finite point away from the axis"));
            }
        }
        let slice_window = window("slices.window", s.window.unwrap_or([-4.0, 4.0]))?;
        let slices = SliceConfig {
            points,
            random: s.random.unwrap_or(0),
            window: slice_window,
            friedrichs_samples: s.friedrichs_samples.unwrap_or(16).max(1),
        };

        let grid = raw.grid.as_ref().map(grid).transpose()?;

        let g = &raw.geometry;
        let geometry = GeometryConfig {
            window: window("geometry.window", g.window.unwrap_or([-3.0, 3.0]))?,
            x1_samples: g.x1_samples.unwrap_or(121),
            edge_samples: g.edge_samples.unwrap_or(8),
        };
        if geometry.x1_samples < 2 {
            return Err(invalid("geometry.x1_samples", "must be at least 2"));
        }
        if geometry.edge_samples < 1 {
            return Err(invalid("geometry.edge_samples", "must be at least 1"));
        }

        Ok(RunConfig {
            threads: raw.threads,
            seed: raw.seed.unwrap_or(0),
            output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("out")),
            profile: p,
            cross_section: cs,
            sigma,
            lambda,
            epsilon,
            variant,
            policy,
            tube_length,
            compare_lambda,
            compare_lengths,
            slices,
            grid,
            geometry,
        })
    }

    pub fn grid(&self) -> Result<&GridConfig, CliError> {
        self.grid
            .as_ref()
            .ok_or_else(|| invalid("grid", "this command needs a [grid] section"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        [profile]
        family = "even_poly"
        coefficients = [0.0, 1.0]
        [cross_section]
        vertices = [[1.0, -0.5], [2.0, -0.5], [2.0, 0.5], [1.0, 0.5]]
    "#;

    fn with(extra: &str) -> Result<RunConfig, CliError> {
        RunConfig::parse(&format!("{BASE}\n{extra}"))
    }

    fn path_of(e: CliError) -> String {
        match e {
            CliError::Validation { path, .. } => path,
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let c = with("").unwrap();
        assert_eq!(c.sigma, vec![1.5]);
        assert_eq!(c.epsilon, EpsilonChoice::Optimize);
        assert_eq!(c.variant, Variant::Even);
        assert!((c.cross_section.area() - 1.0).abs() < 1e-15);
        assert!(c.grid.is_none());
    }

    #[test]
    fn semiclassical_below_three_halves_names_the_field() {
        let e = with("[bound]\nsigma = [1.5, 1.0]").unwrap_err();
        assert_eq!(path_of(e), "bound.sigma[1]");
        assert!(with("[bound]\nsigma = [1.0]\nconstant_policy = { scaled = 2.0 }").is_ok());
    }

    #[test]
    fn field_paths_for_bad_values() {
        assert_eq!(path_of(with("[bound]\nepsilon = 1.5").unwrap_err()), "bound.epsilon");
        assert_eq!(path_of(with("[bound]\nlambda = [1.0, -2.0]").unwrap_err()), "bound.lambda[1]");
        assert_eq!(path_of(with("[grid]\nwindow = [-2.0, 2.0]\nh = [0.25, 0.1]").unwrap_err()), "grid.h[1]");
        assert_eq!(path_of(with("[grid]\nwindow = [-2.1, 2.0]\nh = [0.25]").unwrap_err()), "grid.h[0]");
        assert_eq!(path_of(with("[bound]\nvariant = \"localized_even\"").unwrap_err()), "profile.s0");
        assert_eq!(path_of(RunConfig::parse(&format!("threads = 0\n{BASE}")).unwrap_err()), "threads");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = with("[bound]\nsigmas = [1.5]").unwrap_err();
        assert!(e.to_string().contains("sigmas"), "{e}");
    }

    #[test]
    fn bad_geometry_is_reported() {
        let e = RunConfig::parse(
            r#"
            [profile]
            family = "odd_poly"
            coefficients = [1.0]
            [cross_section]
            vertices = [[-1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
            "#,
        )
        .unwrap_err();
        assert_eq!(path_of(e), "cross_section.vertices");
    }

    #[test]
    fn lambda_grids() {
        let c = with("[bound]\nlambda_grid = { start = 1.0, stop = 100.0, count = 3, spacing = \"log\" }").unwrap();
        assert!((c.lambda[1] - 10.0).abs() < 1e-12);
        let c = with("[bound]\nlambda_grid = { start = 0.0, stop = 10.0, count = 3 }").unwrap();
        assert_eq!(c.lambda, vec![0.0, 5.0, 10.0]);
    }

    #[test]
    fn auto_window_and_tabulated_profile() {
        let c = RunConfig::parse(
            r#"
            [profile]
            family = "tabulated"
            x = [-3.0, 0.0, 3.0]
            theta = [9.0, 0.0, 9.0]
            [cross_section]
            vertices = [[1.0, -0.5], [2.0, -0.5], [2.0, 0.5], [1.0, 0.5]]
            [bound]
            variant = "even"
            epsilon = 0.5
            [grid]
            window = "auto"
            h = [0.25, 0.125]
            "#,
        )
        .unwrap();
        assert_eq!(c.grid().unwrap().window, WindowChoice::Auto);
        assert_eq!(c.epsilon, EpsilonChoice::Fixed(0.5));
    }
}
