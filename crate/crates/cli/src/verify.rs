//! `verify`: named check suites aggregated into one JSON report.

use std::collections::BTreeMap;
use std::path::Path;

use hyprad_core::comparison::{
    closed_form_identity_check, maximum_principle_witness, measure_quadratic_bound, radial_sandwich_check,
    select_collar_width, sphere_sandwich_check, verify_tilde_w_bound, BarrierKind, BarrierSpec, CheckReport,
};
use hyprad_core::convergence::{loglog_slope, observed_order, shell_maxima};
use hyprad_core::fuchsian::{fr_residual, FuchsianContext};
use hyprad_core::grid::{renormalized_w, NodeClass, Solution};
use hyprad_core::radial::{monotonicity_violations, solve_radial_maximal};
use hyprad_core::{BoundaryValue, DomainDescriptor, RadialGeometry, RadialOptions, ScalarField, Shape};
use serde::Serialize;

use crate::config::{Level, RunConfig};
use crate::error::{CliError, Result};
use crate::fuchsian;
use crate::output::write_json;
use crate::solve::solve_level;

pub const CHECKS: [&str; 9] = [
    "sandwich",
    "radial-sandwich",
    "monotonicity",
    "identities",
    "expansion",
    "tilde-w",
    "witness",
    "fr-residual",
    "fuchsian",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Passed,
    Failed,
    Errored,
}

#[derive(Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub status: Status,
    pub reports: Vec<CheckReport>,
    /// Named scalar diagnostics, sorted by key.
    pub values: BTreeMap<String, f64>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

#[derive(Default)]
struct Findings {
    reports: Vec<CheckReport>,
    values: BTreeMap<String, f64>,
}

impl Findings {
    fn value(mut self, key: &str, v: f64) -> Self {
        self.values.insert(key.into(), v);
        self
    }
}

/// Solutions computed on demand, one per configured resolution.
struct Solves<'a> {
    cfg: &'a RunConfig,
    domain: &'a DomainDescriptor,
    levels: Vec<Level>,
    cache: Vec<Option<Solution>>,
}

impl<'a> Solves<'a> {
    fn new(cfg: &'a RunConfig, domain: &'a DomainDescriptor) -> Self {
        let levels = cfg.levels(domain);
        let cache = levels.iter().map(|_| None).collect();
        Self {
            cfg,
            domain,
            levels,
            cache,
        }
    }

    fn get(&mut self, k: usize) -> Result<&Solution> {
        if self.cache[k].is_none() {
            self.cache[k] = Some(solve_level(self.domain, self.cfg, self.levels[k])?);
        }
        Ok(self.cache[k].as_ref().expect("just solved"))
    }

    fn finest(&mut self) -> Result<&Solution> {
        self.get(self.levels.len() - 1)
    }
}

fn radial_geometry(cfg: &RunConfig) -> Result<RadialGeometry> {
    match cfg.domain {
        Shape::Ball { radius, .. } => Ok(RadialGeometry::Ball { radius }),
        Shape::Shell {
            inner_radius,
            outer_radius,
            ..
        } => Ok(RadialGeometry::Shell {
            inner_radius,
            outer_radius,
        }),
        Shape::Ellipsoid { .. } => Err(CliError::Validation("radial profiles need a ball or shell domain".into())),
    }
}

fn radial_options(cfg: &RunConfig) -> RadialOptions {
    RadialOptions {
        tolerance: cfg.radial.tolerance,
        max_iterations: cfg.radial.max_iterations,
    }
}

fn check_sandwich(cfg: &RunConfig, solves: &mut Solves) -> Result<Findings> {
    let report = sphere_sandwich_check(&solves.finest()?.u, cfg.verify.sandwich_tolerance)?;
    Ok(Findings {
        reports: vec![report],
        ..Default::default()
    })
}

fn check_radial_sandwich(cfg: &RunConfig) -> Result<Findings> {
    let geo = radial_geometry(cfg)?;
    let profile = solve_radial_maximal(cfg.n, geo, cfg.radial.points, BoundaryValue::Infinite, radial_options(cfg))?;
    let report = radial_sandwich_check(&profile, cfg.verify.sandwich_tolerance);
    let r0 = geo.r0();
    let w_excess = profile
        .distance()
        .into_iter()
        .zip(profile.w())
        .filter(|(d, _)| *d > 0.0 && *d <= r0)
        .map(|(_, w)| w.abs() - 1.0 / r0)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Findings {
        reports: vec![report],
        ..Default::default()
    }
    .value("max_abs_w_minus_inverse_r0", w_excess))
}

fn check_monotonicity(cfg: &RunConfig) -> Result<Findings> {
    let geo = radial_geometry(cfg)?;
    let opts = radial_options(cfg);
    let ladder: Vec<BoundaryValue> = cfg
        .radial
        .ladder
        .iter()
        .map(|&m| BoundaryValue::Finite(m))
        .chain(std::iter::once(BoundaryValue::Infinite))
        .collect();
    let profiles = ladder
        .iter()
        .map(|&m| solve_radial_maximal(cfg.n, geo, cfg.radial.points, m, opts))
        .collect::<hyprad_core::Result<Vec<_>>>()?;
    let mut report = CheckReport::new("radial-ladder-monotonicity");
    for pair in profiles.windows(2) {
        let bad = monotonicity_violations(&pair[0], &pair[1], 1e-10);
        report.record(-(bad as f64), Vec::new);
    }
    Ok(Findings {
        reports: vec![report],
        ..Default::default()
    })
}

fn check_identities(cfg: &RunConfig, domain: &DomainDescriptor) -> Result<Findings> {
    let v = &cfg.verify;
    let reports = closed_form_identity_check(
        domain,
        v.identity_samples,
        cfg.seed,
        v.exponent,
        v.singular_shift,
        v.identity_tolerance,
    )?;
    Ok(Findings {
        reports,
        ..Default::default()
    })
}

/// Slope of the shell maxima of `|v - 2d + d^2 H|` at each resolution, with the
/// normalized maxima `/ d^2` as values.
fn check_expansion(cfg: &RunConfig, solves: &mut Solves) -> Result<Findings> {
    let levels = cfg.verify.levels.clone();
    let mut report = CheckReport::new("boundary-expansion");
    let mut findings = Findings::default();
    for k in 0..solves.levels.len() {
        let resolution = solves.levels[k].resolution;
        let sol = solves.get(k)?;
        let grid = sol.v.grid().clone();
        let maxima = shell_maxima(&grid, &levels, 0.5 * grid.spacing(), |id, dd| {
            (grid.class(id) == NodeClass::Interior)
                .then(|| (sol.v.value(id) - 2.0 * dd.d + dd.d * dd.d * dd.mean_curvature).abs())
        })?;
        for (level, m) in levels.iter().zip(&maxima) {
            findings
                .values
                .insert(format!("res{resolution}_d{level}_normalized_max"), m / (level * level));
        }
        report.fitted_slopes.push(loglog_slope(&levels, &maxima)?);
        report.samples += levels.len();
    }
    let finest = *report.fitted_slopes.last().expect("nonempty");
    report.worst_margin = finest - cfg.verify.expansion_min_slope;
    report.passed = report.worst_margin >= 0.0;
    findings.reports.push(report);
    Ok(findings)
}

struct Collar {
    quadratic_bound: f64,
    delta: f64,
}

/// `w` of the finest solve with the measured bound `c` and the selected collar width.
fn collar(cfg: &RunConfig, domain: &DomainDescriptor, solves: &mut Solves) -> Result<(Collar, ScalarField)> {
    let w = renormalized_w(&solves.finest()?.v)?;
    let ctx = FuchsianContext::new(cfg.n, cfg.verify.exponent, 0.5 * domain.r0(), domain.r0())?;
    let c = measure_quadratic_bound(&ctx, &w)?;
    let barriers = [
        BarrierSpec {
            kind: BarrierKind::W0PlusAd,
            linear_coefficient: c / (cfg.n as f64 - 2.0),
            ..Default::default()
        },
        BarrierSpec {
            kind: BarrierKind::EpsilonSingular,
            singular_shift: cfg.verify.singular_shift,
            ..Default::default()
        },
    ];
    let selection = select_collar_width(domain, &barriers, c, cfg.verify.identity_samples, cfg.seed)?;
    let delta = selection.delta.ok_or_else(|| {
        CliError::Validation(format!(
            "no collar width in {{r0/2, r0/4, r0/8}} satisfies the sign conditions with singular_shift = {}; \
             increase it",
            cfg.verify.singular_shift
        ))
    })?;
    Ok((
        Collar {
            quadratic_bound: c,
            delta,
        },
        w,
    ))
}

fn check_tilde_w(cfg: &RunConfig, domain: &DomainDescriptor, solves: &mut Solves) -> Result<Findings> {
    let (collar, w) = collar(cfg, domain, solves)?;
    let a = collar.quadratic_bound / (cfg.n as f64 - 2.0);
    let report = verify_tilde_w_bound(&w, a, collar.delta, 0.0, &cfg.verify.levels, cfg.verify.tilde_w_min_slope)?;
    Ok(Findings {
        reports: vec![report],
        ..Default::default()
    }
    .value("quadratic_bound", collar.quadratic_bound)
    .value("collar_width", collar.delta)
    .value("linear_coefficient", a))
}

fn check_witness(cfg: &RunConfig, domain: &DomainDescriptor, solves: &mut Solves) -> Result<Findings> {
    let (collar, w) = collar(cfg, domain, solves)?;
    let barrier = BarrierSpec {
        kind: BarrierKind::EpsilonSingular,
        linear_coefficient: collar.quadratic_bound / (cfg.n as f64 - 2.0),
        singular_shift: cfg.verify.singular_shift,
        singular_weight: 1e-6,
        collar_width: collar.delta,
        ..Default::default()
    };
    let report = maximum_principle_witness(&w, &barrier)?;
    Ok(Findings {
        reports: vec![report],
        ..Default::default()
    }
    .value("collar_width", collar.delta))
}

/// Max of `|L w + 2 lap d - M_w(w)|` on `{2 h_trunc < d < r0/2}` per resolution;
/// passes when it does not grow under refinement.
fn check_fr_residual(cfg: &RunConfig, domain: &DomainDescriptor, solves: &mut Solves) -> Result<Findings> {
    let delta = 0.5 * domain.r0();
    let ctx = FuchsianContext::new(cfg.n, cfg.verify.exponent, delta, domain.r0())?;
    let mut report = CheckReport::new("fr-residual");
    let mut findings = Findings::default();
    let mut previous: Option<(f64, f64)> = None;
    for k in 0..solves.levels.len() {
        let level = solves.levels[k];
        let sol = solves.get(k)?;
        let grid = sol.u.grid().clone();
        let fr = fr_residual(&ctx, &sol.u)?;
        let worst = fr.max_abs_where(|id| {
            grid.distance_data(id)
                .is_some_and(|dd| dd.d > 2.0 * level.h_trunc && dd.d < delta)
        });
        findings.values.insert(format!("res{}_max_residual", level.resolution), worst);
        if let Some((h_prev, prev)) = previous {
            report.record(prev - worst, || vec![level.h_grid]);
            if let Ok(order) = observed_order(prev, worst, h_prev / level.h_grid) {
                report.fitted_slopes.push(order);
            }
        }
        previous = Some((level.h_grid, worst));
    }
    findings.reports.push(report);
    Ok(findings)
}

fn check_fuchsian(cfg: &RunConfig) -> Result<Findings> {
    let summary = fuchsian::invert(cfg)?.summary;
    let mut report = CheckReport::new("fuchsian-inversion");
    report.record(1e-6 - summary.f0_trace_deviation, Vec::new);
    report.record(1e-6 - summary.assembled_trace_deviation, Vec::new);
    report.record(1e-4 - summary.l0_prime_residual, Vec::new);
    let mut findings = Findings {
        reports: vec![report],
        ..Default::default()
    }
    .value("f0_trace_deviation", summary.f0_trace_deviation)
    .value("assembled_trace_deviation", summary.assembled_trace_deviation)
    .value("l0_prime_residual", summary.l0_prime_residual)
    .value("tail_share", summary.tail_share);
    if let Some(dev) = summary.f0_constant_deviation {
        findings = findings.value("f0_max_deviation_from_constant", dev);
    }
    Ok(findings)
}

fn run_check(name: &str, cfg: &RunConfig, domain: &DomainDescriptor, solves: &mut Solves) -> Result<Findings> {
    match name {
        "sandwich" => check_sandwich(cfg, solves),
        "radial-sandwich" => check_radial_sandwich(cfg),
        "monotonicity" => check_monotonicity(cfg),
        "identities" => check_identities(cfg, domain),
        "expansion" => check_expansion(cfg, solves),
        "tilde-w" => check_tilde_w(cfg, domain, solves),
        "witness" => check_witness(cfg, domain, solves),
        "fr-residual" => check_fr_residual(cfg, domain, solves),
        "fuchsian" => check_fuchsian(cfg),
        other => Err(CliError::Validation(format!("unknown check '{other}'"))),
    }
}

/// Runs the named checks, or every check when none is named.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<VerifyReport> {
    let domain = cfg.validate()?;
    let names: Vec<String> = if cfg.checks.is_empty() {
        CHECKS.iter().map(|s| s.to_string()).collect()
    } else {
        cfg.checks.clone()
    };
    if let Some(bad) = names.iter().find(|n| !CHECKS.contains(&n.as_str())) {
        return Err(CliError::Validation(format!(
            "unknown check '{bad}'; available: {}",
            CHECKS.join(", ")
        )));
    }
    std::fs::create_dir_all(out).map_err(CliError::io(out))?;
    let mut solves = Solves::new(cfg, &domain);
    let mut checks = Vec::new();
    for name in &names {
        let outcome = match run_check(name, cfg, &domain, &mut solves) {
            Ok(f) => CheckOutcome {
                name: name.clone(),
                status: if f.reports.iter().all(|r| r.passed) {
                    Status::Passed
                } else {
                    Status::Failed
                },
                reports: f.reports,
                values: f.values,
                error: None,
            },
            Err(e) => CheckOutcome {
                name: name.clone(),
                status: Status::Errored,
                reports: Vec::new(),
                values: BTreeMap::new(),
                error: Some(e.to_string()),
            },
        };
        checks.push(outcome);
    }
    let passed = checks.iter().all(|c| c.status == Status::Passed);
    let report = VerifyReport { checks, passed };
    write_json(&out.join("verify.json"), &report)?;
    Ok(report)
}
