//! `solve`: refinement study with field files, a JSON summary and a convergence table.

use std::path::Path;
use std::sync::Arc;

use hyprad_core::convergence::observed_order;
use hyprad_core::grid::{hyperbolic_critical_points, renormalized_w, solve_truncated, CriticalPoint, Solution};
use hyprad_core::io::{write_convergence_csv, ConvergenceRow, StructuredGrid};
use hyprad_core::radial::solve_radial_maximal;
use hyprad_core::{BoundaryValue, DomainDescriptor, MaskedGrid, RadialGeometry, RadialOptions, ScalarField, Shape};
use serde::Serialize;

use crate::config::{Level, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{create_file, write_json};

/// Points of the radial reference profile for shells.
const REFERENCE_POINTS: usize = 4097;

#[derive(Debug, Serialize)]
pub struct LevelSummary {
    pub resolution: usize,
    pub h_grid: f64,
    pub h_trunc: f64,
    pub interior_nodes: usize,
    pub newton_iterations: usize,
    pub linear_iterations: usize,
    pub residual: f64,
    pub residual_history: Vec<f64>,
    pub critical_points: Vec<CriticalPoint>,
    pub files: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct SolveSummary {
    pub domain: Shape,
    pub n: usize,
    pub error_metric: String,
    pub levels: Vec<LevelSummary>,
}

pub fn solve_level(domain: &DomainDescriptor, cfg: &RunConfig, level: Level) -> Result<Solution> {
    let grid = Arc::new(MaskedGrid::build(domain, level.resolution, level.h_trunc, cfg.solver.mirror)?);
    Ok(solve_truncated(&grid, &cfg.solver.solver_config(level.h_trunc))?)
}

/// Exact or reference hyperbolic radius as a function of position, if the domain has one.
enum Reference {
    Ball { center: Vec<f64>, radius: f64 },
    Shell { center: Vec<f64>, v: hyprad_core::RadialProfile },
    SelfConvergence,
}

impl Reference {
    fn new(cfg: &RunConfig) -> Result<Self> {
        Ok(match &cfg.domain {
            Shape::Ball { center, radius } => Reference::Ball {
                center: center.clone(),
                radius: *radius,
            },
            Shape::Shell {
                center,
                inner_radius,
                outer_radius,
            } => {
                let geo = RadialGeometry::Shell {
                    inner_radius: *inner_radius,
                    outer_radius: *outer_radius,
                };
                let profile =
                    solve_radial_maximal(cfg.n, geo, REFERENCE_POINTS, BoundaryValue::Infinite, RadialOptions::default())?;
                Reference::Shell {
                    center: center.clone(),
                    v: profile,
                }
            }
            Shape::Ellipsoid { .. } => Reference::SelfConvergence,
        })
    }

    fn describe(&self) -> &'static str {
        match self {
            Reference::Ball { .. } => "max |v - v_exact| over nodes with d > r0/5",
            Reference::Shell { .. } => "max |v - v_radial| over nodes with d > r0/5",
            Reference::SelfConvergence => "|v(center) - v_finest(center)|",
        }
    }

    fn value(&self, x: &[f64], n: usize) -> Option<f64> {
        let radius_of = |c: &[f64]| x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        match self {
            Reference::Ball { center, radius } => {
                let r = radius_of(center);
                Some((radius * radius - r * r) / radius)
            }
            Reference::Shell { center, v } => v
                .interpolate_u(radius_of(center))
                .map(|u| u.powf(-2.0 / (n as f64 - 2.0))),
            Reference::SelfConvergence => None,
        }
    }
}

fn center_value(v: &ScalarField) -> Result<f64> {
    let zero = vec![0; v.grid().dim()];
    v.grid()
        .node_at(&zero)
        .map(|id| v.value(id))
        .filter(|x| x.is_finite())
        .ok_or_else(|| CliError::Validation("the domain center is not a solved node".into()))
}

fn level_error(reference: &Reference, v: &ScalarField, n: usize) -> Option<f64> {
    let grid = v.grid();
    let r0 = grid.domain().r0();
    let mut worst: Option<f64> = None;
    for (id, val) in v.iter_defined() {
        if !grid.distance_data(id).is_some_and(|dd| dd.d > 0.2 * r0) {
            continue;
        }
        if let Some(exact) = reference.value(&grid.position(id), n) {
            worst = Some(worst.unwrap_or(0.0).max((val - exact).abs()));
        }
    }
    worst
}

/// Rows of the refinement table; self-convergence has no row for the finest level.
fn convergence_rows(
    reference: &Reference,
    n: usize,
    levels: &[Level],
    solutions: &[Solution],
) -> Result<Vec<ConvergenceRow>> {
    let errors: Vec<Option<f64>> = match reference {
        Reference::SelfConvergence => {
            let finest = center_value(&solutions.last().expect("nonempty").v)?;
            let mut errs = solutions
                .iter()
                .map(|s| center_value(&s.v).map(|c| Some((c - finest).abs())))
                .collect::<Result<Vec<_>>>()?;
            *errs.last_mut().expect("nonempty") = None;
            errs
        }
        r => solutions.iter().map(|s| level_error(r, &s.v, n)).collect(),
    };
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for (level, err) in levels.iter().zip(errors) {
        let Some(error) = err else { continue };
        let observed = rows
            .last()
            .and_then(|prev| observed_order(prev.error, error, prev.h_grid / level.h_grid).ok());
        rows.push(ConvergenceRow {
            resolution: level.resolution,
            h_grid: level.h_grid,
            h_trunc: level.h_trunc,
            error,
            observed_order: observed,
        });
    }
    Ok(rows)
}

fn write_field(out: &Path, field: &ScalarField, name: &str) -> Result<String> {
    let path = out.join(name);
    StructuredGrid::from_field(field).save(&path).map_err(|e| match e {
        hyprad_core::Error::Io(source) => CliError::Io { path, source },
        other => CliError::from(other),
    })?;
    Ok(name.to_string())
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<SolveSummary> {
    let domain = cfg.validate()?;
    std::fs::create_dir_all(out).map_err(CliError::io(out))?;
    let levels = cfg.levels(&domain);
    let mut summaries = Vec::new();
    let mut solutions = Vec::new();
    for &level in &levels {
        let sol = solve_level(&domain, cfg, level)?;
        let w = renormalized_w(&sol.v)?;
        let files = vec![
            write_field(out, &sol.u, &format!("u_{}.grid", level.resolution))?,
            write_field(out, &sol.v, &format!("v_{}.grid", level.resolution))?,
            write_field(out, &w, &format!("w_{}.grid", level.resolution))?,
        ];
        summaries.push(LevelSummary {
            resolution: level.resolution,
            h_grid: level.h_grid,
            h_trunc: level.h_trunc,
            interior_nodes: sol.u.grid().interior_nodes().len(),
            newton_iterations: sol.stats.newton_iterations,
            linear_iterations: sol.stats.linear_iterations,
            residual: sol.stats.residual,
            residual_history: sol.stats.residual_history.clone(),
            critical_points: hyperbolic_critical_points(&sol.v),
            files,
        });
        solutions.push(sol);
    }
    let reference = Reference::new(cfg)?;
    let rows = convergence_rows(&reference, cfg.n, &levels, &solutions)?;
    let csv_path = out.join("convergence.csv");
    write_convergence_csv(create_file(&csv_path)?, &rows).map_err(CliError::from)?;
    let summary = SolveSummary {
        domain: cfg.domain.clone(),
        n: cfg.n,
        error_metric: reference.describe().into(),
        levels: summaries,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}
