//! `radial`: ladder of radial profiles for ball and shell domains.

use std::path::Path;

use hyprad_core::comparison::{radial_sandwich_check, CheckReport};
use hyprad_core::io::write_radial_csv;
use hyprad_core::radial::{monotonicity_violations, solve_radial_maximal};
use hyprad_core::{BoundaryValue, RadialGeometry, RadialOptions, Shape};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{create_file, write_json};

#[derive(Debug, Serialize)]
pub struct ProfileSummary {
    /// Boundary value `m`, absent for the maximal profile.
    pub boundary_value: Option<f64>,
    pub file: String,
    pub residual: f64,
    pub newton_iterations: usize,
    /// Violations of `u_previous <= u_this` against the previous rung.
    pub monotonicity_violations: usize,
}

#[derive(Debug, Serialize)]
pub struct RadialSummary {
    pub n: usize,
    pub geometry: RadialGeometry,
    pub points: usize,
    pub profiles: Vec<ProfileSummary>,
    pub sandwich: CheckReport,
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<RadialSummary> {
    cfg.validate()?;
    let geometry = match cfg.domain {
        Shape::Ball { radius, .. } => RadialGeometry::Ball { radius },
        Shape::Shell {
            inner_radius,
            outer_radius,
            ..
        } => RadialGeometry::Shell {
            inner_radius,
            outer_radius,
        },
        Shape::Ellipsoid { .. } => {
            return Err(CliError::Validation("radial profiles need a ball or shell domain".into()))
        }
    };
    let r = &cfg.radial;
    if r.ladder.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(CliError::Validation("radial ladder must be strictly increasing".into()));
    }
    let opts = RadialOptions {
        tolerance: r.tolerance,
        max_iterations: r.max_iterations,
    };
    std::fs::create_dir_all(out).map_err(CliError::io(out))?;
    let rungs = r
        .ladder
        .iter()
        .map(|&m| BoundaryValue::Finite(m))
        .chain(std::iter::once(BoundaryValue::Infinite));
    let mut profiles = Vec::new();
    let mut summaries = Vec::new();
    for m in rungs {
        let profile = solve_radial_maximal(cfg.n, geometry, r.points, m, opts)?;
        let (value, file) = match m {
            BoundaryValue::Finite(v) => (Some(v), format!("radial_m{v}.csv")),
            BoundaryValue::Infinite => (None, "radial_maximal.csv".to_string()),
        };
        let path = out.join(&file);
        write_radial_csv(create_file(&path)?, &profile)?;
        let violations = profiles.last().map_or(0, |prev| monotonicity_violations(prev, &profile, 1e-10));
        summaries.push(ProfileSummary {
            boundary_value: value,
            file,
            residual: profile.residual,
            newton_iterations: profile.newton_iterations,
            monotonicity_violations: violations,
        });
        profiles.push(profile);
    }
    let maximal = profiles.last().expect("the maximal rung is always solved");
    let summary = RadialSummary {
        n: cfg.n,
        geometry,
        points: r.points,
        profiles: summaries,
        sandwich: radial_sandwich_check(maximal, cfg.verify.sandwich_tolerance),
    };
    write_json(&out.join("radial.json"), &summary)?;
    Ok(summary)
}
