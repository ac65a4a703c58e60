//! `fuchsian-invert`: inverts the model operator on the strip for configured data.

use std::f64::consts::PI;
use std::path::Path;

use hyprad_core::fuchsian::{apply_l0_prime, assemble_model_solution, invert_model_operator};
use hyprad_core::io::StructuredGrid;
use hyprad_core::StripField;
use serde::Serialize;

use crate::config::{RunConfig, StripData};
use crate::error::{CliError, Result};
use crate::output::write_json;

#[derive(Debug, Serialize)]
pub struct InversionSummary {
    pub n: usize,
    pub theta: f64,
    pub ny: usize,
    pub nt: usize,
    pub data: StripData,
    /// `max |f0(Y,0) + k(Y,0)/2|`.
    pub f0_trace_deviation: f64,
    /// `max |f(Y,0) - k(Y,0)/(2-2n)|` for the assembled `f = G[k/(n-1)]`.
    pub assembled_trace_deviation: f64,
    /// `max |L0' f0 - k|` over `T > 4 dT`.
    pub l0_prime_residual: f64,
    /// `max |f0 + value/2|` over the whole strip, for constant data.
    pub f0_constant_deviation: Option<f64>,
    pub tail_share: f64,
    pub tail_warning: bool,
}

pub struct Inversion {
    pub summary: InversionSummary,
    pub fields: Vec<(String, StripField)>,
}

fn strip_data(cfg: &RunConfig) -> Result<StripField> {
    let f = &cfg.fuchsian;
    let theta = f.theta;
    let field = match f.data {
        StripData::Constant { value } => StripField::from_fn(cfg.n, theta, f.ny, f.nt, |_, _| value),
        StripData::Cosine { amplitude } => {
            StripField::from_fn(cfg.n, theta, f.ny, f.nt, |y, _| 1.0 + amplitude * (PI * y[0] / theta).cos())
        }
    };
    Ok(field?)
}

pub fn invert(cfg: &RunConfig) -> Result<Inversion> {
    if cfg.n < 3 {
        return Err(CliError::Validation("n ≥ 3 required".into()));
    }
    let k = strip_data(cfg)?;
    let inv = invert_model_operator(&k)?;
    let f = assemble_model_solution(&k)?;
    let trace = |field: &StripField, target: &dyn Fn(f64) -> f64| {
        (0..k.columns())
            .map(|c| (field.get(c, 0) - target(k.get(c, 0))).abs())
            .fold(0.0, f64::max)
    };
    let n = cfg.n as f64;
    let residual = apply_l0_prime(&inv.f0).zip_with(&k, |a, b| a - b)?;
    let summary = InversionSummary {
        n: cfg.n,
        theta: cfg.fuchsian.theta,
        ny: cfg.fuchsian.ny,
        nt: cfg.fuchsian.nt,
        data: cfg.fuchsian.data,
        f0_trace_deviation: trace(&inv.f0, &|kv| -0.5 * kv),
        assembled_trace_deviation: trace(&f, &|kv| kv / (2.0 - 2.0 * n)),
        l0_prime_residual: residual.max_abs_above(4.0 * k.dt()),
        f0_constant_deviation: match cfg.fuchsian.data {
            StripData::Constant { value } => Some(inv.f0.map(|v| v + 0.5 * value).max_abs_above(-1.0)),
            StripData::Cosine { .. } => None,
        },
        tail_share: inv.tail_share,
        tail_warning: inv.tail_warning,
    };
    let fields = vec![
        ("k".to_string(), k),
        ("k_tilde".to_string(), inv.k_tilde),
        ("f0".to_string(), inv.f0),
        ("f".to_string(), f),
    ];
    Ok(Inversion { summary, fields })
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<InversionSummary> {
    let inversion = invert(cfg)?;
    std::fs::create_dir_all(out).map_err(CliError::io(out))?;
    for (name, field) in &inversion.fields {
        let path = out.join(format!("strip_{name}.grid"));
        StructuredGrid::from_strip(field, name).save(&path).map_err(|e| match e {
            hyprad_core::Error::Io(source) => CliError::Io { path, source },
            other => CliError::from(other),
        })?;
    }
    write_json(&out.join("fuchsian.json"), &inversion.summary)?;
    Ok(inversion.summary)
}
