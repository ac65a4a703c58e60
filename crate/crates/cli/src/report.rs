//! `report`: a Markdown digest of the artifacts found in the output directory.

use std::fmt::Write as _;
use std::path::Path;

use hyprad_core::io::read_convergence_csv;
use serde_json::Value;

use crate::error::{CliError, Result};

fn read_json(path: &Path) -> Result<Option<Value>> {
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| CliError::Validation(format!("{} is not valid JSON: {e}", path.display())))
}

fn num(v: &Value) -> String {
    v.as_f64().map_or_else(|| v.to_string(), |x| format!("{x:.4e}"))
}

fn solve_section(doc: &mut String, summary: &Value, out: &Path) -> Result<()> {
    let _ = writeln!(doc, "## Solve\n");
    let _ = writeln!(doc, "Error metric: {}\n", summary["error_metric"].as_str().unwrap_or("?"));
    let _ = writeln!(doc, "| resolution | h_grid | h_trunc | Newton its | residual | critical points |");
    let _ = writeln!(doc, "|---|---|---|---|---|---|");
    for level in summary["levels"].as_array().into_iter().flatten() {
        let _ = writeln!(
            doc,
            "| {} | {} | {} | {} | {} | {} |",
            level["resolution"],
            num(&level["h_grid"]),
            num(&level["h_trunc"]),
            level["newton_iterations"],
            num(&level["residual"]),
            level["critical_points"].as_array().map_or(0, Vec::len)
        );
    }
    let csv = out.join("convergence.csv");
    if csv.exists() {
        let rows = read_convergence_csv(std::fs::File::open(&csv).map_err(CliError::io(&csv))?)?;
        let _ = writeln!(doc, "\n| resolution | error | observed order |");
        let _ = writeln!(doc, "|---|---|---|");
        for r in rows {
            let order = r.observed_order.map_or("-".to_string(), |o| format!("{o:.3}"));
            let _ = writeln!(doc, "| {} | {:.4e} | {} |", r.resolution, r.error, order);
        }
    }
    let _ = writeln!(doc);
    Ok(())
}

fn verify_section(doc: &mut String, report: &Value) {
    let _ = writeln!(doc, "## Verify\n");
    let _ = writeln!(doc, "| check | status | violations | worst margin | slopes |");
    let _ = writeln!(doc, "|---|---|---|---|---|");
    for check in report["checks"].as_array().into_iter().flatten() {
        let reports = check["reports"].as_array().cloned().unwrap_or_default();
        let violations: u64 = reports.iter().filter_map(|r| r["violations"].as_u64()).sum();
        let worst = reports
            .iter()
            .filter_map(|r| r["worst_margin"].as_f64())
            .fold(f64::INFINITY, f64::min);
        let slopes: Vec<String> = reports
            .iter()
            .flat_map(|r| r["fitted_slopes"].as_array().cloned().unwrap_or_default())
            .map(|s| num(&s))
            .collect();
        let worst = if worst.is_finite() { format!("{worst:.4e}") } else { "-".into() };
        let _ = writeln!(
            doc,
            "| {} | {} | {} | {} | {} |",
            check["name"].as_str().unwrap_or("?"),
            check["status"].as_str().unwrap_or("?"),
            violations,
            worst,
            slopes.join(", ")
        );
    }
    let _ = writeln!(doc, "\nAll passed: {}\n", report["passed"]);
}

fn radial_section(doc: &mut String, summary: &Value) {
    let _ = writeln!(doc, "## Radial\n");
    let _ = writeln!(doc, "| m | residual | Newton its | monotonicity violations |");
    let _ = writeln!(doc, "|---|---|---|---|");
    for p in summary["profiles"].as_array().into_iter().flatten() {
        let m = if p["boundary_value"].is_null() { "max".to_string() } else { num(&p["boundary_value"]) };
        let _ = writeln!(
            doc,
            "| {m} | {} | {} | {} |",
            num(&p["residual"]),
            p["newton_iterations"],
            p["monotonicity_violations"]
        );
    }
    let _ = writeln!(doc, "\nSandwich violations: {}\n", summary["sandwich"]["violations"]);
}

fn fuchsian_section(doc: &mut String, summary: &Value) {
    let _ = writeln!(doc, "## Model-operator inversion\n");
    for key in [
        "f0_trace_deviation",
        "assembled_trace_deviation",
        "l0_prime_residual",
        "f0_constant_deviation",
        "tail_share",
    ] {
        if !summary[key].is_null() {
            let _ = writeln!(doc, "- {key}: {}", num(&summary[key]));
        }
    }
    let _ = writeln!(doc);
}

/// Builds the digest from whichever artifacts exist and writes `report.md`.
pub fn run(out: &Path) -> Result<String> {
    let mut doc = String::from("# hyprad report\n\n");
    let mut found = false;
    if let Some(s) = read_json(&out.join("summary.json"))? {
        solve_section(&mut doc, &s, out)?;
        found = true;
    }
    if let Some(v) = read_json(&out.join("verify.json"))? {
        verify_section(&mut doc, &v);
        found = true;
    }
    if let Some(r) = read_json(&out.join("radial.json"))? {
        radial_section(&mut doc, &r);
        found = true;
    }
    if let Some(f) = read_json(&out.join("fuchsian.json"))? {
        fuchsian_section(&mut doc, &f);
        found = true;
    }
    if !found {
        return Err(CliError::Validation(format!("no run artifacts in {}", out.display())));
    }
    let path = out.join("report.md");
    std::fs::write(&path, &doc).map_err(CliError::io(&path))?;
    Ok(doc)
}
