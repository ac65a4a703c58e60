//! `hyprad`: batch front-end for solves, radial profiles, model-operator
//! inversions and verification suites.
//!
//! Exit codes: 0 success, 1 invalid configuration, 2 solver failure,
//! 3 verification failure.

mod config;
mod error;
mod fuchsian;
mod output;
mod radial;
mod report;
mod solve;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

#[derive(Parser)]
#[command(name = "hyprad", version, about = "Maximal blow-up solutions, hyperbolic radius and boundary diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve at each resolution; write u, v, w fields, summary.json and convergence.csv.
    Solve(Common),
    /// Run named check suites and write verify.json.
    Verify(Common),
    /// Invert the model operator on the strip; write strip fields and fuchsian.json.
    FuchsianInvert(Common),
    /// Solve the radial ladder for ball or shell domains; write profiles and radial.json.
    Radial(Common),
    /// Summarize the artifacts of the output directory into report.md.
    Report(ReportArgs),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Check suite to run (repeatable), overriding the configuration.
    #[arg(long = "check", value_name = "NAME")]
    checks: Vec<String>,
    /// Grid resolution (repeatable), overriding the configuration.
    #[arg(long = "resolution", value_name = "N")]
    resolutions: Vec<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// JSON run configuration; supplies the output directory.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory to summarize.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<(RunConfig, PathBuf)> {
        let mut cfg = RunConfig::load(&self.config)?;
        if !self.checks.is_empty() {
            cfg.checks = self.checks.clone();
        }
        if !self.resolutions.is_empty() {
            let mut res = self.resolutions.clone();
            res.sort_unstable();
            res.dedup();
            cfg.resolutions = res;
        }
        let out = self.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
        Ok((cfg, out))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(args) => {
            let (cfg, out) = args.load()?;
            let summary = solve::run(&cfg, &out)?;
            for level in &summary.levels {
                println!(
                    "resolution {}: {} Newton iterations, residual {:.3e}",
                    level.resolution, level.newton_iterations, level.residual
                );
            }
            println!("wrote {}", out.display());
        }
        Command::Verify(args) => {
            let (cfg, out) = args.load()?;
            let report = verify::run(&cfg, &out)?;
            for check in &report.checks {
                let status = serde_json::to_value(check.status).map_err(|e| CliError::Validation(e.to_string()))?;
                println!("{}: {}", check.name, status.as_str().unwrap_or("?"));
                if let Some(err) = &check.error {
                    println!("  {err}");
                }
            }
            println!("wrote {}", out.join("verify.json").display());
            if !report.passed {
                let failed: Vec<&str> = report
                    .checks
                    .iter()
                    .filter(|c| c.status != verify::Status::Passed)
                    .map(|c| c.name.as_str())
                    .collect();
                return Err(CliError::Verification(failed.join(", ")));
            }
        }
        Command::FuchsianInvert(args) => {
            let (cfg, out) = args.load()?;
            let s = fuchsian::run(&cfg, &out)?;
            println!(
                "f0 trace deviation {:.3e}, L0' residual {:.3e}",
                s.f0_trace_deviation, s.l0_prime_residual
            );
            println!("wrote {}", out.display());
        }
        Command::Radial(args) => {
            let (cfg, out) = args.load()?;
            let s = radial::run(&cfg, &out)?;
            println!(
                "{} profiles, sandwich violations {}",
                s.profiles.len(),
                s.sandwich.violations
            );
            println!("wrote {}", out.display());
        }
        Command::Report(args) => {
            let out = match (args.out, args.config) {
                (Some(out), _) => out,
                (None, Some(path)) => RunConfig::load(&path)?.out_dir,
                (None, None) => return Err(CliError::Validation("report needs --out or --config".into())),
            };
            print!("{}", report::run(&out)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
