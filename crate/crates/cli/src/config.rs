//! The JSON run configuration.

use std::path::{Path, PathBuf};

use hyprad_core::grid::{DataOrder, SolverMode, Unknown};
use hyprad_core::{DomainDescriptor, MaskedGrid, Shape, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: Shape,
    pub n: usize,
    /// Grid points per axis, ascending.
    pub resolutions: Vec<usize>,
    pub h_trunc: TruncationRule,
    #[serde(default)]
    pub solver: SolverSettings,
    /// Named suites for `verify`.
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Seed of the randomized identity-check sample points.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub verify: VerifySettings,
    #[serde(default)]
    pub radial: RadialSettings,
    #[serde(default)]
    pub fuchsian: FuchsianSettings,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Truncation width, either fixed or a multiple of the grid spacing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TruncationRule {
    Absolute(f64),
    GridMultiple(f64),
}

impl TruncationRule {
    pub fn resolve(self, h_grid: f64) -> f64 {
        match self {
            TruncationRule::Absolute(h) => h,
            TruncationRule::GridMultiple(k) => k * h_grid,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub mode: SolverMode,
    pub unknown: Unknown,
    pub data_order: DataOrder,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    pub linear_tolerance: f64,
    pub m_ladder: Vec<f64>,
    /// Store one orthant and reflect across the symmetry planes of the domain.
    pub mirror: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            mode: d.mode,
            unknown: d.unknown,
            data_order: d.data_order,
            tolerance: d.tolerance,
            max_iterations: d.max_iterations,
            max_halvings: d.max_halvings,
            linear_tolerance: d.linear_tolerance,
            m_ladder: d.m_ladder,
            mirror: true,
        }
    }
}

impl SolverSettings {
    /// The grid-independent part of the solver validation.
    fn check(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(CliError::Validation("solver tolerance and max_iterations must be positive".into()));
        }
        if self.m_ladder.windows(2).any(|w| !(w[0] < w[1])) || self.m_ladder.iter().any(|m| !(*m > 0.0)) {
            return Err(CliError::Validation("m_ladder must be positive and strictly increasing".into()));
        }
        if self.mode == SolverMode::MonotoneSequence && self.m_ladder.is_empty() {
            return Err(CliError::Validation("monotone-sequence mode needs a nonempty m_ladder".into()));
        }
        Ok(())
    }

    pub fn solver_config(&self, h_trunc: f64) -> SolverConfig {
        SolverConfig {
            h_trunc,
            mode: self.mode,
            unknown: self.unknown,
            data_order: self.data_order,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            max_halvings: self.max_halvings,
            linear_tolerance: self.linear_tolerance,
            m_ladder: self.m_ladder.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySettings {
    /// Relative tolerance of the sphere sandwich on grid and radial fields.
    pub sandwich_tolerance: f64,
    pub identity_tolerance: f64,
    pub identity_samples: usize,
    pub exponent: f64,
    pub singular_shift: f64,
    /// Distances at which boundary-expansion and `w` slopes are fitted.
    pub levels: Vec<f64>,
    pub expansion_min_slope: f64,
    pub tilde_w_min_slope: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            sandwich_tolerance: 1e-6,
            identity_tolerance: 1e-10,
            identity_samples: 1000,
            exponent: 0.5,
            singular_shift: 2.0,
            levels: vec![0.02, 0.04, 0.08],
            expansion_min_slope: 2.0,
            tilde_w_min_slope: 0.8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadialSettings {
    pub points: usize,
    /// Finite boundary values of the ladder; the maximal profile is always appended.
    pub ladder: Vec<f64>,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for RadialSettings {
    fn default() -> Self {
        Self {
            points: 512,
            ladder: vec![2.0, 4.0, 8.0, 16.0],
            tolerance: 1e-9,
            max_iterations: 100,
        }
    }
}

/// Data `k` on the strip `(Y, T)` for the model-operator inversion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StripData {
    /// `k = value`.
    Constant { value: f64 },
    /// `k = 1 + amplitude cos(pi Y_1 / theta)`.
    Cosine { amplitude: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FuchsianSettings {
    pub theta: f64,
    pub ny: usize,
    pub nt: usize,
    pub data: StripData,
}

impl Default for FuchsianSettings {
    fn default() -> Self {
        Self {
            theta: 1.0,
            ny: 128,
            nt: 128,
            data: StripData::Constant { value: 1.0 },
        }
    }
}

/// One resolution of a refinement study with its resolved widths.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Level {
    pub resolution: usize,
    pub h_grid: f64,
    pub h_trunc: f64,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::ConfigParse {
            path: path.to_path_buf(),
            message: format!("cannot read: {e}"),
        })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::ConfigParse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Checks the configuration and builds the domain.
    pub fn validate(&self) -> Result<DomainDescriptor> {
        if self.n < 3 {
            return Err(CliError::Validation("n ≥ 3 required".into()));
        }
        if self.domain.dim() != self.n {
            return Err(CliError::Validation(format!(
                "domain center has {} coordinates but n = {}",
                self.domain.dim(),
                self.n
            )));
        }
        let domain = DomainDescriptor::new(self.domain.clone())?;
        if self.resolutions.is_empty() {
            return Err(CliError::Validation("resolutions must be nonempty".into()));
        }
        if self.resolutions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Validation("resolutions must be strictly ascending".into()));
        }
        for level in self.levels(&domain) {
            if !(level.h_trunc >= level.h_grid) {
                return Err(CliError::Validation(format!(
                    "h_trunc = {} is below the grid spacing {} at resolution {}",
                    level.h_trunc, level.h_grid, level.resolution
                )));
            }
        }
        self.solver.check()?;
        Ok(domain)
    }

    pub fn levels(&self, domain: &DomainDescriptor) -> Vec<Level> {
        self.resolutions
            .iter()
            .map(|&resolution| {
                let h_grid = MaskedGrid::spacing_for(domain, resolution);
                Level {
                    resolution,
                    h_grid,
                    h_trunc: self.h_trunc.resolve(h_grid),
                }
            })
            .collect()
    }
}
