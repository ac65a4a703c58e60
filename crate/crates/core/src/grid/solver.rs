use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::{asymptotic_v, hyperbolic_radius, v_to_u, DataOrder, Quantity, ScalarField};
use super::mesh::MaskedGrid;
use crate::error::{Error, Result};
use crate::linalg::{bicgstab, gmres, pcg};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMode {
    #[default]
    Newton,
    /// Solve with layer data `min(m, asymptotic)` for each `m` of the ladder,
    /// then with the asymptotic data.
    MonotoneSequence,
}

/// Which quantity Newton iterates on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Unknown {
    /// `-lap u + n(n-2) u^{(n+2)/(n-2)} = 0`, symmetric linearization.
    #[default]
    BlowUp,
    /// `v lap v = (n/2)(|grad v|^2 - 4)`, smooth up to the boundary.
    HyperbolicRadius,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub h_trunc: f64,
    pub mode: SolverMode,
    pub unknown: Unknown,
    pub data_order: DataOrder,
    /// Max-norm tolerance on the discrete residual at interior nodes.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Step halvings allowed per Newton iteration.
    pub max_halvings: usize,
    /// Relative tolerance of the inner Krylov solve.
    pub linear_tolerance: f64,
    pub m_ladder: Vec<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            h_trunc: 0.0,
            mode: SolverMode::Newton,
            unknown: Unknown::BlowUp,
            data_order: DataOrder::TwoTerm,
            tolerance: 1e-8,
            max_iterations: 50,
            max_halvings: 30,
            linear_tolerance: 1e-10,
            m_ladder: Vec::new(),
        }
    }
}

impl SolverConfig {
    pub fn new(h_trunc: f64) -> Self {
        Self {
            h_trunc,
            ..Self::default()
        }
    }

    pub fn validate(&self, grid: &MaskedGrid) -> Result<()> {
        if (self.h_trunc - grid.h_trunc()).abs() > 1e-12 * grid.h_trunc() {
            return Err(Error::InvalidArgument(format!(
                "config h_trunc {} differs from the grid's {}",
                self.h_trunc,
                grid.h_trunc()
            )));
        }
        if self.h_trunc < grid.spacing() {
            return Err(Error::InvalidArgument("h_trunc must be at least the grid spacing".into()));
        }
        if !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(Error::InvalidArgument("tolerance and max_iterations must be positive".into()));
        }
        if self.m_ladder.windows(2).any(|w| !(w[0] < w[1])) || self.m_ladder.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::InvalidArgument("m-ladder must be positive and strictly increasing".into()));
        }
        if self.mode == SolverMode::MonotoneSequence {
            if self.m_ladder.is_empty() {
                return Err(Error::InvalidArgument("monotone mode needs a nonempty m-ladder".into()));
            }
            if self.unknown != Unknown::BlowUp {
                return Err(Error::InvalidArgument("monotone mode iterates on u".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolveStats {
    pub newton_iterations: usize,
    pub linear_iterations: usize,
    pub residual: f64,
    pub residual_history: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub u: ScalarField,
    pub v: ScalarField,
    pub stats: SolveStats,
    /// Intermediate fields of the monotone sequence, in ladder order.
    pub ladder: Vec<ScalarField>,
}

/// Interior unknowns with their stencils.
struct Stencil {
    nodes: Vec<usize>,
    unknown_of: Vec<usize>,
    neighbors: Vec<usize>,
    /// Row weights that make the reflected Laplacian symmetric.
    weight: Vec<f64>,
    n: usize,
    h2: f64,
}

const FIXED: usize = usize::MAX;

impl Stencil {
    fn new(grid: &MaskedGrid) -> Self {
        let n = grid.dim();
        let nodes = grid.interior_nodes().to_vec();
        let mut unknown_of = vec![FIXED; grid.len()];
        for (k, &id) in nodes.iter().enumerate() {
            unknown_of[id] = k;
        }
        let mut neighbors = Vec::with_capacity(nodes.len() * 2 * n);
        for &id in &nodes {
            neighbors.extend(grid.neighbors(id).map(|nb| nb.expect("interior stencil is complete")));
        }
        let weight = nodes
            .iter()
            .map(|&id| grid.multiplicity(id) as f64)
            .collect();
        Self {
            nodes,
            unknown_of,
            neighbors,
            weight,
            n,
            h2: grid.spacing() * grid.spacing(),
        }
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    fn nbrs(&self, k: usize) -> &[usize] {
        &self.neighbors[2 * self.n * k..2 * self.n * (k + 1)]
    }

    /// Discrete Laplacian of the full field at unknown `k`.
    fn laplacian(&self, full: &[f64], k: usize) -> f64 {
        let s: f64 = self.nbrs(k).iter().map(|&nb| full[nb]).sum();
        (s - 2.0 * self.n as f64 * full[self.nodes[k]]) / self.h2
    }

    fn gradient(&self, full: &[f64], k: usize, g: &mut [f64]) {
        let h = self.h2.sqrt();
        let nb = self.nbrs(k);
        for (a, ga) in g.iter_mut().enumerate() {
            *ga = (full[nb[2 * a + 1]] - full[nb[2 * a]]) / (2.0 * h);
        }
    }
}

/// One nonlinear discretization: residual, linearization and a scale for
/// the rounding floor of the residual.
trait Discrete: Sync {
    fn residual(&self, s: &Stencil, full: &[f64], out: &mut [f64]);
    fn linear_solve(&self, s: &Stencil, full: &[f64], rhs: &[f64], x: &mut [f64], rtol: f64) -> Result<usize>;
    fn scale(&self, s: &Stencil, full: &[f64]) -> f64;
}

struct BlowUpForm;

impl BlowUpForm {
    fn power(n: usize) -> f64 {
        (n as f64 + 2.0) / (n as f64 - 2.0)
    }
}

impl Discrete for BlowUpForm {
    fn residual(&self, s: &Stencil, full: &[f64], out: &mut [f64]) {
        let n = s.n as f64;
        let p = Self::power(s.n);
        out.par_iter_mut().enumerate().for_each(|(k, o)| {
            let u = full[s.nodes[k]].max(1e-300);
            *o = -s.laplacian(full, k) + n * (n - 2.0) * u.powf(p);
        });
    }

    fn linear_solve(&self, s: &Stencil, full: &[f64], rhs: &[f64], x: &mut [f64], rtol: f64) -> Result<usize> {
        let n = s.n as f64;
        let q = 4.0 / (n - 2.0);
        let react: Vec<f64> = (0..s.len())
            .map(|k| n * (n + 2.0) * full[s.nodes[k]].max(1e-300).powf(q))
            .collect();
        let diag: Vec<f64> = (0..s.len())
            .map(|k| s.weight[k] * (2.0 * n / s.h2 + react[k]))
            .collect();
        let apply = |y: &[f64], out: &mut [f64]| {
            out.par_iter_mut().enumerate().for_each(|(k, o)| {
                let mut acc = (2.0 * n / s.h2 + react[k]) * y[k];
                for &nb in s.nbrs(k) {
                    let j = s.unknown_of[nb];
                    if j != FIXED {
                        acc -= y[j] / s.h2;
                    }
                }
                *o = s.weight[k] * acc;
            });
        };
        let b: Vec<f64> = rhs.iter().zip(&s.weight).map(|(r, w)| r * w).collect();
        let stats = pcg(apply, &diag, &b, x, rtol, 20 * s.len() + 100)?;
        Ok(stats.iterations)
    }

    fn scale(&self, s: &Stencil, full: &[f64]) -> f64 {
        let n = s.n as f64;
        let p = Self::power(s.n);
        s.nodes
            .iter()
            .map(|&id| 2.0 * n * full[id] / s.h2 + n * (n - 2.0) * full[id].powf(p))
            .fold(0.0, f64::max)
    }
}

struct RadiusForm;

impl Discrete for RadiusForm {
    fn residual(&self, s: &Stencil, full: &[f64], out: &mut [f64]) {
        let n = s.n as f64;
        out.par_iter_mut().enumerate().for_each_init(
            || vec![0.0; s.n],
            |g, (k, o)| {
                s.gradient(full, k, g);
                let g2: f64 = g.iter().map(|x| x * x).sum();
                *o = full[s.nodes[k]] * s.laplacian(full, k) - 0.5 * n * (g2 - 4.0);
            },
        );
    }

    fn linear_solve(&self, s: &Stencil, full: &[f64], rhs: &[f64], x: &mut [f64], rtol: f64) -> Result<usize> {
        let n = s.n as f64;
        let h = s.h2.sqrt();
        // Row k: diag, then (minus, plus) coefficients per axis.
        let width = 1 + 2 * s.n;
        let mut coef = vec![0.0; s.len() * width];
        coef.par_chunks_mut(width).enumerate().for_each_init(
            || vec![0.0; s.n],
            |g, (k, row)| {
                s.gradient(full, k, g);
                let v = full[s.nodes[k]];
                row[0] = s.laplacian(full, k) - 2.0 * n * v / s.h2;
                for a in 0..s.n {
                    row[1 + 2 * a] = v / s.h2 + n * g[a] / (2.0 * h);
                    row[2 + 2 * a] = v / s.h2 - n * g[a] / (2.0 * h);
                }
            },
        );
        let diag: Vec<f64> = coef.chunks(width).map(|r| r[0]).collect();
        let apply = |y: &[f64], out: &mut [f64]| {
            out.par_iter_mut().enumerate().for_each(|(k, o)| {
                let row = &coef[k * width..(k + 1) * width];
                let mut acc = row[0] * y[k];
                for (slot, &nb) in s.nbrs(k).iter().enumerate() {
                    let j = s.unknown_of[nb];
                    if j != FIXED {
                        acc += row[1 + slot] * y[j];
                    }
                }
                *o = acc;
            });
        };
        let limit = 20 * s.len() + 100;
        match bicgstab(&apply, &diag, rhs, x, rtol, limit) {
            Ok(stats) => Ok(stats.iterations),
            Err(_) => {
                x.iter_mut().for_each(|v| *v = 0.0);
                Ok(gmres(&apply, &diag, rhs, x, rtol, 60, limit)?.iterations)
            }
        }
    }

    fn scale(&self, s: &Stencil, full: &[f64]) -> f64 {
        let n = s.n as f64;
        let mut g = vec![0.0; s.n];
        (0..s.len())
            .map(|k| {
                s.gradient(full, k, &mut g);
                let g2: f64 = g.iter().map(|x| x * x).sum();
                let v = full[s.nodes[k]];
                2.0 * n * v * v / s.h2 + 0.5 * n * (g2 + 4.0)
            })
            .fold(0.0, f64::max)
    }
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

/// Damped Newton on the interior unknowns of `full`; layer values stay fixed.
fn newton<F: Discrete>(form: &F, s: &Stencil, full: &mut [f64], cfg: &SolverConfig) -> Result<SolveStats> {
    let mut f = vec![0.0; s.len()];
    form.residual(s, full, &mut f);
    let mut fnorm = max_abs(&f);
    let mut stats = SolveStats {
        residual_history: vec![fnorm],
        ..SolveStats::default()
    };
    loop {
        let floor = 1e3 * f64::EPSILON * form.scale(s, full);
        if fnorm <= cfg.tolerance.max(floor) {
            stats.residual = fnorm;
            return Ok(stats);
        }
        if stats.newton_iterations >= cfg.max_iterations {
            return Err(Error::NewtonFailed {
                iterations: stats.newton_iterations,
                reason: "iteration limit reached".into(),
                history: stats.residual_history,
            });
        }
        stats.newton_iterations += 1;
        let rhs: Vec<f64> = f.iter().map(|x| -x).collect();
        let mut step = vec![0.0; s.len()];
        stats.linear_iterations += form.linear_solve(s, full, &rhs, &mut step, cfg.linear_tolerance)?;

        let mut t = 1.0;
        let mut accepted = false;
        let mut trial = full.to_vec();
        let mut ft = vec![0.0; s.len()];
        for _ in 0..=cfg.max_halvings {
            let mut positive = true;
            for (k, &id) in s.nodes.iter().enumerate() {
                trial[id] = full[id] + t * step[k];
                positive &= trial[id] > 0.0;
            }
            if positive {
                form.residual(s, &trial, &mut ft);
                let ftn = max_abs(&ft);
                if ftn < fnorm {
                    full.copy_from_slice(&trial);
                    std::mem::swap(&mut f, &mut ft);
                    fnorm = ftn;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        stats.residual_history.push(fnorm);
        if !accepted {
            return Err(Error::NewtonFailed {
                iterations: stats.newton_iterations,
                reason: "damping exhausted without decreasing the residual or keeping positivity".into(),
                history: stats.residual_history,
            });
        }
    }
}

/// Asymptotic hyperbolic radius on the layer and its extension inward,
/// frozen at depth `r0/2`.
fn asymptotic_fields(grid: &MaskedGrid, order: DataOrder) -> Result<(Vec<f64>, Vec<f64>)> {
    let cap = 0.5 * grid.domain().r0();
    let mut layer = vec![f64::NAN; grid.len()];
    let mut guess = vec![f64::NAN; grid.len()];
    for &id in grid.layer_nodes() {
        let dd = grid.distance_data(id).expect("layer nodes carry distance data");
        layer[id] = asymptotic_v(dd, order)?;
        guess[id] = layer[id];
    }
    for &id in grid.interior_nodes() {
        let dd = grid.distance_data(id).expect("interior nodes carry distance data");
        let d = dd.d.min(cap);
        guess[id] = 2.0 * d - d * d * dd.mean_curvature;
        if guess[id] <= 0.0 {
            return Err(Error::NonPositiveData { d, v0: guess[id] });
        }
    }
    Ok((layer, guess))
}

/// Solves the Dirichlet problem on `{d > h_trunc}` with asymptotic layer data.
pub fn solve_truncated(grid: &Arc<MaskedGrid>, cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate(grid)?;
    let n = grid.dim();
    let stencil = Stencil::new(grid);
    let (layer_v, guess_v) = asymptotic_fields(grid, cfg.data_order)?;

    match (cfg.mode, cfg.unknown) {
        (SolverMode::Newton, Unknown::HyperbolicRadius) => {
            let mut full = guess_v;
            let stats = newton(&RadiusForm, &stencil, &mut full, cfg)?;
            let v = ScalarField::new(grid.clone(), Quantity::V, full)?;
            let u = super::field::blow_up_solution(&v)?;
            Ok(Solution {
                u,
                v,
                stats,
                ladder: Vec::new(),
            })
        }
        (SolverMode::Newton, Unknown::BlowUp) => {
            let mut full: Vec<f64> = guess_v.iter().map(|&v| if v.is_nan() { v } else { v_to_u(v, n) }).collect();
            let stats = newton(&BlowUpForm, &stencil, &mut full, cfg)?;
            let u = ScalarField::new(grid.clone(), Quantity::U, full)?;
            let v = hyperbolic_radius(&u)?;
            Ok(Solution {
                u,
                v,
                stats,
                ladder: Vec::new(),
            })
        }
        (SolverMode::MonotoneSequence, _) => {
            let layer_u: Vec<f64> = layer_v.iter().map(|&v| v_to_u(v, n)).collect();
            let guess_u: Vec<f64> = guess_v.iter().map(|&v| v_to_u(v, n)).collect();
            let mut full = guess_u.clone();
            let mut stats = SolveStats::default();
            let mut ladder: Vec<ScalarField> = Vec::new();
            let targets = cfg.m_ladder.iter().map(|&m| Some(m)).chain(std::iter::once(None));
            for m in targets {
                for &id in grid.layer_nodes() {
                    full[id] = m.map_or(layer_u[id], |m| m.min(layer_u[id]));
                }
                if ladder.is_empty() {
                    for &id in grid.interior_nodes() {
                        full[id] = m.map_or(guess_u[id], |m| m.min(guess_u[id]));
                    }
                }
                let step = newton(&BlowUpForm, &stencil, &mut full, cfg)?;
                stats.newton_iterations += step.newton_iterations;
                stats.linear_iterations += step.linear_iterations;
                stats.residual = step.residual;
                stats.residual_history.extend(step.residual_history);
                let field = ScalarField::new(grid.clone(), Quantity::U, full.clone())?;
                if let Some(prev) = ladder.last() {
                    let bad = monotone_violations(prev, &field, cfg.tolerance);
                    if bad > 0 {
                        return Err(Error::InvariantViolation(format!(
                            "monotone sequence decreased at {bad} node(s) for m = {m:?}"
                        )));
                    }
                }
                ladder.push(field);
            }
            let u = ladder.pop().expect("ladder has the final solve");
            let v = hyperbolic_radius(&u)?;
            Ok(Solution { u, v, stats, ladder })
        }
    }
}

/// Number of defined nodes where `lower` exceeds `upper` by more than `tol`
/// relative to the local value.
pub fn monotone_violations(lower: &ScalarField, upper: &ScalarField, tol: f64) -> usize {
    lower
        .iter_defined()
        .filter(|&(id, a)| a > upper.value(id) + tol * a.abs().max(1.0))
        .count()
}
