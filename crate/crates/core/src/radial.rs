//! Radial solutions on balls and shells.
//!
//! The sphere barriers are closed-form solutions of
//! `-lap u + n(n-2) u^{(n+2)/(n-2)} = 0`. The general radial problem is solved
//! for the hyperbolic radius `v = u^{-2/(n-2)}`, which satisfies
//! `v (v'' + (n-1)/r v') = (n/2)(v'^2 - 4)` and stays smooth up to the
//! blow-up boundary, with second-order central differences and damped Newton.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::solve_tridiagonal;

/// Truncation offset for infinite boundary data, in grid spacings.
pub const TRUNCATION_CELLS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialGeometry {
    Ball { radius: f64 },
    Shell { inner_radius: f64, outer_radius: f64 },
}

/// Boundary value `m` of the approximating sequence; `Infinite` is the maximal solution.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum BoundaryValue {
    Finite(f64),
    Infinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    MaximalInBall,
    ExteriorBarrier,
    ShellMaximal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for RadialOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 100,
        }
    }
}

fn exponent(n: usize) -> f64 {
    1.0 - n as f64 / 2.0
}

fn check_dim(n: usize) -> Result<()> {
    if n < 3 {
        Err(Error::InvalidArgument("n ≥ 3 required".into()))
    } else {
        Ok(())
    }
}

/// `u_i = (r0 - |x - C|^2 / r0)^{1 - n/2}`, the maximal solution in `B_{r0}(C)`.
pub fn interior_sphere_barrier(n: usize, r0: f64, dist_from_center: f64) -> Result<f64> {
    check_dim(n)?;
    if !(0.0..r0).contains(&dist_from_center) {
        return Err(Error::OutOfDomain {
            what: "dist_from_center",
            value: dist_from_center,
            reason: format!("interior barrier requires 0 <= dist < r0 = {r0}"),
        });
    }
    Ok((r0 - dist_from_center * dist_from_center / r0).powf(exponent(n)))
}

/// `u_e = (|x - C'|^2 / r0 - r0)^{1 - n/2}`, a solution outside `B_{r0}(C')`.
pub fn exterior_sphere_barrier(n: usize, r0: f64, dist_from_center: f64) -> Result<f64> {
    check_dim(n)?;
    if dist_from_center.is_nan() || dist_from_center <= r0 {
        return Err(Error::OutOfDomain {
            what: "dist_from_center",
            value: dist_from_center,
            reason: format!("exterior barrier requires dist > r0 = {r0}"),
        });
    }
    Ok((dist_from_center * dist_from_center / r0 - r0).powf(exponent(n)))
}

/// Two-sided bound from the tangent spheres at distance `d <= r0` from the
/// boundary: `((2d + d^2/r0)^{1-n/2}, (2d - d^2/r0)^{1-n/2})`.
pub fn sandwich_bounds(n: usize, r0: f64, d: f64) -> (f64, f64) {
    let e = exponent(n);
    ((2.0 * d + d * d / r0).powf(e), (2.0 * d - d * d / r0).powf(e))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    pub n: usize,
    pub kind: ProfileKind,
    pub geometry: RadialGeometry,
    pub boundary_value: BoundaryValue,
    /// Index of `r[0]` on the underlying uniform grid.
    pub start: usize,
    pub spacing: f64,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Max-norm residual of the discrete radial equation at the unknown nodes.
    pub residual: f64,
    pub newton_iterations: usize,
}

impl RadialGeometry {
    fn validate(&self) -> Result<()> {
        match *self {
            RadialGeometry::Ball { radius } if radius > 0.0 => Ok(()),
            RadialGeometry::Shell {
                inner_radius,
                outer_radius,
            } if inner_radius > 0.0 && inner_radius < outer_radius => Ok(()),
            _ => Err(Error::InvalidArgument(format!("invalid radial geometry {self:?}"))),
        }
    }

    /// Distance from radius `r` to the boundary spheres.
    pub fn distance(&self, r: f64) -> f64 {
        match *self {
            RadialGeometry::Ball { radius } => radius - r,
            RadialGeometry::Shell {
                inner_radius,
                outer_radius,
            } => (r - inner_radius).min(outer_radius - r),
        }
    }

    /// Mean curvature of the nearest boundary sphere, oriented by the inward normal.
    pub fn nearest_mean_curvature(&self, r: f64) -> f64 {
        match *self {
            RadialGeometry::Ball { radius } => 1.0 / radius,
            RadialGeometry::Shell {
                inner_radius,
                outer_radius,
            } => {
                if r - inner_radius < outer_radius - r {
                    -1.0 / inner_radius
                } else {
                    1.0 / outer_radius
                }
            }
        }
    }

    /// Uniform sphere radius of the domain.
    pub fn r0(&self) -> f64 {
        match *self {
            RadialGeometry::Ball { radius } => radius,
            RadialGeometry::Shell {
                inner_radius,
                outer_radius,
            } => inner_radius.min(0.5 * (outer_radius - inner_radius)),
        }
    }
}

impl RadialProfile {
    pub fn distance(&self) -> Vec<f64> {
        self.r.iter().map(|&r| self.geometry.distance(r)).collect()
    }

    /// `w = (v - 2d) / d^2`; NaN where `d = 0`.
    pub fn w(&self) -> Vec<f64> {
        self.r
            .iter()
            .zip(&self.v)
            .map(|(&r, &v)| {
                let d = self.geometry.distance(r);
                if d > 0.0 {
                    (v - 2.0 * d) / (d * d)
                } else {
                    f64::NAN
                }
            })
            .collect()
    }

    /// Linear interpolation of `v` at radius `r`, returned as `u`.
    pub fn interpolate_u(&self, r: f64) -> Option<f64> {
        let first = *self.r.first()?;
        let last = *self.r.last()?;
        if r < first - 1e-14 || r > last + 1e-14 {
            return None;
        }
        let t = ((r - first) / self.spacing).clamp(0.0, (self.r.len() - 1) as f64);
        let i = (t.floor() as usize).min(self.r.len().saturating_sub(2));
        let s = t - i as f64;
        let v = self.v[i] * (1.0 - s) + self.v[(i + 1).min(self.v.len() - 1)] * s;
        Some(v.powf(-(self.n as f64 - 2.0) / 2.0))
    }

    /// Full-grid index range covered by this profile.
    pub fn index_range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.r.len()
    }

    /// Residual of the discrete radial operator at every interior node of the profile.
    pub fn discrete_residual(&self) -> Vec<f64> {
        let pde = RadialOperator {
            n: self.n,
            dr: self.spacing,
        };
        (1..self.r.len().saturating_sub(1))
            .map(|k| pde.residual(self.r[k], self.v[k - 1], self.v[k], self.v[k + 1]))
            .collect()
    }

    /// Samples the exterior sphere barrier on `(r0, r_max]`.
    pub fn exterior_barrier(n: usize, r0: f64, r_max: f64, points: usize) -> Result<Self> {
        check_dim(n)?;
        if points < 2 || r_max <= r0 {
            return Err(Error::InvalidArgument("need r_max > r0 and at least 2 points".into()));
        }
        let spacing = (r_max - r0) / points as f64;
        let r: Vec<f64> = (1..=points).map(|k| r0 + k as f64 * spacing).collect();
        let u = r
            .iter()
            .map(|&x| exterior_sphere_barrier(n, r0, x))
            .collect::<Result<Vec<_>>>()?;
        let v = u.iter().map(|u| u.powf(-2.0 / (n as f64 - 2.0))).collect();
        Ok(Self {
            n,
            kind: ProfileKind::ExteriorBarrier,
            geometry: RadialGeometry::Ball { radius: r0 },
            boundary_value: BoundaryValue::Infinite,
            start: 1,
            spacing,
            r,
            u,
            v,
            residual: 0.0,
            newton_iterations: 0,
        })
    }
}

struct RadialOperator {
    n: usize,
    dr: f64,
}

impl RadialOperator {
    /// `v (v'' + (n-1)/r v') - (n/2)(v'^2 - 4)` at one node; the symmetric
    /// stencil `v'(0) = 0` is used at `r = 0`.
    fn residual(&self, r: f64, vm: f64, v: f64, vp: f64) -> f64 {
        let n = self.n as f64;
        let h2 = self.dr * self.dr;
        if r == 0.0 {
            v * 2.0 * n * (vp - v) / h2 + 2.0 * n
        } else {
            let g = (vp - vm) / (2.0 * self.dr);
            let lap = (vp - 2.0 * v + vm) / h2 + (n - 1.0) / r * g;
            v * lap - 0.5 * n * (g * g - 4.0)
        }
    }

    /// Radial Laplacian stencil weights `(w_{k-1}, w_k, w_{k+1})`.
    fn laplacian_weights(&self, r: f64) -> (f64, f64, f64) {
        let n = self.n as f64;
        let h2 = self.dr * self.dr;
        if r == 0.0 {
            (0.0, -2.0 * n / h2, 2.0 * n / h2)
        } else {
            let adv = (n - 1.0) / (2.0 * r * self.dr);
            (1.0 / h2 - adv, -2.0 / h2, 1.0 / h2 + adv)
        }
    }

    /// `-lap u + n(n-2) u^p` with `p = (n+2)/(n-2)`.
    fn u_residual(&self, r: f64, um: f64, u: f64, up: f64) -> f64 {
        let n = self.n as f64;
        let (a, b, c) = self.laplacian_weights(r);
        -(a * um + b * u + c * up) + n * (n - 2.0) * u.powf((n + 2.0) / (n - 2.0))
    }

    fn scaled_u_residual(&self, r: f64, um: f64, u: f64, up: f64) -> f64 {
        let n = self.n as f64;
        self.u_residual(r, um, u, up) / (n * (n - 2.0) * u.powf((n + 2.0) / (n - 2.0)))
    }

    /// Row of the Jacobian: (d/dv_{k-1}, d/dv_k, d/dv_{k+1}).
    fn jacobian(&self, r: f64, vm: f64, v: f64, vp: f64) -> (f64, f64, f64) {
        let n = self.n as f64;
        let h = self.dr;
        let h2 = h * h;
        if r == 0.0 {
            let lap = 2.0 * n * (vp - v) / h2;
            (0.0, lap - v * 2.0 * n / h2, v * 2.0 * n / h2)
        } else {
            let g = (vp - vm) / (2.0 * h);
            let lap = (vp - 2.0 * v + vm) / h2 + (n - 1.0) / r * g;
            let adv = (n - 1.0) / (2.0 * r * h);
            (
                v * (1.0 / h2 - adv) + n * g / (2.0 * h),
                lap - 2.0 * v / h2,
                v * (1.0 / h2 + adv) - n * g / (2.0 * h),
            )
        }
    }
}

/// Smooth starting point: the two-term expansion on a ball, and a harmonic
/// blend of the one-sided expansions on a shell.
fn initial_guess(geometry: &RadialGeometry, r: f64) -> f64 {
    match *geometry {
        RadialGeometry::Ball { radius } => {
            let d = radius - r;
            2.0 * d - d * d / radius
        }
        RadialGeometry::Shell {
            inner_radius,
            outer_radius,
        } => {
            let di = r - inner_radius;
            let do_ = outer_radius - r;
            let vi = 2.0 * di + di * di / inner_radius;
            let vo = (2.0 * do_ - do_ * do_ / outer_radius).max(do_);
            if vi <= 0.0 || vo <= 0.0 {
                0.0
            } else {
                1.0 / (1.0 / vi + 1.0 / vo)
            }
        }
    }
}

/// Solves the radial problem on a ball or shell with boundary value `m`.
///
/// For `m = Infinite` the grid is truncated `TRUNCATION_CELLS` spacings from
/// each blow-up sphere, where `v = 2d - d^2 H` is imposed.
pub fn solve_radial_maximal(
    n: usize,
    geometry: RadialGeometry,
    points: usize,
    m: BoundaryValue,
    opts: RadialOptions,
) -> Result<RadialProfile> {
    check_dim(n)?;
    geometry.validate()?;
    if points < 16 {
        return Err(Error::InvalidArgument(format!("need at least 16 grid points, got {points}")));
    }
    let nf = n as f64;
    let (r_lo, r_hi, kind) = match geometry {
        RadialGeometry::Ball { radius } => (0.0, radius, ProfileKind::MaximalInBall),
        RadialGeometry::Shell {
            inner_radius,
            outer_radius,
        } => (inner_radius, outer_radius, ProfileKind::ShellMaximal),
    };
    let dr = (r_hi - r_lo) / (points - 1) as f64;
    let grid_r = |k: usize| if k == points - 1 { r_hi } else { r_lo + k as f64 * dr };
    let is_shell = matches!(geometry, RadialGeometry::Shell { .. });
    let (first, last) = match (m, is_shell) {
        (BoundaryValue::Finite(_), false) => (0, points - 1),
        (BoundaryValue::Finite(_), true) => (0, points - 1),
        (BoundaryValue::Infinite, false) => (0, points - 1 - TRUNCATION_CELLS),
        (BoundaryValue::Infinite, true) => (TRUNCATION_CELLS, points - 1 - TRUNCATION_CELLS),
    };
    let v_of_m = match m {
        BoundaryValue::Finite(mv) if mv > 0.0 && mv.is_finite() => Some(mv.powf(-2.0 / (nf - 2.0))),
        BoundaryValue::Finite(mv) => {
            return Err(Error::InvalidArgument(format!("boundary value must be positive, got {mv}")))
        }
        BoundaryValue::Infinite => None,
    };
    // For finite m, a u-form solve from the supersolution u = m supplies a
    // starting point inside the v-form Newton basin.
    let warm_start = match m {
        BoundaryValue::Finite(mv) => Some(finite_boundary_start(n, is_shell, dr, points, &grid_r, mv, opts)?),
        BoundaryValue::Infinite => None,
    };
    let expansion = |r: f64| {
        let d = geometry.distance(r);
        2.0 * d - d * d * geometry.nearest_mean_curvature(r)
    };
    let boundary = |r: f64| v_of_m.unwrap_or_else(|| expansion(r));

    let r: Vec<f64> = (first..=last).map(grid_r).collect();
    let len = r.len();
    // Dirichlet at the outer end always; at the inner end only for shells.
    let lo_fixed = is_shell;
    let mut v: Vec<f64> = r
        .iter()
        .enumerate()
        .map(|(k, &x)| match &warm_start {
            Some(start) => start[first + k],
            None => initial_guess(&geometry, x),
        })
        .collect();
    v[len - 1] = boundary(r[len - 1]);
    if lo_fixed {
        v[0] = boundary(r[0]);
    }
    for (k, vk) in v.iter().enumerate() {
        if *vk <= 0.0 {
            return Err(Error::NonPositiveData {
                d: geometry.distance(r[k]),
                v0: *vk,
            });
        }
    }

    let pde = RadialOperator { n, dr };
    let unknowns: Vec<usize> = (if lo_fixed { 1 } else { 0 }..len - 1).collect();
    let residual_of = |v: &[f64]| -> Vec<f64> {
        unknowns
            .iter()
            .map(|&k| {
                let vm = if k == 0 { v[1] } else { v[k - 1] };
                pde.residual(r[k], vm, v[k], v[k + 1])
            })
            .collect()
    };
    let max_abs = |f: &[f64]| f.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    // The Newton step is a descent direction for the smooth l2 merit, not for the max norm.
    let l2 = |f: &[f64]| f.iter().map(|x| x * x).sum::<f64>().sqrt();

    let mut f = residual_of(&v);
    let mut fnorm = max_abs(&f);
    let mut merit = l2(&f);
    let mut history = vec![fnorm];
    let mut iterations = 0;
    while fnorm > opts.tolerance {
        if iterations >= opts.max_iterations {
            return Err(Error::NewtonFailed {
                iterations,
                reason: "iteration limit reached".into(),
                history,
            });
        }
        iterations += 1;
        let nu = unknowns.len();
        let mut lower = vec![0.0; nu];
        let mut diag = vec![0.0; nu];
        let mut upper = vec![0.0; nu];
        for (row, &k) in unknowns.iter().enumerate() {
            let vm = if k == 0 { v[1] } else { v[k - 1] };
            let (a, b, c) = pde.jacobian(r[k], vm, v[k], v[k + 1]);
            lower[row] = a;
            diag[row] = b;
            upper[row] = c;
        }
        let mut step: Vec<f64> = f.iter().map(|x| -x).collect();
        solve_tridiagonal(&lower, &diag, &upper, &mut step)?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let mut trial = v.clone();
            for (row, &k) in unknowns.iter().enumerate() {
                trial[k] += t * step[row];
            }
            if trial.iter().all(|&x| x > 0.0) {
                let ft = residual_of(&trial);
                let mt = l2(&ft);
                if mt < merit {
                    v = trial;
                    fnorm = max_abs(&ft);
                    merit = mt;
                    f = ft;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        history.push(fnorm);
        if !accepted {
            let vmax = max_abs(&v);
            let smax = max_abs(&step);
            if smax <= 1e-13 * vmax && fnorm <= 100.0 * opts.tolerance {
                break;
            }
            return Err(Error::NewtonFailed {
                iterations,
                reason: "line search could not reduce the residual".into(),
                history,
            });
        }
    }

    let u = v.iter().map(|&x| x.powf(-(nf - 2.0) / 2.0)).collect();
    Ok(RadialProfile {
        n,
        kind,
        geometry,
        boundary_value: m,
        start: first,
        spacing: dr,
        r,
        u,
        v,
        residual: fnorm,
        newton_iterations: iterations,
    })
}

/// Finite boundary value `m`: Newton on the `u`-form from the supersolution
/// `u = m`, returned as `v`. The operator is convex and monotone in `u`, so the
/// iterates decrease toward the solution without a line search.
fn finite_boundary_start(
    n: usize,
    lo_fixed: bool,
    dr: f64,
    points: usize,
    grid_r: &impl Fn(usize) -> f64,
    m: f64,
    opts: RadialOptions,
) -> Result<Vec<f64>> {
    let nf = n as f64;
    let p = (nf + 2.0) / (nf - 2.0);
    let r: Vec<f64> = (0..points).map(grid_r).collect();
    let pde = RadialOperator { n, dr };
    let mut u = vec![m; points];
    let unknowns: Vec<usize> = (if lo_fixed { 1 } else { 0 }..points - 1).collect();
    let neighbors = |u: &[f64], k: usize| (if k == 0 { u[1] } else { u[k - 1] }, u[k], u[k + 1]);
    let scaled = |u: &[f64]| -> f64 {
        unknowns
            .iter()
            .map(|&k| {
                let (a, b, c) = neighbors(u, k);
                pde.scaled_u_residual(r[k], a, b, c).abs()
            })
            .fold(0.0, f64::max)
    };
    let mut fnorm = scaled(&u);
    let mut history = vec![fnorm];
    let mut iterations = 0;
    while fnorm > opts.tolerance.max(1e-10) {
        if iterations >= opts.max_iterations {
            return Err(Error::NewtonFailed {
                iterations,
                reason: "u-form start: iteration limit reached".into(),
                history,
            });
        }
        iterations += 1;
        let nu = unknowns.len();
        let (mut lower, mut diag, mut upper, mut step) = (vec![0.0; nu], vec![0.0; nu], vec![0.0; nu], vec![0.0; nu]);
        for (row, &k) in unknowns.iter().enumerate() {
            let (um, uk, up) = neighbors(&u, k);
            let (a, b, c) = pde.laplacian_weights(r[k]);
            if k == 0 {
                // Symmetric stencil: the ghost value equals u[1].
                upper[row] = -(a + c);
            } else {
                lower[row] = -a;
                upper[row] = -c;
            }
            diag[row] = -b + nf * (nf - 2.0) * p * uk.powf(p - 1.0);
            step[row] = -pde.u_residual(r[k], um, uk, up);
        }
        solve_tridiagonal(&lower, &diag, &upper, &mut step)?;
        let mut t = 1.0;
        loop {
            let mut trial = u.clone();
            for (row, &k) in unknowns.iter().enumerate() {
                trial[k] += t * step[row];
            }
            if trial.iter().all(|&x| x > 0.0) {
                u = trial;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::NewtonFailed {
                    iterations,
                    reason: "u-form start: step leaves u > 0".into(),
                    history,
                });
            }
        }
        fnorm = scaled(&u);
        history.push(fnorm);
    }
    Ok(u.iter().map(|&x| x.powf(-2.0 / (nf - 2.0))).collect())
}

/// Number of common nodes where `lower.u > upper.u + tol`.
pub fn monotonicity_violations(lower: &RadialProfile, upper: &RadialProfile, tol: f64) -> usize {
    let a = lower.index_range();
    let b = upper.index_range();
    (a.start.max(b.start)..a.end.min(b.end))
        .filter(|&k| lower.u[k - a.start] > upper.u[k - b.start] + tol)
        .count()
}

/// Solves an increasing ladder of boundary values and checks that the
/// profiles increase pointwise.
pub fn solve_radial_ladder(
    n: usize,
    geometry: RadialGeometry,
    points: usize,
    ladder: &[BoundaryValue],
    opts: RadialOptions,
) -> Result<Vec<RadialProfile>> {
    if ladder.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("m-ladder must be strictly increasing".into()));
    }
    let profiles = ladder
        .iter()
        .map(|&m| solve_radial_maximal(n, geometry, points, m, opts))
        .collect::<Result<Vec<_>>>()?;
    for pair in profiles.windows(2) {
        let bad = monotonicity_violations(&pair[0], &pair[1], 1e-10);
        if bad > 0 {
            return Err(Error::InvariantViolation(format!(
                "profile for m = {:?} exceeds the one for m = {:?} at {bad} node(s)",
                pair[0].boundary_value, pair[1].boundary_value
            )));
        }
    }
    Ok(profiles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn barrier_values() {
        assert_abs_diff_eq!(interior_sphere_barrier(3, 1.0, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(interior_sphere_barrier(3, 1.0, 0.5).unwrap(), 0.75f64.powf(-0.5), epsilon = 1e-15);
        assert_abs_diff_eq!(interior_sphere_barrier(3, 1.0, 0.5).unwrap(), 1.154700, epsilon = 1e-6);
        assert_abs_diff_eq!(interior_sphere_barrier(4, 2.0, 0.0).unwrap(), 0.5);
        assert_abs_diff_eq!(exterior_sphere_barrier(3, 1.0, 2f64.sqrt()).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(exterior_sphere_barrier(5, 1.0, 2.0).unwrap(), 3f64.powf(-1.5), epsilon = 1e-15);
        assert_abs_diff_eq!(exterior_sphere_barrier(5, 1.0, 2.0).unwrap(), 0.19245, epsilon = 1e-5);
        assert!(exterior_sphere_barrier(3, 1.0, 1.0 + 1e-12).unwrap() > 1e5);
    }

    #[test]
    fn barrier_domain_errors() {
        assert!(interior_sphere_barrier(3, 1.0, 1.0).is_err());
        assert!(exterior_sphere_barrier(3, 1.0, 1.0).is_err());
        assert!(exterior_sphere_barrier(3, 1.0, 0.5).is_err());
    }

    /// Finite-difference radial Laplacian of the barriers against the nonlinearity.
    #[test]
    fn barriers_solve_the_equation() {
        for n in [3usize, 4, 5, 7] {
            let p = (n as f64 + 2.0) / (n as f64 - 2.0);
            let h = 1e-4;
            let lap = |f: &dyn Fn(f64) -> f64, r: f64| {
                (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h) + (n as f64 - 1.0) / r * (f(r + h) - f(r - h)) / (2.0 * h)
            };
            let ui = |r: f64| interior_sphere_barrier(n, 1.3, r).unwrap();
            let ue = |r: f64| exterior_sphere_barrier(n, 1.3, r).unwrap();
            for r in [0.3, 0.7, 1.0] {
                let res = -lap(&ui, r) + (n * (n - 2)) as f64 * ui(r).powf(p);
                assert!(res.abs() < 1e-5 * ui(r).powf(p), "n={n} r={r} res={res}");
            }
            for r in [1.5, 2.0, 3.0] {
                let res = -lap(&ue, r) + (n * (n - 2)) as f64 * ue(r).powf(p);
                assert!(res.abs() < 1e-4 * ue(r).powf(p).max(1.0), "n={n} r={r} res={res}");
            }
        }
    }

    #[test]
    fn ball_maximal_matches_closed_form() {
        let prof = solve_radial_maximal(
            3,
            RadialGeometry::Ball { radius: 1.0 },
            512,
            BoundaryValue::Infinite,
            RadialOptions::default(),
        )
        .unwrap();
        let err = prof
            .r
            .iter()
            .zip(&prof.u)
            .map(|(&r, &u)| (u - (1.0 - r * r).powf(-0.5)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "max error {err}");
        assert!(prof.discrete_residual().iter().all(|x| x.abs() <= 1e-8));
    }

    #[test]
    fn finite_boundary_value_stays_below_maximal() {
        let prof = solve_radial_maximal(
            3,
            RadialGeometry::Ball { radius: 1.0 },
            512,
            BoundaryValue::Finite(10.0),
            RadialOptions::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(*prof.u.last().unwrap(), 10.0, epsilon = 1e-12);
        for (&r, &u) in prof.r.iter().zip(&prof.u).take(prof.r.len() - 1) {
            assert!(u <= (1.0 - r * r).powf(-0.5));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = RadialGeometry::Ball { radius: 1.0 };
        let o = RadialOptions::default();
        assert!(solve_radial_maximal(3, g, 8, BoundaryValue::Infinite, o).is_err());
        assert!(solve_radial_maximal(2, g, 64, BoundaryValue::Infinite, o).is_err());
        let bad_shell = RadialGeometry::Shell {
            inner_radius: 1.0,
            outer_radius: 0.5,
        };
        assert!(solve_radial_maximal(3, bad_shell, 64, BoundaryValue::Infinite, o).is_err());
        let ladder = [BoundaryValue::Finite(4.0), BoundaryValue::Finite(2.0)];
        assert!(solve_radial_ladder(3, g, 64, &ladder, o).is_err());
    }

    #[test]
    fn shell_profile_has_interior_maximum_of_v() {
        let prof = solve_radial_maximal(
            3,
            RadialGeometry::Shell {
                inner_radius: 0.5,
                outer_radius: 1.0,
            },
            256,
            BoundaryValue::Infinite,
            RadialOptions::default(),
        )
        .unwrap();
        let (imax, _) = prof
            .v
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let rmax = prof.r[imax];
        assert!(rmax > 0.6 && rmax < 0.9, "ridge at {rmax}");
    }
    #[test]
    fn ladder_is_monotone_and_bounded_by_maximal() {
        let ladder = [
            BoundaryValue::Finite(2.0),
            BoundaryValue::Finite(8.0),
            BoundaryValue::Finite(64.0),
            BoundaryValue::Infinite,
        ];
        for g in [
            RadialGeometry::Ball { radius: 1.0 },
            RadialGeometry::Shell {
                inner_radius: 0.5,
                outer_radius: 1.0,
            },
        ] {
            let profiles = solve_radial_ladder(3, g, 257, &ladder, RadialOptions::default()).unwrap();
            assert_eq!(profiles.len(), 4);
        }
    }

    #[test]
    fn larger_ball_gives_smaller_solution() {
        let o = RadialOptions::default();
        let small = solve_radial_maximal(4, RadialGeometry::Ball { radius: 1.0 }, 401, BoundaryValue::Infinite, o).unwrap();
        let big = solve_radial_maximal(4, RadialGeometry::Ball { radius: 2.0 }, 401, BoundaryValue::Infinite, o).unwrap();
        for (&r, &u) in small.r.iter().zip(&small.u) {
            assert!(big.interpolate_u(r).unwrap() < u);
        }
    }

    #[test]
    fn shell_obeys_sphere_sandwich_and_w_bound() {
        let g = RadialGeometry::Shell {
            inner_radius: 0.5,
            outer_radius: 1.0,
        };
        let prof = solve_radial_maximal(3, g, 513, BoundaryValue::Infinite, RadialOptions::default()).unwrap();
        let r0 = g.r0();
        let slack = 1e-6;
        for ((&d, &u), &w) in prof.distance().iter().zip(&prof.u).zip(&prof.w()) {
            if d <= r0 {
                let (lo, hi) = sandwich_bounds(3, r0, d);
                assert!(u >= lo * (1.0 - slack) && u <= hi * (1.0 + slack), "d={d}");
                assert!(w.abs() <= 1.0 / r0 + slack, "d={d} w={w}");
            }
        }
    }
}
