//! Implicit domains, signed distance and boundary curvature.
//!
//! A domain is the sublevel set `{phi < 0}` of an analytic level-set function.
//! The distance to the boundary is computed by projecting onto `{phi = 0}`
//! with a damped Newton iteration on the Lagrange system
//! `q - x + lambda * grad phi(q) = 0`, `phi(q) = 0`. Curvature data at the
//! projection are read off the level-set Hessian, and the Laplacian of the
//! distance is transported along the normal with
//! `lap d = -sum_i kappa_i / (1 - d kappa_i)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Residual tolerance of the nearest-point projection (length units).
pub const PROJECTION_TOL: f64 = 1e-12;

/// Tolerance on `|phi(q)| / |grad phi(q)|` for a point to count as on the boundary.
pub const BOUNDARY_TOL: f64 = 1e-8;

const GRADIENT_FLOOR: f64 = 1e-12;
const MAX_NEWTON_ITERS: usize = 60;
const GD_SEED_STEPS: usize = 8;

/// Built-in domain shapes. Every shape is mirror-symmetric about each
/// coordinate hyperplane through its center.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Ellipsoid {
        center: Vec<f64>,
        semi_axes: Vec<f64>,
    },
    Shell {
        center: Vec<f64>,
        inner_radius: f64,
        outer_radius: f64,
    },
}

impl Shape {
    pub fn center(&self) -> &[f64] {
        match self {
            Shape::Ball { center, .. }
            | Shape::Ellipsoid { center, .. }
            | Shape::Shell { center, .. } => center,
        }
    }

    pub fn dim(&self) -> usize {
        self.center().len()
    }
}

/// An implicit domain together with its bounding box and uniform sphere radius.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainDescriptor {
    shape: Shape,
    lower: Vec<f64>,
    upper: Vec<f64>,
    r0: f64,
}

/// Distance to the boundary and the curvature data attached to the nearest point.
///
/// `d` is positive in the domain and negative outside.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceData {
    pub d: f64,
    pub grad_d: Vec<f64>,
    pub laplacian_d: f64,
    pub nearest_point: Vec<f64>,
    pub mean_curvature: f64,
    pub principal_curvatures: Vec<f64>,
}

impl DistanceData {
    pub fn is_exterior(&self) -> bool {
        self.d < 0.0
    }
}

impl DomainDescriptor {
    pub fn new(shape: Shape) -> Result<Self> {
        let n = shape.dim();
        if n < 3 {
            return Err(Error::InvalidDomain("n ≥ 3 required".into()));
        }
        let center = shape.center().to_vec();
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidDomain("center must be finite".into()));
        }
        let (half, r0) = match &shape {
            Shape::Ball { radius, .. } => {
                positive("radius", *radius)?;
                (vec![*radius; n], *radius)
            }
            Shape::Ellipsoid { semi_axes, .. } => {
                if semi_axes.len() != n {
                    return Err(Error::InvalidDomain(format!(
                        "semi_axes has {} entries, center has {}",
                        semi_axes.len(),
                        n
                    )));
                }
                for &a in semi_axes {
                    positive("semi axis", a)?;
                }
                let min = semi_axes.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = semi_axes.iter().cloned().fold(0.0, f64::max);
                (semi_axes.clone(), min * min / max)
            }
            Shape::Shell {
                inner_radius,
                outer_radius,
                ..
            } => {
                positive("inner_radius", *inner_radius)?;
                positive("outer_radius", *outer_radius)?;
                if inner_radius >= outer_radius {
                    return Err(Error::InvalidDomain(
                        "inner_radius must be smaller than outer_radius".into(),
                    ));
                }
                let r0 = inner_radius.min(0.5 * (outer_radius - inner_radius));
                (vec![*outer_radius; n], r0)
            }
        };
        let lower = center.iter().zip(&half).map(|(c, h)| c - h).collect();
        let upper = center.iter().zip(&half).map(|(c, h)| c + h).collect();
        Ok(Self {
            shape,
            lower,
            upper,
            r0,
        })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        Self::new(Shape::Ball { center, radius })
    }

    pub fn ellipsoid(center: Vec<f64>, semi_axes: Vec<f64>) -> Result<Self> {
        Self::new(Shape::Ellipsoid { center, semi_axes })
    }

    pub fn shell(center: Vec<f64>, inner_radius: f64, outer_radius: f64) -> Result<Self> {
        Self::new(Shape::Shell {
            center,
            inner_radius,
            outer_radius,
        })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    pub fn center(&self) -> &[f64] {
        self.shape.center()
    }

    /// Uniform interior/exterior sphere radius.
    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn bounding_box(&self) -> (&[f64], &[f64]) {
        (&self.lower, &self.upper)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.phi(x) < 0.0
    }

    pub fn phi(&self, x: &[f64]) -> f64 {
        let c = self.center();
        match &self.shape {
            Shape::Ball { radius, .. } => (norm2(x, c) - radius * radius) / (2.0 * radius),
            Shape::Ellipsoid { semi_axes, .. } => {
                let s: f64 = x
                    .iter()
                    .zip(c)
                    .zip(semi_axes)
                    .map(|((xi, ci), a)| (xi - ci) * (xi - ci) / (a * a))
                    .sum();
                0.5 * (s - 1.0)
            }
            Shape::Shell {
                inner_radius,
                outer_radius,
                ..
            } => {
                let s = norm2(x, c);
                (s - inner_radius * inner_radius) * (s - outer_radius * outer_radius)
            }
        }
    }

    pub fn grad_phi(&self, x: &[f64]) -> Vec<f64> {
        let c = self.center();
        match &self.shape {
            Shape::Ball { radius, .. } => x.iter().zip(c).map(|(xi, ci)| (xi - ci) / radius).collect(),
            Shape::Ellipsoid { semi_axes, .. } => x
                .iter()
                .zip(c)
                .zip(semi_axes)
                .map(|((xi, ci), a)| (xi - ci) / (a * a))
                .collect(),
            Shape::Shell {
                inner_radius,
                outer_radius,
                ..
            } => {
                let g = shell_g(norm2(x, c), *inner_radius, *outer_radius);
                x.iter().zip(c).map(|(xi, ci)| 2.0 * g * (xi - ci)).collect()
            }
        }
    }

    pub fn hessian_phi(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let c = self.center();
        match &self.shape {
            Shape::Ball { radius, .. } => DMatrix::identity(n, n) / *radius,
            Shape::Ellipsoid { semi_axes, .. } => {
                DMatrix::from_diagonal(&DVector::from_iterator(n, semi_axes.iter().map(|a| 1.0 / (a * a))))
            }
            Shape::Shell {
                inner_radius,
                outer_radius,
                ..
            } => {
                let g = shell_g(norm2(x, c), *inner_radius, *outer_radius);
                let y: Vec<f64> = x.iter().zip(c).map(|(xi, ci)| xi - ci).collect();
                DMatrix::from_fn(n, n, |i, j| {
                    let diag = if i == j { 2.0 * g } else { 0.0 };
                    diag + 8.0 * y[i] * y[j]
                })
            }
        }
    }

    /// Closed-form signed distance for shapes where one exists (ball, shell).
    pub fn closed_form_distance(&self, x: &[f64]) -> Option<f64> {
        let rho = norm2(x, self.center()).sqrt();
        match &self.shape {
            Shape::Ball { radius, .. } => Some(radius - rho),
            Shape::Shell {
                inner_radius,
                outer_radius,
                ..
            } => Some((rho - inner_radius).min(outer_radius - rho)),
            Shape::Ellipsoid { .. } => None,
        }
    }

    /// Candidate boundary points used to start the projection from `x`.
    fn projection_seeds(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let n = self.dim();
        let c = self.center();
        let y: Vec<f64> = x.iter().zip(c).map(|(xi, ci)| xi - ci).collect();
        let rho = dot(&y, &y).sqrt();
        let dir: Vec<f64> = if rho > 0.0 {
            y.iter().map(|v| v / rho).collect()
        } else {
            let mut e = vec![0.0; n];
            e[0] = 1.0;
            e
        };
        let on_sphere = |r: f64| -> Vec<f64> { c.iter().zip(&dir).map(|(ci, di)| ci + r * di).collect() };
        let mut seeds = Vec::new();
        match &self.shape {
            Shape::Ball { radius, .. } => seeds.push(on_sphere(*radius)),
            Shape::Shell {
                inner_radius,
                outer_radius,
                ..
            } => {
                seeds.push(on_sphere(*inner_radius));
                seeds.push(on_sphere(*outer_radius));
            }
            Shape::Ellipsoid { semi_axes, .. } => {
                let q: f64 = dir.iter().zip(semi_axes).map(|(d, a)| d * d / (a * a)).sum();
                seeds.push(on_sphere(1.0 / q.sqrt()));
                for i in 0..n {
                    let rest: f64 = (0..n)
                        .filter(|&j| j != i)
                        .map(|j| y[j] * y[j] / (semi_axes[j] * semi_axes[j]))
                        .sum();
                    if rest >= 1.0 {
                        continue;
                    }
                    let yi = semi_axes[i] * (1.0 - rest).sqrt();
                    let signs: &[f64] = if y[i] > 0.0 {
                        &[1.0]
                    } else if y[i] < 0.0 {
                        &[-1.0]
                    } else {
                        &[1.0, -1.0]
                    };
                    for s in signs {
                        let mut p = x.to_vec();
                        p[i] = c[i] + s * yi;
                        seeds.push(p);
                    }
                }
            }
        }
        if let Some(p) = self.gradient_seed(x) {
            seeds.push(p);
        }
        seeds
    }

    /// A few normalized gradient steps on `phi^2 / 2` starting at `x`.
    fn gradient_seed(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mut q = x.to_vec();
        for _ in 0..GD_SEED_STEPS {
            let f = self.phi(&q);
            let g = self.grad_phi(&q);
            let gg = dot(&g, &g);
            if gg < GRADIENT_FLOOR * GRADIENT_FLOOR {
                return None;
            }
            for (qi, gi) in q.iter_mut().zip(&g) {
                *qi -= f * gi / gg;
            }
        }
        q.iter().all(|v| v.is_finite()).then_some(q)
    }

    fn lagrange_residual(&self, x: &[f64], q: &[f64], lambda: f64) -> (Vec<f64>, f64) {
        let g = self.grad_phi(q);
        let gnorm = dot(&g, &g).sqrt().max(GRADIENT_FLOOR);
        let mut r: Vec<f64> = q
            .iter()
            .zip(x)
            .zip(&g)
            .map(|((qi, xi), gi)| qi - xi + lambda * gi)
            .collect();
        r.push(self.phi(q));
        let norm = r[..q.len()]
            .iter()
            .map(|v| v.abs())
            .fold(r[q.len()].abs() / gnorm, f64::max);
        (r, norm)
    }

    /// Damped Newton on the Lagrange system from one seed.
    fn project_from(&self, x: &[f64], seed: Vec<f64>) -> (Vec<f64>, f64) {
        let n = self.dim();
        let mut q = seed;
        let g0 = self.grad_phi(&q);
        let gg = dot(&g0, &g0).max(GRADIENT_FLOOR);
        let mut lambda = x
            .iter()
            .zip(&q)
            .zip(&g0)
            .map(|((xi, qi), gi)| (xi - qi) * gi)
            .sum::<f64>()
            / gg;
        let scale = 1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let (mut r, mut rn) = self.lagrange_residual(x, &q, lambda);
        for _ in 0..MAX_NEWTON_ITERS {
            if rn <= PROJECTION_TOL * scale {
                break;
            }
            let g = self.grad_phi(&q);
            let hess = self.hessian_phi(&q);
            let mut jac = DMatrix::zeros(n + 1, n + 1);
            for i in 0..n {
                for j in 0..n {
                    jac[(i, j)] = lambda * hess[(i, j)] + if i == j { 1.0 } else { 0.0 };
                }
                jac[(i, n)] = g[i];
                jac[(n, i)] = g[i];
            }
            let rhs = -DVector::from_vec(r.clone());
            let Some(step) = jac.lu().solve(&rhs) else {
                break;
            };
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let q_new: Vec<f64> = q.iter().zip(step.iter()).map(|(qi, si)| qi + t * si).collect();
                let l_new = lambda + t * step[n];
                let (r_new, rn_new) = self.lagrange_residual(x, &q_new, l_new);
                if rn_new < rn {
                    q = q_new;
                    lambda = l_new;
                    r = r_new;
                    rn = rn_new;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        (q, rn)
    }

    /// Signed distance from `x` to the boundary with curvature data at the
    /// nearest point. Positive inside, negative outside.
    pub fn signed_distance(&self, x: &[f64]) -> Result<DistanceData> {
        let scale = 1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let mut best: Option<(Vec<f64>, f64)> = None;
        let mut last = (x.to_vec(), f64::INFINITY);
        for seed in self.projection_seeds(x) {
            let (q, res) = self.project_from(x, seed);
            if res <= 10.0 * PROJECTION_TOL * scale {
                let dist = norm2(x, &q).sqrt();
                if best.as_ref().is_none_or(|(_, bd)| dist < *bd) {
                    best = Some((q, dist));
                }
            } else if res < last.1 {
                last = (q, res);
            }
        }
        let Some((q, dist)) = best else {
            return Err(Error::ProjectionDiverged {
                last_iterate: last.0,
                residual: last.1,
            });
        };
        let sign = if self.phi(x) < 0.0 { 1.0 } else { -1.0 };
        let d = sign * dist;
        let (normal, kappa) = self.curvatures_at(&q)?;
        let grad_d = normal.iter().map(|v| -v).collect();
        let laplacian_d = -kappa.iter().map(|k| k / (1.0 - d * k)).sum::<f64>();
        let mean_curvature = kappa.iter().sum::<f64>() / kappa.len() as f64;
        Ok(DistanceData {
            d,
            grad_d,
            laplacian_d,
            nearest_point: q,
            mean_curvature,
            principal_curvatures: kappa,
        })
    }

    /// Outward unit normal and principal curvatures (ascending) at a boundary
    /// point, oriented so that the unit sphere has `kappa_i = 1`.
    fn curvatures_at(&self, q: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.dim();
        let g = self.grad_phi(q);
        let gnorm = dot(&g, &g).sqrt();
        if gnorm < 1e-10 {
            return Err(Error::DegenerateGradient(gnorm));
        }
        let normal: Vec<f64> = g.iter().map(|v| v / gnorm).collect();
        let basis = tangent_basis(&normal);
        let hess = self.hessian_phi(q);
        let shape_op = DMatrix::from_fn(n - 1, n - 1, |a, b| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += basis[a][i] * hess[(i, j)] * basis[b][j];
                }
            }
            s / gnorm
        });
        let mut kappa: Vec<f64> = SymmetricEigen::new(shape_op).eigenvalues.iter().cloned().collect();
        kappa.sort_by(|a, b| a.total_cmp(b));
        Ok((normal, kappa))
    }

    /// Mean curvature `H = -lap d / (n - 1)` at a boundary point.
    pub fn boundary_mean_curvature(&self, q: &[f64]) -> Result<f64> {
        let g = self.grad_phi(q);
        let gnorm = dot(&g, &g).sqrt();
        if gnorm < 1e-10 {
            return Err(Error::DegenerateGradient(gnorm));
        }
        let off = self.phi(q).abs() / gnorm;
        if off > BOUNDARY_TOL {
            return Err(Error::NotOnBoundary(off));
        }
        let (_, kappa) = self.curvatures_at(q)?;
        Ok(kappa.iter().sum::<f64>() / kappa.len() as f64)
    }
}

fn positive(what: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidDomain(format!("{what} must be positive, got {v}")))
    }
}

fn shell_g(s: f64, a: f64, b: f64) -> f64 {
    2.0 * s - a * a - b * b
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Orthonormal basis of the hyperplane orthogonal to the unit vector `normal`.
fn tangent_basis(normal: &[f64]) -> Vec<Vec<f64>> {
    let n = normal.len();
    let mut axes: Vec<usize> = (0..n).collect();
    // drop the coordinate axis most aligned with the normal
    axes.sort_by(|&a, &b| normal[a].abs().total_cmp(&normal[b].abs()));
    axes.pop();
    axes.sort_unstable();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
    for i in axes {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        let p = normal[i];
        for (vj, nj) in v.iter_mut().zip(normal) {
            *vj -= p * nj;
        }
        for b in &basis {
            let p = dot(&v, b);
            for (vj, bj) in v.iter_mut().zip(b) {
                *vj -= p * bj;
            }
        }
        let len = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= len);
        basis.push(v);
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_ball() -> DomainDescriptor {
        DomainDescriptor::ball(vec![0.0; 3], 1.0).unwrap()
    }

    #[test]
    fn ball_point_on_axis() {
        let dd = unit_ball().signed_distance(&[0.5, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(dd.d, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(dd.nearest_point[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dd.mean_curvature, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dd.grad_d[0], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn ball_laplacian_follows_kappa_sum() {
        let dom = unit_ball();
        for t in [0.01, 0.1, 0.3, 0.7] {
            let dd = dom.signed_distance(&[0.0, 1.0 - t, 0.0]).unwrap();
            assert_abs_diff_eq!(dd.laplacian_d, -2.0 / (1.0 - t), epsilon = 1e-10);
        }
    }

    #[test]
    fn shell_curvature_signs() {
        let dom = DomainDescriptor::shell(vec![0.0; 3], 0.5, 1.0).unwrap();
        assert_abs_diff_eq!(dom.boundary_mean_curvature(&[1.0, 0.0, 0.0]).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dom.boundary_mean_curvature(&[0.0, 0.5, 0.0]).unwrap(), -2.0, epsilon = 1e-12);
        // radial formula: lap d = (n - 1) / rho near the inner sphere
        let dd = dom.signed_distance(&[0.0, 0.0, 0.6]).unwrap();
        assert_abs_diff_eq!(dd.laplacian_d, 2.0 / 0.6, epsilon = 1e-10);
        assert_eq!(dom.r0(), 0.25);
    }

    #[test]
    fn ellipsoid_pole_curvature_matches_finite_differences() {
        let dom = DomainDescriptor::ellipsoid(vec![0.0; 3], vec![1.0, 1.0, 0.5]).unwrap();
        let h = dom.boundary_mean_curvature(&[0.0, 0.0, 0.5]).unwrap();
        // independent route: H = div(grad phi / |grad phi|) / (n - 1) via central differences
        let q = [0.0, 0.0, 0.5];
        let eps = 1e-4;
        let unit = |x: &[f64]| {
            let g = dom.grad_phi(x);
            let l = dot(&g, &g).sqrt();
            g.iter().map(|v| v / l).collect::<Vec<_>>()
        };
        let mut div = 0.0;
        for i in 0..3 {
            let mut p = q.to_vec();
            let mut m = q.to_vec();
            p[i] += eps;
            m[i] -= eps;
            div += (unit(&p)[i] - unit(&m)[i]) / (2.0 * eps);
        }
        assert_abs_diff_eq!(h, div / 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(h, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(dom.r0(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn ellipsoid_distance_on_axis() {
        let dom = DomainDescriptor::ellipsoid(vec![0.0; 3], vec![1.0, 1.0, 0.5]).unwrap();
        let dd = dom.signed_distance(&[0.0, 0.0, 0.25]).unwrap();
        assert_abs_diff_eq!(dd.d, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn exterior_points_have_negative_distance() {
        let dd = unit_ball().signed_distance(&[0.0, 0.0, 1.5]).unwrap();
        assert!(dd.is_exterior());
        assert_abs_diff_eq!(dd.d, -0.5, epsilon = 1e-12);
    }

    #[test]
    fn rejects_low_dimension() {
        let err = DomainDescriptor::ball(vec![0.0; 2], 1.0).unwrap_err();
        assert!(err.to_string().contains("n ≥ 3 required"));
    }

    #[test]
    fn off_boundary_point_is_rejected() {
        assert!(matches!(
            unit_ball().boundary_mean_curvature(&[0.5, 0.0, 0.0]),
            Err(Error::NotOnBoundary(_))
        ));
    }
}
