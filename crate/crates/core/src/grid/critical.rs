use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::field::ScalarField;
use super::mesh::NodeClass;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalKind {
    Maximum,
    Minimum,
    Saddle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub position: Vec<f64>,
    pub value: f64,
    pub kind: CriticalKind,
    /// Some Hessian eigenvalue is negligible, as on a ridge sphere.
    pub degenerate: bool,
}

/// Interior nodes whose cell contains a critical point of the local quadratic
/// model of the field, labeled by the Hessian signature.
///
/// A node qualifies when the Newton step `-H^+ g` (pseudo-inverse over the
/// non-degenerate eigendirections) stays within half a spacing per axis.
/// With a mirrored grid only nodes of the stored orthant are reported.
pub fn hyperbolic_critical_points(field: &ScalarField) -> Vec<CriticalPoint> {
    let grid = field.grid();
    let n = grid.dim();
    let h = grid.spacing();
    let mut out = Vec::new();
    'nodes: for &id in grid.interior_nodes() {
        let base = grid.lattice(id);
        let sample = |offsets: &[(usize, i64)]| -> Option<f64> {
            let mut l = base.clone();
            for &(a, s) in offsets {
                l[a] += s;
            }
            let nb = grid.node_at(&l)?;
            if grid.class(nb) == NodeClass::Exterior {
                return None;
            }
            Some(field.value(nb))
        };
        let v0 = field.value(id);
        let mut g = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        for a in 0..n {
            let (Some(vm), Some(vp)) = (sample(&[(a, -1)]), sample(&[(a, 1)])) else {
                continue 'nodes;
            };
            g[a] = (vp - vm) / (2.0 * h);
            hess[(a, a)] = (vp - 2.0 * v0 + vm) / (h * h);
            for b in 0..a {
                let corners = [
                    sample(&[(a, 1), (b, 1)]),
                    sample(&[(a, 1), (b, -1)]),
                    sample(&[(a, -1), (b, 1)]),
                    sample(&[(a, -1), (b, -1)]),
                ];
                let [Some(pp), Some(pm), Some(mp), Some(mm)] = corners else {
                    continue 'nodes;
                };
                let m = (pp - pm - mp + mm) / (4.0 * h * h);
                hess[(a, b)] = m;
                hess[(b, a)] = m;
            }
        }
        let eig = SymmetricEigen::new(hess);
        let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if lmax == 0.0 {
            continue;
        }
        let cutoff = lmax * h;
        let mut step = DVector::zeros(n);
        let mut degenerate = false;
        let (mut neg, mut pos) = (0, 0);
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam.abs() <= cutoff {
                degenerate = true;
                continue;
            }
            if lam < 0.0 {
                neg += 1;
            } else {
                pos += 1;
            }
            let e = eig.eigenvectors.column(k);
            step -= e * (e.dot(&g) / lam);
        }
        if step.iter().all(|s| s.abs() <= 0.5 * h) {
            let kind = match (neg, pos) {
                (_, 0) => CriticalKind::Maximum,
                (0, _) => CriticalKind::Minimum,
                _ => CriticalKind::Saddle,
            };
            out.push(CriticalPoint {
                position: grid.position(id),
                value: v0,
                kind,
                degenerate,
            });
        }
    }
    out
}
