use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::mesh::{MaskedGrid, NodeClass};
use crate::error::{Error, Result};
use crate::geometry::DistanceData;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    U,
    V,
    W,
    Residual,
}

impl Quantity {
    pub fn tag(self) -> &'static str {
        match self {
            Quantity::U => "u",
            Quantity::V => "v",
            Quantity::W => "w",
            Quantity::Residual => "residual",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataOrder {
    /// `u = (2d)^{1-n/2}`.
    OneTerm,
    /// `u = (2d - d^2 H)^{1-n/2}`.
    #[default]
    TwoTerm,
}

/// Boundary-layer value of the hyperbolic radius from the expansion
/// `v = 2d - d^2 H + o(d^2)`.
pub fn asymptotic_v(dd: &DistanceData, order: DataOrder) -> Result<f64> {
    if dd.d <= 0.0 {
        return Err(Error::OutOfDomain {
            what: "d",
            value: dd.d,
            reason: "asymptotic data need d > 0".into(),
        });
    }
    let v = match order {
        DataOrder::OneTerm => 2.0 * dd.d,
        DataOrder::TwoTerm => 2.0 * dd.d - dd.d * dd.d * dd.mean_curvature,
    };
    if v <= 0.0 {
        return Err(Error::NonPositiveData { d: dd.d, v0: v });
    }
    Ok(v)
}

/// Dirichlet value for `u` on the truncation layer.
pub fn asymptotic_dirichlet_data(dd: &DistanceData, n: usize, order: DataOrder) -> Result<f64> {
    Ok(v_to_u(asymptotic_v(dd, order)?, n))
}

pub fn v_to_u(v: f64, n: usize) -> f64 {
    v.powf(-(n as f64 - 2.0) / 2.0)
}

pub fn u_to_v(u: f64, n: usize) -> f64 {
    u.powf(-2.0 / (n as f64 - 2.0))
}

/// Values on the non-exterior nodes of a masked grid (NaN elsewhere).
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Arc<MaskedGrid>,
    quantity: Quantity,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<MaskedGrid>, quantity: Quantity, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, quantity, values })
    }

    /// Samples `f(x, distance data)` on every non-exterior node.
    pub fn from_fn<F>(grid: Arc<MaskedGrid>, quantity: Quantity, f: F) -> Self
    where
        F: Fn(&[f64], &DistanceData) -> f64,
    {
        let values = (0..grid.len())
            .map(|id| match grid.distance_data(id) {
                Some(dd) => f(&grid.position(id), dd),
                None => f64::NAN,
            })
            .collect();
        Self { grid, quantity, values }
    }

    pub fn grid(&self) -> &Arc<MaskedGrid> {
        &self.grid
    }

    pub fn quantity(&self) -> Quantity {
        self.quantity
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn value(&self, id: usize) -> f64 {
        self.values[id]
    }

    /// Non-exterior node ids with their values.
    pub fn iter_defined(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.grid.len())
            .filter(|&id| self.grid.class(id) != NodeClass::Exterior)
            .map(|id| (id, self.values[id]))
    }

    /// Central-difference gradient; `None` if a stencil neighbor is undefined.
    pub fn central_gradient(&self, id: usize) -> Option<Vec<f64>> {
        let h = self.grid.spacing();
        (0..self.grid.dim())
            .map(|a| {
                let lo = self.grid.neighbor(id, a, -1)?;
                let hi = self.grid.neighbor(id, a, 1)?;
                let (vl, vh) = (self.values[lo], self.values[hi]);
                if !(vl.is_finite() && vh.is_finite()) {
                    return None;
                }
                Some((vh - vl) / (2.0 * h))
            })
            .collect()
    }

    /// Full-grid values in row-major order, unfolding a mirrored grid.
    pub fn unfolded(&self) -> Vec<f64> {
        let dims = self.grid.full_dims();
        let n = dims.len();
        let total: usize = dims.iter().product();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; n];
        for _ in 0..total {
            let lattice: Vec<i64> = idx
                .iter()
                .zip(&dims)
                .map(|(&j, &m)| j as i64 - (m as i64 - 1) / 2)
                .collect();
            out.push(self.grid.node_at(&lattice).map_or(f64::NAN, |id| self.values[id]));
            for a in (0..n).rev() {
                idx[a] += 1;
                if idx[a] < dims[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        out
    }
}

/// `v = u^{-2/(n-2)}` on every defined node.
pub fn hyperbolic_radius(u: &ScalarField) -> Result<ScalarField> {
    if u.quantity != Quantity::U {
        return Err(Error::InvalidArgument("hyperbolic_radius expects a u-field".into()));
    }
    let n = u.grid.dim();
    let mut values = vec![f64::NAN; u.values.len()];
    for (id, val) in u.iter_defined() {
        if !(val > 0.0) {
            return Err(Error::OutOfDomain {
                what: "u",
                value: val,
                reason: format!("u must be positive (node {id})"),
            });
        }
        values[id] = u_to_v(val, n);
    }
    ScalarField::new(u.grid.clone(), Quantity::V, values)
}

/// Inverse of `hyperbolic_radius`.
pub fn blow_up_solution(v: &ScalarField) -> Result<ScalarField> {
    if v.quantity != Quantity::V {
        return Err(Error::InvalidArgument("blow_up_solution expects a v-field".into()));
    }
    let n = v.grid.dim();
    let mut values = vec![f64::NAN; v.values.len()];
    for (id, val) in v.iter_defined() {
        if !(val > 0.0) {
            return Err(Error::OutOfDomain {
                what: "v",
                value: val,
                reason: format!("v must be positive (node {id})"),
            });
        }
        values[id] = v_to_u(val, n);
    }
    ScalarField::new(v.grid.clone(), Quantity::U, values)
}

/// `w = (v - 2d) / d^2` on every defined node.
pub fn renormalized_w(v: &ScalarField) -> Result<ScalarField> {
    if v.quantity != Quantity::V {
        return Err(Error::InvalidArgument("renormalized_w expects a v-field".into()));
    }
    let mut values = vec![f64::NAN; v.values.len()];
    for (id, val) in v.iter_defined() {
        let d = v.grid.distance_data(id).map_or(0.0, |g| g.d);
        if d <= 0.0 {
            return Err(Error::OutOfDomain {
                what: "d",
                value: d,
                reason: "w needs d > 0".into(),
            });
        }
        values[id] = (val - 2.0 * d) / (d * d);
    }
    ScalarField::new(v.grid.clone(), Quantity::W, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainDescriptor;
    use approx::assert_abs_diff_eq;

    fn dd(d: f64, h: f64) -> DistanceData {
        DistanceData {
            d,
            grad_d: vec![1.0, 0.0, 0.0],
            laplacian_d: 0.0,
            nearest_point: vec![0.0; 3],
            mean_curvature: h,
            principal_curvatures: vec![h; 2],
        }
    }

    #[test]
    fn data_examples() {
        assert_abs_diff_eq!(asymptotic_dirichlet_data(&dd(0.1, 1.0), 3, DataOrder::TwoTerm).unwrap(), 0.19f64.powf(-0.5), epsilon = 1e-14);
        assert_abs_diff_eq!(asymptotic_dirichlet_data(&dd(0.1, 1.0), 3, DataOrder::TwoTerm).unwrap(), 2.294157, epsilon = 1e-6);
        assert_abs_diff_eq!(asymptotic_dirichlet_data(&dd(0.1, 1.0), 3, DataOrder::OneTerm).unwrap(), 2.236068, epsilon = 1e-6);
        for order in [DataOrder::OneTerm, DataOrder::TwoTerm] {
            assert_abs_diff_eq!(asymptotic_dirichlet_data(&dd(0.05, 0.0), 4, order).unwrap(), 10.0, epsilon = 1e-12);
        }
        assert!(matches!(
            asymptotic_dirichlet_data(&dd(0.5, 5.0), 3, DataOrder::TwoTerm),
            Err(Error::NonPositiveData { .. })
        ));
    }

    #[test]
    fn exact_ball_transforms() {
        let dom = DomainDescriptor::ball(vec![0.0; 3], 1.0).unwrap();
        let grid = Arc::new(MaskedGrid::build(&dom, 17, 0.125, true).unwrap());
        let u = ScalarField::from_fn(grid, Quantity::U, |x, _| {
            (1.0 - x.iter().map(|v| v * v).sum::<f64>()).powf(-0.5)
        });
        let v = hyperbolic_radius(&u).unwrap();
        let w = renormalized_w(&v).unwrap();
        for (id, val) in w.iter_defined() {
            let x = u.grid().position(id);
            let r2: f64 = x.iter().map(|v| v * v).sum();
            assert_abs_diff_eq!(v.value(id), 1.0 - r2, epsilon = 1e-12);
            assert_abs_diff_eq!(val, -1.0, epsilon = 1e-9);
        }
        let back = blow_up_solution(&v).unwrap();
        for (id, val) in back.iter_defined() {
            assert_abs_diff_eq!(val, u.value(id), epsilon = 1e-12 * val);
        }
    }

    #[test]
    fn constant_field_in_four_dimensions() {
        let dom = DomainDescriptor::ball(vec![0.0; 4], 1.0).unwrap();
        let grid = Arc::new(MaskedGrid::build(&dom, 17, 0.125, true).unwrap());
        let u = ScalarField::from_fn(grid, Quantity::U, |_, _| 3.0);
        let v = hyperbolic_radius(&u).unwrap();
        assert!(v.iter_defined().all(|(_, x)| (x - 1.0 / 3.0).abs() < 1e-15));
    }
}
