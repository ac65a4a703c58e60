//! The degenerate operator `L = d^2 lap + (4-n) d grad d . grad + (2-2n)` and
//! the quadratic term `M_w` applied to grid fields with central differences.

use crate::error::{Error, Result};
use crate::grid::{hyperbolic_radius, renormalized_w, MaskedGrid, NodeClass, Quantity, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FuchsianContext {
    pub n: usize,
    /// Hölder exponent used by the `d^alpha` diagnostics.
    pub alpha: f64,
    /// Width of the collar `{0 < d < delta}`.
    pub delta: f64,
}

impl FuchsianContext {
    pub fn new(n: usize, alpha: f64, delta: f64, r0: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument("n ≥ 3 required".into()));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if !(delta > 0.0 && delta < r0) {
            return Err(Error::InvalidArgument(format!("delta must lie in (0, r0 = {r0}), got {delta}")));
        }
        Ok(Self { n, alpha, delta })
    }
}

/// Operator output; nodes without a complete finite stencil hold NaN and are listed in `skipped`.
#[derive(Clone, Debug)]
pub struct OperatorField {
    pub field: ScalarField,
    pub skipped: Vec<usize>,
}

impl OperatorField {
    /// Max of `|value|` over evaluated nodes accepted by `keep`.
    pub fn max_abs_where<F: Fn(usize) -> bool>(&self, keep: F) -> f64 {
        self.field
            .iter_defined()
            .filter(|(id, v)| v.is_finite() && keep(*id))
            .fold(0.0, |a, (_, v)| a.max(v.abs()))
    }
}

/// Local differences of a field at one node.
struct Local {
    value: f64,
    gradient: Vec<f64>,
    laplacian: f64,
}

fn local(grid: &MaskedGrid, f: &ScalarField, id: usize) -> Option<Local> {
    if grid.class(id) == NodeClass::Exterior {
        return None;
    }
    let h = grid.spacing();
    let value = f.value(id);
    if !value.is_finite() {
        return None;
    }
    let mut gradient = Vec::with_capacity(grid.dim());
    let mut laplacian = 0.0;
    for a in 0..grid.dim() {
        let lo = grid.neighbor(id, a, -1)?;
        let hi = grid.neighbor(id, a, 1)?;
        if grid.class(lo) == NodeClass::Exterior || grid.class(hi) == NodeClass::Exterior {
            return None;
        }
        let (vl, vh) = (f.value(lo), f.value(hi));
        if !(vl.is_finite() && vh.is_finite()) {
            return None;
        }
        gradient.push((vh - vl) / (2.0 * h));
        laplacian += (vh - 2.0 * value + vl) / (h * h);
    }
    Some(Local {
        value,
        gradient,
        laplacian,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Evaluates `op` on every node where the distance data are smooth (`d > 0`,
/// finite `lap d`) and all inputs have complete stencils.
fn pointwise<F>(fields: &[&ScalarField], op: F) -> Result<OperatorField>
where
    F: Fn(usize, &crate::geometry::DistanceData, &[Local]) -> Result<f64>,
{
    let grid = fields[0].grid().clone();
    let mut values = vec![f64::NAN; grid.len()];
    let mut skipped = Vec::new();
    for id in 0..grid.len() {
        let Some(dd) = grid.distance_data(id) else {
            continue;
        };
        if !(dd.d > 0.0 && dd.laplacian_d.is_finite()) {
            skipped.push(id);
            continue;
        }
        let locals: Option<Vec<Local>> = fields.iter().map(|f| local(&grid, f, id)).collect();
        match locals {
            Some(l) => values[id] = op(id, dd, &l)?,
            None => skipped.push(id),
        }
    }
    Ok(OperatorField {
        field: ScalarField::new(grid, Quantity::Residual, values)?,
        skipped,
    })
}

/// `L w = d^2 lap w + (4-n) d grad d . grad w + (2-2n) w`.
pub fn apply_l(ctx: &FuchsianContext, w: &ScalarField) -> Result<OperatorField> {
    let n = ctx.n as f64;
    pointwise(&[w], |_, dd, l| {
        let w = &l[0];
        Ok(dd.d * dd.d * w.laplacian + (4.0 - n) * dd.d * dot(&dd.grad_d, &w.gradient) + (2.0 - 2.0 * n) * w.value)
    })
}

fn check_denominators(w: &ScalarField) -> Result<()> {
    let grid = w.grid();
    let bad: Vec<usize> = w
        .iter_defined()
        .filter(|&(id, val)| {
            let d = grid.distance_data(id).map_or(0.0, |g| g.d);
            val.is_finite() && d > 0.0 && 2.0 + d * val <= 0.0
        })
        .map(|(id, _)| id)
        .collect();
    if let Some(&first) = bad.first() {
        return Err(Error::SingularDenominator {
            count: bad.len(),
            first: grid.position(first),
        });
    }
    Ok(())
}

/// `M_w(f) = n d^2 / (2(2 + d w)) [2 f grad d . grad w + d grad w . grad f] - 2 d f lap d`.
pub fn apply_mw(ctx: &FuchsianContext, w: &ScalarField, f: &ScalarField) -> Result<OperatorField> {
    check_denominators(w)?;
    let n = ctx.n as f64;
    pointwise(&[w, f], |_, dd, l| {
        let (w, f) = (&l[0], &l[1]);
        let d = dd.d;
        let coef = n * d * d / (2.0 * (2.0 + d * w.value));
        Ok(coef * (2.0 * f.value * dot(&dd.grad_d, &w.gradient) + d * dot(&w.gradient, &f.gradient))
            - 2.0 * d * f.value * dd.laplacian_d)
    })
}

/// `L w + 2 lap d - M_w(w)` for `w` derived from a `u`-field; zero for exact solutions.
pub fn fr_residual(ctx: &FuchsianContext, u: &ScalarField) -> Result<OperatorField> {
    let v = hyperbolic_radius(u)?;
    let w = renormalized_w(&v)?;
    check_denominators(&w)?;
    let n = ctx.n as f64;
    pointwise(&[&w], |_, dd, l| {
        let w = &l[0];
        let d = dd.d;
        let lw = d * d * w.laplacian + (4.0 - n) * d * dot(&dd.grad_d, &w.gradient) + (2.0 - 2.0 * n) * w.value;
        let coef = n * d * d / (2.0 * (2.0 + d * w.value));
        let mw = coef * (2.0 * w.value * dot(&dd.grad_d, &w.gradient) + d * dot(&w.gradient, &w.gradient))
            - 2.0 * d * w.value * dd.laplacian_d;
        Ok(lw + 2.0 * dd.laplacian_d - mw)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainDescriptor;
    use std::sync::Arc;

    fn ball(res: usize) -> Arc<MaskedGrid> {
        let dom = DomainDescriptor::ball(vec![0.0; 3], 1.0).unwrap();
        Arc::new(MaskedGrid::build(&dom, res, 0.125, true).unwrap())
    }

    fn ctx() -> FuchsianContext {
        FuchsianContext::new(3, 0.5, 0.5, 1.0).unwrap()
    }

    #[test]
    fn constant_maps_to_two_minus_two_n() {
        let g = ball(17);
        let one = ScalarField::from_fn(g, Quantity::W, |_, _| 1.0);
        let out = apply_l(&ctx(), &one).unwrap();
        for (_, v) in out.field.iter_defined().filter(|(_, v)| v.is_finite()) {
            assert!((v + 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn l_of_distance_converges_to_closed_form() {
        let worst = |res: usize| {
            let g = ball(res);
            let d = ScalarField::from_fn(g.clone(), Quantity::W, |_, dd| dd.d);
            let out = apply_l(&ctx(), &d).unwrap();
            out.field
                .iter_defined()
                .filter(|(id, v)| v.is_finite() && g.distance_data(*id).unwrap().d < 0.5)
                .map(|(id, v)| {
                    let dd = g.distance_data(id).unwrap();
                    (v - (-3.0 * dd.d + dd.d * dd.d * dd.laplacian_d)).abs()
                })
                .fold(0.0, f64::max)
        };
        let (coarse, fine) = (worst(33), worst(65));
        assert!(fine < 2e-3, "{fine}");
        assert!(coarse / fine > 3.0, "{coarse} vs {fine}");
    }

    #[test]
    fn mw_special_cases() {
        let g = ball(33);
        let c = ctx();
        let w = ScalarField::from_fn(g.clone(), Quantity::W, |_, _| -1.0);
        let f = ScalarField::from_fn(g.clone(), Quantity::W, |x, _| x[0] + 2.0);
        let out = apply_mw(&c, &w, &f).unwrap();
        for (id, v) in out.field.iter_defined().filter(|(_, v)| v.is_finite()) {
            let dd = g.distance_data(id).unwrap();
            let x = g.position(id);
            assert!((v + 2.0 * dd.d * (x[0] + 2.0) * dd.laplacian_d).abs() < 1e-10);
        }
        let zero = ScalarField::from_fn(g.clone(), Quantity::W, |_, _| 0.0);
        let out = apply_mw(&c, &f, &zero).unwrap();
        assert_eq!(out.max_abs_where(|_| true), 0.0);
        let bad = ScalarField::from_fn(g, Quantity::W, |_, _| -10.0);
        assert!(matches!(apply_mw(&c, &bad, &f), Err(Error::SingularDenominator { .. })));
    }

    #[test]
    fn exact_ball_solution_has_zero_residual_and_perturbation_is_local() {
        let g = ball(33);
        let mut u = ScalarField::from_fn(g.clone(), Quantity::U, |x, _| {
            (1.0 - x.iter().map(|c| c * c).sum::<f64>()).powf(-0.5)
        });
        let res = fr_residual(&ctx(), &u).unwrap();
        assert!(res.max_abs_where(|_| true) < 1e-9);
        let id = g.node_at(&[4, 2, 2]).unwrap();
        u.values_mut()[id] *= 1.01;
        let res = fr_residual(&ctx(), &u).unwrap();
        assert!(res.field.value(id).abs() > 1e-3);
        let far = g.node_at(&[0, 10, 0]).unwrap();
        assert!(res.field.value(far).abs() < 1e-9);
    }
}
