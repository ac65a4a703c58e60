use std::sync::Arc;

use hyprad_core::comparison::sphere_sandwich_check;
use hyprad_core::fuchsian::{fr_residual, FuchsianContext};
use hyprad_core::grid::{
    hyperbolic_critical_points, monotone_violations, renormalized_w, solve_truncated, CriticalKind, DataOrder,
    NodeClass, Solution, SolverMode, Unknown,
};
use hyprad_core::radial::sandwich_bounds;
use hyprad_core::{DomainDescriptor, MaskedGrid, SolverConfig};

fn unit_ball() -> DomainDescriptor {
    DomainDescriptor::ball(vec![0.0; 3], 1.0).unwrap()
}

fn ellipsoid() -> DomainDescriptor {
    DomainDescriptor::ellipsoid(vec![0.0; 3], vec![1.0, 1.0, 0.5]).unwrap()
}

fn solve_with(dom: &DomainDescriptor, res: usize, h_trunc: f64, cfg: SolverConfig) -> Solution {
    let grid = Arc::new(MaskedGrid::build(dom, res, h_trunc, true).unwrap());
    solve_truncated(&grid, &cfg).unwrap()
}

fn radius_form(dom: &DomainDescriptor, res: usize) -> Solution {
    let h = 2.0 / (res - 1) as f64;
    let cfg = SolverConfig {
        unknown: Unknown::HyperbolicRadius,
        ..SolverConfig::new(h)
    };
    solve_with(dom, res, h, cfg)
}

fn center_u(sol: &Solution) -> f64 {
    sol.u.value(sol.u.grid().node_at(&[0, 0, 0]).unwrap())
}

#[test]
fn monotone_sequence_obeys_the_maximum_principle_and_the_sandwich() {
    let cfg = SolverConfig {
        mode: SolverMode::MonotoneSequence,
        m_ladder: vec![2.0, 4.0, 8.0, 16.0],
        ..SolverConfig::new(0.125)
    };
    let sol = solve_with(&unit_ball(), 65, 0.125, cfg);
    let grid = sol.u.grid().clone();
    assert_eq!(sol.ladder.len(), 4);
    let mut steps: Vec<_> = sol.ladder.iter().collect();
    steps.push(&sol.u);
    for pair in steps.windows(2) {
        assert_eq!(monotone_violations(pair[0], pair[1], 1e-10), 0);
    }
    for field in &steps {
        // u is discretely subharmonic and positive: interior values stay in (0, layer max].
        let layer_max = grid.layer_nodes().iter().map(|&id| field.value(id)).fold(0.0, f64::max);
        for &id in grid.interior_nodes() {
            let u = field.value(id);
            assert!(u > 0.0 && u <= layer_max * (1.0 + 1e-12), "u = {u}, layer max {layer_max}");
        }
    }
    // Every iterate lies below the interior barrier up to grid error, which is
    // 5e-3 relative at this resolution. Layer data stay below 8 here, so the
    // last rungs coincide with the final field.
    for field in &sol.ladder {
        for (id, u) in field.iter_defined() {
            let d = grid.distance_data(id).unwrap().d;
            let (_, upper) = sandwich_bounds(3, 1.0, d);
            assert!(u <= upper * (1.0 + 5e-3), "u = {u} above the interior barrier {upper} at d = {d}");
        }
    }
    let report = sphere_sandwich_check(&sol.u, 5e-3).unwrap();
    assert!(report.passed, "{report:?}");
}

#[test]
fn ellipsoid_solution_is_sandwiched_by_sphere_barriers() {
    let cfg = SolverConfig::new(0.05);
    let sol = solve_with(&ellipsoid(), 65, 0.05, cfg);
    let report = sphere_sandwich_check(&sol.u, 1e-6).unwrap();
    assert!(report.samples > 0);
    assert_eq!(report.violations, 0, "{report:?}");
}

/// Ellipsoid, `v`-form, `h_trunc = h`: `max |v - 2d| / h^2` on `{h <= d <= 2h}`
/// is stable, the gradient defect there shrinks, and `w + H` is small near the
/// boundary and shrinks on a collar that scales with `h`.
#[test]
fn ellipsoid_boundary_behavior_under_refinement() {
    let dom = ellipsoid();
    let mut constants = Vec::new();
    let mut gradient_defects = Vec::new();
    let mut collar_w = Vec::new();
    for res in [65usize, 97] {
        let h = 2.0 / (res - 1) as f64;
        let sol = radius_form(&dom, res);
        let grid = sol.v.grid().clone();
        let w = renormalized_w(&sol.v).unwrap();
        let (mut c, mut eps, mut near, mut collar) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for (id, v) in sol.v.iter_defined() {
            let dd = grid.distance_data(id).unwrap();
            let interior = grid.class(id) == NodeClass::Interior;
            let w_defect = (w.value(id) + dd.mean_curvature).abs();
            if dd.d >= h && dd.d <= 2.0 * h {
                c = c.max((v - 2.0 * dd.d).abs() / (h * h));
                if let Some(g) = sol.v.central_gradient(id) {
                    eps = eps.max((g.iter().map(|x| x * x).sum::<f64>().sqrt() - 2.0).abs());
                }
            }
            if dd.d < 0.05 {
                near = near.max(w_defect);
            }
            if interior && dd.d >= h && dd.d <= 3.0 * h {
                collar = collar.max(w_defect);
            }
        }
        assert!(near <= 0.2, "res {res}: max |w + H| on d < 0.05 is {near}");
        constants.push(c);
        gradient_defects.push(eps);
        collar_w.push(collar);
    }
    let ratio = constants[1] / constants[0];
    assert!((0.8..=1.25).contains(&ratio), "constants {constants:?}");
    assert!(gradient_defects[1] < gradient_defects[0], "{gradient_defects:?}");
    assert!(collar_w[1] < collar_w[0], "{collar_w:?}");
}

/// On the unit ball `u(0) = 1`. One-term layer data bias `u(0)` at first
/// order in `h_trunc`; two-term data are exact there and leave only grid error.
#[test]
fn two_term_data_dominate_one_term_data() {
    let dom = unit_ball();
    let error = |order: DataOrder, h_trunc: f64| {
        let cfg = SolverConfig {
            data_order: order,
            ..SolverConfig::new(h_trunc)
        };
        (center_u(&solve_with(&dom, 65, h_trunc, cfg)) - 1.0).abs()
    };
    let one: Vec<f64> = [0.2, 0.1].iter().map(|&t| error(DataOrder::OneTerm, t)).collect();
    let two = error(DataOrder::TwoTerm, 0.2);
    assert!(one[1] < one[0], "one-term errors {one:?}");
    assert!(two < one[0] / 10.0, "two-term {two}, one-term {}", one[0]);
}

#[test]
fn centers_of_symmetric_domains() {
    let sol = radius_form(&unit_ball(), 33);
    let found = hyperbolic_critical_points(&sol.v);
    assert_eq!(found.len(), 1, "{found:?}");
    assert_eq!(found[0].kind, CriticalKind::Maximum);
    assert!(found[0].position.iter().all(|c| c.abs() < 1e-12));
    assert!((found[0].value - 1.0).abs() < 1e-10);

    let sol = radius_form(&ellipsoid(), 65);
    let found = hyperbolic_critical_points(&sol.v);
    assert!(found
        .iter()
        .any(|p| p.kind == CriticalKind::Maximum && p.position.iter().all(|c| c.abs() < 1e-12)));
}

/// The discrete `Lw + 2 lap d - M_w(w)` of the ellipsoid solution decreases
/// under refinement on a collar that avoids both the truncation layer and the
/// medial disc, where the distance function is not smooth.
#[test]
fn solver_output_satisfies_the_renormalized_equation() {
    let dom = ellipsoid();
    let ctx = FuchsianContext::new(3, 0.5, 0.2, dom.r0()).unwrap();
    let mut worst = Vec::new();
    for res in [65usize, 97] {
        let sol = radius_form(&dom, res);
        let grid = sol.u.grid().clone();
        let fr = fr_residual(&ctx, &sol.u).unwrap();
        worst.push(fr.max_abs_where(|id| grid.distance_data(id).is_some_and(|dd| (0.1..=0.2).contains(&dd.d))));
    }
    assert!(worst[1] < worst[0], "{worst:?}");
}
