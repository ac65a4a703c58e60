use std::f64::consts::PI;
use std::sync::Arc;

use hyprad_core::fuchsian::{apply_l0_prime, assemble_model_solution, fr_residual, invert_model_operator, FuchsianContext};
use hyprad_core::grid::solve_truncated;
use hyprad_core::{DomainDescriptor, MaskedGrid, SolverConfig, StripField};

fn y_only_data(n: usize, res: usize) -> StripField {
    StripField::from_fn(n, 1.0, res, res, |y, _| 1.0 + 0.3 * (PI * y[0]).cos() + 0.1 * (2.0 * PI * y[n - 2]).sin())
        .unwrap()
}

#[test]
fn unit_data_inverts_to_minus_one_half() {
    for n in [3, 4] {
        let k = StripField::from_fn(n, 1.0, 16, 64, |_, _| 1.0).unwrap();
        let inv = invert_model_operator(&k).unwrap();
        assert!(inv.f0.map(|v| v + 0.5).max_abs_above(-1.0) <= 1e-12);
        let image = apply_l0_prime(&inv.f0);
        assert!(image.map(|v| v - 1.0).max_abs_above(-1.0) <= 1e-10);
    }
}

/// For `k = k(Y)` the inverse has trace `-k/2` and the assembled solution has
/// trace `k / (2 - 2n)`.
#[test]
fn traces_of_the_model_inverse() {
    let n = 3;
    let k = y_only_data(n, 128);
    let inv = invert_model_operator(&k).unwrap();
    let f = assemble_model_solution(&k).unwrap();
    for col in 0..k.columns() {
        let kv = k.get(col, 0);
        assert!((inv.f0.get(col, 0) + 0.5 * kv).abs() <= 1e-6);
        assert!((f.get(col, 0) - kv / (2.0 - 2.0 * n as f64)).abs() <= 1e-6);
    }
}

/// `L w + 2 lap d - M_w(w)` of `u`-form solver output on the unit ball decreases
/// under refinement on the collar `2 h_trunc < d < delta`.
#[test]
fn solver_residual_decreases_on_the_collar() {
    let dom = DomainDescriptor::ball(vec![0.0; 3], 1.0).unwrap();
    let (h_trunc, delta) = (0.125, 0.5);
    let ctx = FuchsianContext::new(3, 0.5, delta, dom.r0()).unwrap();
    let mut worst = Vec::new();
    for res in [33usize, 65] {
        let grid = Arc::new(MaskedGrid::build(&dom, res, h_trunc, true).unwrap());
        let sol = solve_truncated(&grid, &SolverConfig::new(h_trunc)).unwrap();
        let fr = fr_residual(&ctx, &sol.u).unwrap();
        worst.push(fr.max_abs_where(|id| {
            grid.distance_data(id).is_some_and(|dd| dd.d > 2.0 * h_trunc && dd.d < delta)
        }));
    }
    assert!(worst[1] < worst[0], "{worst:?}");
}
