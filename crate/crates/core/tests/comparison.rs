use std::sync::Arc;

use hyprad_core::comparison::{
    maximum_principle_witness, measure_quadratic_bound, radial_tilde_w_slope, select_collar_width,
    verify_tilde_w_bound, BarrierKind, BarrierSpec,
};
use hyprad_core::fuchsian::FuchsianContext;
use hyprad_core::grid::{renormalized_w, solve_truncated, Unknown};
use hyprad_core::radial::solve_radial_maximal;
use hyprad_core::{BoundaryValue, DomainDescriptor, MaskedGrid, RadialGeometry, RadialOptions, SolverConfig};

const LEVELS: [f64; 3] = [0.02, 0.04, 0.08];

/// Ellipsoid (1, 1, 0.5) at resolution 65: the comparison pipeline from the
/// measured quadratic bound to the collar, the `w + H` bound and the witness.
#[test]
fn ellipsoid_comparison_pipeline() {
    let dom = DomainDescriptor::ellipsoid(vec![0.0; 3], vec![1.0, 1.0, 0.5]).unwrap();
    let h = 2.0 / 64.0;
    let grid = Arc::new(MaskedGrid::build(&dom, 65, h, true).unwrap());
    let cfg = SolverConfig {
        unknown: Unknown::HyperbolicRadius,
        ..SolverConfig::new(h)
    };
    let sol = solve_truncated(&grid, &cfg).unwrap();
    let w = renormalized_w(&sol.v).unwrap();

    let ctx = FuchsianContext::new(3, 0.5, 0.5 * dom.r0(), dom.r0()).unwrap();
    let c = measure_quadratic_bound(&ctx, &w).unwrap();
    assert!(c.is_finite() && c > 0.0);
    let linear = BarrierSpec {
        kind: BarrierKind::W0PlusAd,
        linear_coefficient: c,
        ..Default::default()
    };
    let singular = BarrierSpec {
        kind: BarrierKind::EpsilonSingular,
        singular_shift: 12.0,
        ..Default::default()
    };
    // Near the equator lap d reaches about -9 inside the widest collar, which needs B >= 10.
    let selection = select_collar_width(&dom, &[linear, singular], c, 2000, 0).unwrap();
    let delta = selection.delta.expect("some collar width satisfies the sign conditions");

    let report = verify_tilde_w_bound(&w, c, delta, 0.0, &LEVELS, 0.8).unwrap();
    assert!(report.passed, "{report:?}");

    let witness = BarrierSpec {
        kind: BarrierKind::EpsilonSingular,
        linear_coefficient: c,
        singular_shift: 12.0,
        singular_weight: 1e-6,
        collar_width: delta,
        ..Default::default()
    };
    let report = maximum_principle_witness(&w, &witness).unwrap();
    assert!(report.samples > 0);
    assert!(report.passed, "{report:?}");
}

#[test]
fn radial_shell_w_approaches_minus_h_linearly() {
    let geo = RadialGeometry::Shell {
        inner_radius: 0.5,
        outer_radius: 1.0,
    };
    let profile = solve_radial_maximal(3, geo, 512, BoundaryValue::Infinite, RadialOptions::default()).unwrap();
    let report = radial_tilde_w_slope(&profile, &LEVELS, 0.9).unwrap();
    assert!(report.passed, "{report:?}");
}
