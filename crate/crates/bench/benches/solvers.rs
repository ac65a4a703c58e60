use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use hyprad_core::fuchsian::invert_model_operator;
use hyprad_core::grid::{solve_truncated, Unknown};
use hyprad_core::radial::solve_radial_maximal;
use hyprad_core::{
    BoundaryValue, DomainDescriptor, MaskedGrid, RadialGeometry, RadialOptions, SolverConfig, StripField,
};

fn radial(c: &mut Criterion) {
    let geometry = RadialGeometry::Shell {
        inner_radius: 0.5,
        outer_radius: 1.0,
    };
    c.bench_function("radial_maximal_shell_512", |b| {
        b.iter(|| solve_radial_maximal(3, geometry, 512, BoundaryValue::Infinite, RadialOptions::default()).unwrap())
    });
}

fn grid(c: &mut Criterion) {
    let ball = DomainDescriptor::ball(vec![0.0; 3], 1.0).unwrap();
    let grid = Arc::new(MaskedGrid::build(&ball, 33, 0.2, true).unwrap());
    let cfg = SolverConfig {
        unknown: Unknown::HyperbolicRadius,
        ..SolverConfig::new(0.2)
    };
    c.bench_function("grid_ball_33", |b| b.iter(|| solve_truncated(&grid, &cfg).unwrap()));
}

fn strip(c: &mut Criterion) {
    let k = StripField::from_fn(3, 1.0, 128, 128, |y, _| 1.0 + 0.5 * (std::f64::consts::PI * y[0]).cos()).unwrap();
    c.bench_function("strip_inversion_128", |b| b.iter(|| invert_model_operator(&k).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = radial, grid, strip
}
criterion_main!(benches);
