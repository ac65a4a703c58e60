//! Criterion benchmarks for the radial, grid and strip solvers live under `benches/`.
