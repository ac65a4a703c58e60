//! Finite-difference solver for the blow-up problem on the truncated domain
//! `{d > h_trunc}` with Dirichlet data from the boundary expansion.

mod critical;
mod field;
mod mesh;
mod solver;

pub use critical::{hyperbolic_critical_points, CriticalKind, CriticalPoint};
pub use field::{
    asymptotic_dirichlet_data, asymptotic_v, blow_up_solution, hyperbolic_radius, renormalized_w, u_to_v, v_to_u,
    DataOrder, Quantity, ScalarField,
};
pub use mesh::{MaskedGrid, NodeClass};
pub use solver::{monotone_violations, solve_truncated, Solution, SolveStats, SolverConfig, SolverMode, Unknown};
