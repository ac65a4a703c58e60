//! Fuchsian reduction of the blow-up problem for `w = (v - 2d)/d^2`: the
//! operators on grid fields, the residual identity, and the inverse of the
//! model operator on a periodic strip.

mod operators;
pub mod quadrature;
mod strip;

pub use operators::{apply_l, apply_mw, fr_residual, FuchsianContext, OperatorField};
pub use strip::{
    apply_l0, apply_l0_prime, apply_l1, assemble_model_solution, invert_model_operator, k_tilde, solve_strip_poisson,
    L1Coefficients, ModelInverse, StripField, F0_POINTS,
};
