//! Maximal boundary blow-up solutions of `-lap u + n(n-2) u^{(n+2)/(n-2)} = 0`
//! on bounded smooth domains, their hyperbolic radius `v = u^{-2/(n-2)}` and the
//! renormalized boundary defect `w = (v - 2d)/d^2`.
//!
//! Modules: `geometry` (domains and distance data), `radial` (ODE profiles),
//! `grid` (truncated finite-difference solves), `fuchsian` (the boundary model
//! operator on a strip), `comparison` (barrier and maximum-principle checks),
//! plus `io`, `linalg` and `convergence` utilities.

pub mod comparison;
pub mod convergence;
pub mod error;
pub mod fuchsian;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod radial;

pub use error::{Error, Result};
pub use geometry::{DistanceData, DomainDescriptor, Shape};
pub use radial::{BoundaryValue, ProfileKind, RadialGeometry, RadialOptions, RadialProfile};
pub use grid::{MaskedGrid, Quantity, ScalarField, SolverConfig};
pub use fuchsian::StripField;
pub use comparison::{BarrierKind, BarrierSpec, CheckReport};
