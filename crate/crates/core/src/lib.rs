//! Optimal routing in massively dense wireless networks through the
//! geometrical-optics analogy.
//!
//! Macroscopic cost fields are derived from node-density models
//! ([`costmodels`]), the eikonal equation `|grad S| = c` is solved by fast
//! marching ([`eikonal`]), the ray equation is integrated directly
//! ([`raytrace`]), and the resulting trajectories are checked against
//! greedy trajectory-based forwarding and a shortest-path oracle on sampled
//! Poisson networks ([`microsim`]).

// `!(x > 0.0)` style guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod costmodels;
pub mod eikonal;
pub mod error;
pub mod expr;
pub mod field;
pub mod geometry;
pub mod io;
pub mod microsim;
pub mod raytrace;
pub mod rng;

pub use costmodels::{build_cost_field, CostModel, CostVariant, HopCostKind, HopStats};
pub use eikonal::{
    extract_wavefronts, solve as solve_eikonal, solve_with as solve_eikonal_with, trace_descent_ray, Contour,
    EikonalSolution, SolveOptions, SourceSet,
};
pub use error::{Error, Result};
pub use expr::Expr;
pub use field::{FieldKind, GridSpec, ScalarField2D, Trajectory};
pub use geometry::Point2;
pub use raytrace::{integrate as integrate_ray, shoot, ShootOptions};
