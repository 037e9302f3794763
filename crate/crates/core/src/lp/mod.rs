//! A small exact LP/MIP engine: dense simplex plus branch and bound.

mod mip;
mod model;
mod simplex;

pub use mip::{solve_mip, Incumbent, MipOptions, MipSolution, MipStatus};
pub use model::{Constraint, Model, Relation, VarId, Variable};
pub use simplex::{solve_lp, solve_with_bounds, LpSolution, LpStatus, Tolerances};
