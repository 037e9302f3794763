//! Capacity expansion in school-choice markets under stability.
//!
//! Allocate a budget of extra seats across schools and pick the
//! student-optimal stable matching of the expanded market.

#![allow(clippy::needless_range_loop)]

pub mod combs;
pub mod cutting_plane;
pub mod error;
pub mod experiment;
pub mod fixtures;
pub mod flow;
pub mod formulations;
pub mod generate;
pub mod heuristics;
pub mod io;
pub mod lp;
pub mod matching;
pub mod model;
pub mod oracle;
pub mod solve;

pub use error::{Error, Result};
pub use model::{penalty_preset, CapacityAllocation, FractionalAssignment, Instance, Matching, PenaltySpec};
