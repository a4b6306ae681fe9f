//! Dyadic Search: zeroth-order minimization of a convex function on an
//! interval when every evaluation is an interval guaranteed to contain the
//! true value, and its width shrinks with the budget invested at the point.
//!
//! The crate is organized bottom-up:
//!
//! - [`coord`]: exact rational positions in the normalized domain `[0, 1]`.
//! - [`fuzzy`]: interval-valued evaluations and the elimination rule.
//! - [`search`]: the optimizer state machine.
//! - [`environment`]: test objectives, budget schedules, and oracles.
//! - [`harness`]: the interaction loop, regret accounting, the explicit
//!   regret bound, and trace diagnostics.
//! - [`cli`]: argument parsing and CSV / summary output for the binary.

pub mod cli;
pub mod coord;
pub mod environment;
pub mod error;
pub mod fuzzy;
pub mod harness;
pub mod search;

pub use coord::Coord;
pub use error::{Error, Result};
pub use fuzzy::{delete, DeletionPattern, FuzzyInterval};
pub use search::{ActiveInterval, DyadicSearch, EpochEvent, PartitionKind, Triple};
