//! Independent oracles and the twelve acceptance checks for `polylab`.
//!
//! Every check returns a [`Check`] with a one-line summary of the numbers it
//! compared. [`Suite::Full`] uses the acceptance budgets; [`Suite::Fast`] is a
//! smoke-sized run for the command line.

pub mod checks;
pub mod oracles;

pub use checks::{run, run_all, Check, Suite, NAMES};
