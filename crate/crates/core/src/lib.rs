//! Numerical laboratory for non-directed polymers in heavy-tailed random
//! environments.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: parameters, phase regions and the wandering exponent;
//! * [`env`]: Pareto environments, Poisson weight fields, truncation;
//! * [`walk`]: simple random walk kernels, Green function, overlap sums;
//! * [`entropy`]: entropy functionals and the rate functions J, J_d;
//! * [`elpp`]: entropy-controlled last-passage percolation;
//! * [`varprob`]: discrete and continuum energy–entropy problems;
//! * [`polymer`]: partition functions and Gibbs observables;
//! * [`limits`]: the limiting random variables of the diffusive region.
//!
//! Randomness is addressed by `(seed, label, index)`; see [`rng`].

pub mod elpp;
pub mod entropy;
pub mod env;
pub mod error;
pub mod limits;
pub mod model;
pub mod polymer;
pub mod quad;
pub mod rng;
pub mod special;
pub mod stats;
pub mod varprob;
pub mod walk;

pub use error::{Error, Result};

/// Chapters of the guide under `book/`, compiled so their snippets run as doc-tests.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    pub mod model {}
    #[doc = include_str!("../../../book/src/environment.md")]
    pub mod environment {}
    #[doc = include_str!("../../../book/src/walks.md")]
    pub mod walks {}
    #[doc = include_str!("../../../book/src/entropy.md")]
    pub mod entropy {}
    #[doc = include_str!("../../../book/src/elpp.md")]
    pub mod elpp {}
    #[doc = include_str!("../../../book/src/variational.md")]
    pub mod variational {}
    #[doc = include_str!("../../../book/src/polymer.md")]
    pub mod polymer {}
    #[doc = include_str!("../../../book/src/limits.md")]
    pub mod limits {}
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    pub mod reproducibility {}
}
