//! Discrete-time homogeneous semi-Markov modeling of high-frequency price returns.
//!
//! The library models one-minute intraday returns as a semi-Markov process on a
//! symmetric discretized return grid and overnight returns as a Markov chain on
//! the same grid. On top of the fitted model it provides:
//!
//! - kernel estimation from discretized paths, with day-boundary censoring
//!   ([`kernel`]),
//! - transition probabilities of the semi-Markov process and of the joint
//!   (state, backward-recurrence-time) chain, plus its stationary law
//!   ([`solver`]),
//! - first-passage-time distributions of the accumulation factor across the
//!   intraday/overnight day structure ([`fpt`]),
//! - moment recursions for the expected accumulation factor and the intraday
//!   volatility autocovariance, and the squared-return autocorrelation under
//!   the stationary backward law ([`moments`]),
//! - a nonparametric test of geometric sojourn times ([`inference`]),
//! - a seeded, byte-reproducible simulator together with empirical estimators
//!   used as Monte Carlo cross-checks ([`simulate`]).
//!
//! Batch workloads (Monte Carlo replications, per-query sweeps) run on rayon
//! when the default `parallel` feature is enabled and fall back to sequential
//! loops when it is not; results are identical either way.

pub mod enumerate;
pub mod error;
pub mod fpt;
pub mod inference;
pub mod io;
pub mod kernel;
pub mod moments;
pub mod par;
pub mod simulate;
pub mod solver;
pub mod state;

pub use error::{Error, Result};
pub use fpt::{FptOptions, FptSolution};

pub use kernel::{DerivedKernelViews, OvernightChain, SemiMarkovKernel};
pub use solver::{BackwardLaw, BackwardSurface, TransitionSurface};
pub use state::{DayStructure, DiscretizedPath, ReturnPath, StateSpace};
