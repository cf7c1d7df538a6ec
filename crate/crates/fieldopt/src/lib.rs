//! Derivative-free global optimization toolkit built around multilevel
//! coordinate search, with pattern-search and evolutionary baselines, a
//! desk-scale two-phase waterflood reservoir simulator, net-present-value
//! objectives, and an experiment harness for well placement, well control,
//! and joint field-development studies.
//!
//! The narrative guide in `book/` walks through the concepts; its code
//! snippets compile and run as doc-tests of this crate.

pub mod algorithms;
pub mod bench;
#[cfg(doctest)]
pub mod book;
pub mod cmaes;
pub mod error;
pub mod experiment;
pub mod gps;
pub mod joint;
pub mod mcs;
pub mod npv;
pub mod problem;
pub mod pso;
pub mod reservoir;
pub mod scenario;
pub mod stats;
pub mod trace;
pub mod wells;

pub use algorithms::{run_algorithm, AlgorithmId, AlgorithmSelector};
pub use error::{Error, Result};
pub use problem::{Bounds, Problem, Sense};
pub use stats::{aggregate_trials, TrialStatistics};
pub use trace::{EvaluationTrace, Evaluator, RunResult};
