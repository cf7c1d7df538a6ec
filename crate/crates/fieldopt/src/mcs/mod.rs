//! Multilevel coordinate search.
//!
//! The search recursively partitions the bound box into sub-boxes, each
//! carrying a base point with a known objective value and a *level* that
//! grows every time a box is processed. Low-level boxes (rarely split)
//! drive global exploration; within a sweep over levels the best box per
//! level is split, either along its least-split coordinate (*by rank*) or
//! along the coordinate whose fitted one-dimensional quadratic promises the
//! lowest value (*by expected gain*). Boxes reaching the maximum level
//! `s_max` seed a quadratic-model local search. The run is fully
//! deterministic: identical inputs produce identical evaluation traces.

mod boxes;
mod init;
mod local;

pub use boxes::{golden_splits, split_decision, SplitDecision};
pub use init::{build_init_list, line_search_init, InitStrategy, InitializationList};

use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::trace::{Evaluator, RunResult};

use boxes::{initialize, split_by_gain, split_by_rank};
use local::local_search;

/// Relative closeness to the incumbent best that makes a box base point
/// worth a local search.
const LOCAL_SEED_RELATIVE_GAP: f64 = 0.1;

/// Tuning knobs for one multilevel coordinate search run.
#[derive(Debug, Clone)]
pub struct McsConfig {
    /// How the per-coordinate initialization list is produced.
    pub init_strategy: InitStrategy,
    /// User-supplied point for the guess-based strategies; also overrides
    /// the start point of the line-search strategy when present.
    pub initial_guess: Option<Vec<f64>>,
    /// Maximum box level; controls global-search depth before local search.
    pub s_max: usize,
    pub local_search_enabled: bool,
    /// Maximum model steps per local search; 0 disables local search.
    pub local_max_steps: usize,
    /// Relative accuracy for the local-search stop rule.
    pub local_gamma: f64,
    /// Maximum number of minima collected per coordinate by the
    /// line-search initialization.
    pub nloc: usize,
    /// Maximum function evaluations per coordinate in the line-search
    /// initialization.
    pub smaxls: usize,
}

impl McsConfig {
    /// Default `s_max` for an `n`-dimensional problem.
    pub fn default_s_max(dimension: usize) -> usize {
        5 * dimension + 10
    }

    pub fn new(init_strategy: InitStrategy, dimension: usize) -> Self {
        Self {
            init_strategy,
            initial_guess: None,
            s_max: Self::default_s_max(dimension),
            local_search_enabled: true,
            local_max_steps: 50,
            local_gamma: 0.01,
            nloc: 5,
            smaxls: 25,
        }
    }

    pub fn with_guess(mut self, guess: Vec<f64>) -> Self {
        self.initial_guess = Some(guess);
        self
    }

    pub fn with_s_max(mut self, s_max: usize) -> Self {
        self.s_max = s_max;
        self
    }

    /// Turns the local-search phase off (equivalent to zero allowed steps).
    pub fn without_local_search(mut self) -> Self {
        self.local_max_steps = 0;
        self
    }

    pub fn validate(&self, problem: &Problem) -> Result<()> {
        let n = problem.dimension();
        if self.s_max < 3 {
            return Err(Error::ConfigInconsistent(format!(
                "s_max = {} must be >= 3",
                self.s_max
            )));
        }
        if !(self.local_gamma > 0.0 && self.local_gamma < 1.0) {
            return Err(Error::ConfigInconsistent(format!(
                "local_gamma = {} must lie in (0, 1)",
                self.local_gamma
            )));
        }
        if self.nloc < 1 {
            return Err(Error::ConfigInconsistent("nloc must be >= 1".into()));
        }
        if self.smaxls < 3 {
            return Err(Error::ConfigInconsistent("smaxls must be >= 3".into()));
        }
        match &self.initial_guess {
            Some(g) => {
                if g.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: g.len(),
                    });
                }
                if g.iter().any(|v| !v.is_finite()) {
                    return Err(Error::ConfigInconsistent(
                        "initial guess must be finite".into(),
                    ));
                }
            }
            None => {
                if matches!(
                    self.init_strategy,
                    InitStrategy::BoundaryGuess | InitStrategy::InteriorGuess
                ) {
                    return Err(Error::MissingGuess);
                }
            }
        }
        Ok(())
    }
}

fn improvement_expected(base_value: f64, best_internal: f64) -> bool {
    if !best_internal.is_finite() {
        return true;
    }
    if best_internal == 0.0 {
        base_value.abs() <= LOCAL_SEED_RELATIVE_GAP
    } else {
        (base_value - best_internal).abs() <= LOCAL_SEED_RELATIVE_GAP * best_internal.abs()
    }
}

/// Runs multilevel coordinate search on `problem`.
///
/// Always returns the best point found; budget exhaustion is a normal
/// termination. Errors are limited to invalid configurations.
pub fn run_mcs(problem: &Problem, config: &McsConfig) -> Result<RunResult> {
    config.validate(problem)?;
    if problem.budget() == 0 {
        return Err(Error::Config("budget must be >= 1".into()));
    }
    let mut ev = Evaluator::new(problem);
    let list = match config.init_strategy {
        InitStrategy::LineSearch => line_search_init(&mut ev, config)?,
        _ => build_init_list(problem, config)?,
    };
    let mut state = initialize(&mut ev, &list, config.s_max)?;
    let local_on = config.local_search_enabled && config.local_max_steps > 0;

    'outer: while !ev.exhausted() && state.any_alive_below_smax() {
        for s in 2..state.s_max {
            if ev.exhausted() {
                break 'outer;
            }
            let Some(id) = state.select_at_level(s) else {
                continue;
            };
            let decision = split_decision(state.level_of(id), state.split_counts_of(id));
            let outcome = match decision {
                SplitDecision::ByRank(coord) => match state.redirect_frozen(id, coord) {
                    Some(c) => split_by_rank(&mut state, &mut ev, id, c),
                    None => {
                        state.bump(id);
                        Ok(())
                    }
                },
                SplitDecision::ByGain => split_by_gain(&mut state, &mut ev, id),
            };
            match outcome {
                Ok(()) => {}
                Err(Error::BudgetExhausted) => break 'outer,
                Err(e) => return Err(e),
            }
        }
        let fresh = state.drain_new_at_smax();
        if local_on {
            for id in fresh {
                let base = state.base_of(id).to_vec();
                let value = state.value_of(id);
                let best = ev.best_internal();
                if improvement_expected(value, best) && !state.already_seeded(&base) {
                    state.mark_seeded(base.clone());
                    match local_search(&mut ev, &base, value, best, config) {
                        Ok(()) => {}
                        Err(Error::BudgetExhausted) => break 'outer,
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }
    Ok(ev.into_result(None))
}
