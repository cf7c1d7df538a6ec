//! The algorithm registry: stable identifiers for every optimizer
//! configuration the toolkit ships, and a uniform way to run them.

use std::fmt;
use std::str::FromStr;

use crate::cmaes::{run_cmaes, CmaesConfig};
use crate::error::{Error, Result};
use crate::gps::{run_gps, GpsConfig};
use crate::mcs::{run_mcs, InitStrategy, McsConfig};
use crate::problem::Problem;
use crate::pso::{run_pso, PsoConfig};
use crate::trace::RunResult;

/// Identifier of one ready-made optimizer configuration.
///
/// `mcs-1` through `mcs-7` differ in their initialization list, maximum
/// level, and local-search switch:
///
/// | id | list | s_max | local search |
/// |----|------|-------|--------------|
/// | mcs-1 | boundary + midpoints | 5n + 10 | on |
/// | mcs-2 | interior sixths | 5n + 10 | on |
/// | mcs-3 | line-search generated | 5n + 10 | on |
/// | mcs-4 | boundary + guess | 5n + 10 | on |
/// | mcs-5 | interior + guess | 5n + 10 | on |
/// | mcs-6 | boundary + guess | 10n | on |
/// | mcs-7 | boundary + guess | 5n + 10 | off |
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AlgorithmId {
    Mcs1,
    Mcs2,
    Mcs3,
    Mcs4,
    Mcs5,
    Mcs6,
    Mcs7,
    Gps,
    Pso,
    Cmaes,
}

impl AlgorithmId {
    pub fn all() -> [AlgorithmId; 10] {
        use AlgorithmId::*;
        [Mcs1, Mcs2, Mcs3, Mcs4, Mcs5, Mcs6, Mcs7, Gps, Pso, Cmaes]
    }

    pub fn is_deterministic(self) -> bool {
        !matches!(self, AlgorithmId::Pso | AlgorithmId::Cmaes)
    }

    /// Whether this configuration consumes the provided start point.
    pub fn uses_start(self) -> bool {
        !matches!(
            self,
            AlgorithmId::Mcs1 | AlgorithmId::Mcs2 | AlgorithmId::Mcs3
        )
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AlgorithmId::Mcs1 => "mcs-1",
            AlgorithmId::Mcs2 => "mcs-2",
            AlgorithmId::Mcs3 => "mcs-3",
            AlgorithmId::Mcs4 => "mcs-4",
            AlgorithmId::Mcs5 => "mcs-5",
            AlgorithmId::Mcs6 => "mcs-6",
            AlgorithmId::Mcs7 => "mcs-7",
            AlgorithmId::Gps => "gps",
            AlgorithmId::Pso => "pso",
            AlgorithmId::Cmaes => "cmaes",
        };
        f.write_str(s)
    }
}

impl FromStr for AlgorithmId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "mcs-1" => AlgorithmId::Mcs1,
            "mcs-2" => AlgorithmId::Mcs2,
            "mcs-3" => AlgorithmId::Mcs3,
            "mcs-4" => AlgorithmId::Mcs4,
            "mcs-5" => AlgorithmId::Mcs5,
            "mcs-6" => AlgorithmId::Mcs6,
            "mcs-7" => AlgorithmId::Mcs7,
            "gps" => AlgorithmId::Gps,
            "pso" => AlgorithmId::Pso,
            "cmaes" => AlgorithmId::Cmaes,
            other => {
                return Err(Error::Config(format!(
                    "unknown algorithm id '{other}' (see list-algorithms)"
                )))
            }
        })
    }
}

/// Either a single algorithm or an `Algorithm1-Algorithm2` pair for the
/// sequential procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgorithmSelector {
    Single(AlgorithmId),
    Pair(AlgorithmId, AlgorithmId),
}

impl AlgorithmSelector {
    pub fn is_deterministic(self) -> bool {
        match self {
            AlgorithmSelector::Single(a) => a.is_deterministic(),
            AlgorithmSelector::Pair(a, b) => a.is_deterministic() && b.is_deterministic(),
        }
    }
}

impl fmt::Display for AlgorithmSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgorithmSelector::Single(a) => write!(f, "{a}"),
            AlgorithmSelector::Pair(a, b) => write!(f, "{a}-{b}"),
        }
    }
}

impl FromStr for AlgorithmSelector {
    type Err = Error;

    /// Parses `"gps"` or a hyphen-joined pair such as `"mcs-1-cmaes"`. The
    /// pair split is the unique position where both halves parse.
    fn from_str(s: &str) -> Result<Self> {
        if let Ok(single) = s.parse::<AlgorithmId>() {
            return Ok(AlgorithmSelector::Single(single));
        }
        let mut splits = Vec::new();
        for (idx, _) in s.match_indices('-') {
            let (left, right) = (&s[..idx], &s[idx + 1..]);
            if let (Ok(a), Ok(b)) = (left.parse::<AlgorithmId>(), right.parse::<AlgorithmId>()) {
                splits.push((a, b));
            }
        }
        match splits.len() {
            1 => Ok(AlgorithmSelector::Pair(splits[0].0, splits[0].1)),
            0 => Err(Error::Config(format!(
                "unknown algorithm id or pair '{s}'"
            ))),
            _ => Err(Error::Config(format!(
                "ambiguous algorithm pair '{s}'"
            ))),
        }
    }
}

fn mcs_config(id: AlgorithmId, n: usize, start: &[f64]) -> McsConfig {
    let base = |strategy| McsConfig::new(strategy, n);
    match id {
        AlgorithmId::Mcs1 => base(InitStrategy::BoundaryMid),
        AlgorithmId::Mcs2 => base(InitStrategy::Interior),
        AlgorithmId::Mcs3 => base(InitStrategy::LineSearch),
        AlgorithmId::Mcs4 => base(InitStrategy::BoundaryGuess).with_guess(start.to_vec()),
        AlgorithmId::Mcs5 => base(InitStrategy::InteriorGuess).with_guess(start.to_vec()),
        AlgorithmId::Mcs6 => base(InitStrategy::BoundaryGuess)
            .with_guess(start.to_vec())
            .with_s_max(10 * n),
        AlgorithmId::Mcs7 => base(InitStrategy::BoundaryGuess)
            .with_guess(start.to_vec())
            .without_local_search(),
        _ => unreachable!("not an mcs id"),
    }
}

/// Warm-start variant used by sequential stages: every configuration takes
/// the incumbent as its guess (guess-list middle for the list strategies,
/// line-search start for `mcs-3`, start point or initial mean otherwise).
fn mcs_config_warm(id: AlgorithmId, n: usize, guess: &[f64]) -> McsConfig {
    match id {
        AlgorithmId::Mcs1 => {
            McsConfig::new(InitStrategy::BoundaryGuess, n).with_guess(guess.to_vec())
        }
        AlgorithmId::Mcs2 => {
            McsConfig::new(InitStrategy::InteriorGuess, n).with_guess(guess.to_vec())
        }
        AlgorithmId::Mcs3 => McsConfig::new(InitStrategy::LineSearch, n).with_guess(guess.to_vec()),
        _ => mcs_config(id, n, guess),
    }
}

/// Runs algorithm `id` on `problem`. `start` feeds the guess-based MCS
/// lists, the GPS start, one PSO particle, and the CMA-ES mean; `seed`
/// drives the stochastic algorithms (ignored by deterministic ones).
pub fn run_algorithm(
    id: AlgorithmId,
    problem: &Problem,
    start: &[f64],
    seed: Option<u64>,
) -> Result<RunResult> {
    dispatch(id, problem, start, seed, false)
}

/// Stage-seeded variant: the incumbent is injected as the initial guess of
/// every configuration (not only the guess-based ones).
pub fn run_algorithm_warm(
    id: AlgorithmId,
    problem: &Problem,
    incumbent: &[f64],
    seed: Option<u64>,
) -> Result<RunResult> {
    dispatch(id, problem, incumbent, seed, true)
}

fn dispatch(
    id: AlgorithmId,
    problem: &Problem,
    start: &[f64],
    seed: Option<u64>,
    warm: bool,
) -> Result<RunResult> {
    let n = problem.dimension();
    match id {
        AlgorithmId::Gps => run_gps(problem, &GpsConfig::default(), start),
        AlgorithmId::Pso => run_pso(
            problem,
            &PsoConfig::default().with_seed(seed.unwrap_or(0)),
            start,
        ),
        AlgorithmId::Cmaes => run_cmaes(
            problem,
            &CmaesConfig::for_dimension(n, seed.unwrap_or(0)),
            start,
        ),
        mcs_id => {
            let config = if warm {
                mcs_config_warm(mcs_id, n, start)
            } else {
                mcs_config(mcs_id, n, start)
            };
            run_mcs(problem, &config)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::camel_problem;

    #[test]
    fn ids_round_trip_through_strings() {
        for id in AlgorithmId::all() {
            assert_eq!(id.to_string().parse::<AlgorithmId>().unwrap(), id);
        }
    }

    #[test]
    fn pair_parsing_handles_embedded_hyphens() {
        assert_eq!(
            "mcs-1-cmaes".parse::<AlgorithmSelector>().unwrap(),
            AlgorithmSelector::Pair(AlgorithmId::Mcs1, AlgorithmId::Cmaes)
        );
        assert_eq!(
            "mcs-3-mcs-7".parse::<AlgorithmSelector>().unwrap(),
            AlgorithmSelector::Pair(AlgorithmId::Mcs3, AlgorithmId::Mcs7)
        );
        assert_eq!(
            "gps-pso".parse::<AlgorithmSelector>().unwrap(),
            AlgorithmSelector::Pair(AlgorithmId::Gps, AlgorithmId::Pso)
        );
        assert_eq!(
            "mcs-2".parse::<AlgorithmSelector>().unwrap(),
            AlgorithmSelector::Single(AlgorithmId::Mcs2)
        );
        assert!("mcs-9".parse::<AlgorithmSelector>().is_err());
        assert!("nope-gps-x".parse::<AlgorithmSelector>().is_err());
    }

    #[test]
    fn every_algorithm_respects_small_budgets() {
        for id in AlgorithmId::all() {
            for budget in [10usize, 50] {
                let p = camel_problem(budget);
                let start = p.bounds().midpoint();
                let r = run_algorithm(id, &p, &start, Some(7)).unwrap();
                assert!(
                    r.evals_used <= budget,
                    "{id} used {} of {budget}",
                    r.evals_used
                );
                assert_eq!(r.trace.len(), r.evals_used);
            }
        }
    }

    #[test]
    fn determinism_classification() {
        assert!(AlgorithmId::Mcs3.is_deterministic());
        assert!(AlgorithmId::Gps.is_deterministic());
        assert!(!AlgorithmId::Pso.is_deterministic());
        assert!(!AlgorithmSelector::Pair(AlgorithmId::Mcs1, AlgorithmId::Cmaes).is_deterministic());
        assert!(AlgorithmSelector::Pair(AlgorithmId::Mcs1, AlgorithmId::Gps).is_deterministic());
    }
}
