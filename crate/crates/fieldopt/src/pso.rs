//! Particle swarm optimization with a global-best topology and seeded,
//! reproducible randomness.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::trace::{Evaluator, RunResult};

/// Velocities are clamped to this fraction of each coordinate range.
const VELOCITY_CLAMP_FRACTION: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct PsoConfig {
    pub population: usize,
    /// Inertia weight applied to the previous velocity.
    pub inertia: f64,
    /// Attraction toward each particle's own best.
    pub cognitive: f64,
    /// Attraction toward the swarm best.
    pub social: f64,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            population: 50,
            inertia: 0.9,
            cognitive: 0.5,
            social: 1.25,
            seed: 0,
        }
    }
}

impl PsoConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::ConfigInconsistent(
                "population must be >= 2".into(),
            ));
        }
        if self.inertia < 0.0 || self.cognitive < 0.0 || self.social < 0.0 {
            return Err(Error::ConfigInconsistent(
                "weighting parameters must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Runs particle swarm optimization.
///
/// `start` is injected as particle 0; the remaining particles initialize
/// uniformly at random inside the bounds with zero velocity. Updates are
/// synchronous: velocities within a generation use the previous
/// generation's swarm best, and personal/swarm bests reduce in particle
/// index order after the generation's evaluations. Positions are clamped
/// to the bounds with the velocity zeroed on each clamped coordinate.
pub fn run_pso(problem: &Problem, config: &PsoConfig, start: &[f64]) -> Result<RunResult> {
    config.validate()?;
    if problem.budget() == 0 {
        return Err(Error::Config("budget must be >= 1".into()));
    }
    if start.len() != problem.dimension() {
        return Err(Error::DimensionMismatch {
            expected: problem.dimension(),
            got: start.len(),
        });
    }
    let n = problem.dimension();
    let bounds = problem.bounds();
    let pop = config.population;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut ev = Evaluator::new(problem);

    let mut positions: Vec<Vec<f64>> = Vec::with_capacity(pop);
    positions.push(problem.clamp(start));
    for _ in 1..pop {
        let p: Vec<f64> = (0..n)
            .map(|i| bounds.lower()[i] + rng.random_range(0.0..1.0) * bounds.range(i))
            .collect();
        positions.push(p);
    }
    let mut velocities = vec![vec![0.0; n]; pop];

    // First generation: evaluate the initial population in index order.
    let mut pbest = positions.clone();
    let mut pbest_val = vec![f64::INFINITY; pop];
    for (k, pos) in positions.iter().enumerate() {
        match ev.evaluate(pos) {
            Ok(f) => pbest_val[k] = f,
            Err(Error::BudgetExhausted) => return Ok(ev.into_result(Some(config.seed))),
            Err(e) => return Err(e),
        }
    }
    let mut gbest_idx = argmin(&pbest_val);
    let mut gbest = pbest[gbest_idx].clone();
    let mut gbest_val = pbest_val[gbest_idx];

    loop {
        let frozen_gbest = gbest.clone();
        let mut evaluated = vec![f64::INFINITY; pop];
        let mut done = false;
        for k in 0..pop {
            // One r1, r2 draw per particle per generation, as in the
            // scalar update formula.
            let r1: f64 = rng.random_range(0.0..1.0);
            let r2: f64 = rng.random_range(0.0..1.0);
            for i in 0..n {
                let vmax = VELOCITY_CLAMP_FRACTION * bounds.range(i);
                let v = config.inertia * velocities[k][i]
                    + config.cognitive * r1 * (pbest[k][i] - positions[k][i])
                    + config.social * r2 * (frozen_gbest[i] - positions[k][i]);
                velocities[k][i] = v.clamp(-vmax, vmax);
            }
            for i in 0..n {
                let raw = positions[k][i] + velocities[k][i];
                let clamped = raw.clamp(bounds.lower()[i], bounds.upper()[i]);
                if clamped != raw {
                    velocities[k][i] = 0.0;
                }
                positions[k][i] = clamped;
            }
            match ev.evaluate(&positions[k]) {
                Ok(f) => evaluated[k] = f,
                Err(Error::BudgetExhausted) => {
                    done = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        // Reduce in particle index order.
        for k in 0..pop {
            if evaluated[k] < pbest_val[k] {
                pbest_val[k] = evaluated[k];
                pbest[k] = positions[k].clone();
            }
        }
        gbest_idx = argmin(&pbest_val);
        if pbest_val[gbest_idx] < gbest_val {
            gbest_val = pbest_val[gbest_idx];
            gbest = pbest[gbest_idx].clone();
        }
        if done || ev.exhausted() {
            break;
        }
    }
    Ok(ev.into_result(Some(config.seed)))
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::sphere_problem;
    use crate::problem::{Bounds, Sense};

    #[test]
    fn zero_weights_freeze_the_swarm() {
        let p = Problem::new(
            Bounds::uniform(2, -1.0, 1.0).unwrap(),
            |x| x[0] * x[0] + x[1] * x[1],
            Sense::Minimize,
            60,
        );
        let config = PsoConfig {
            population: 10,
            inertia: 0.0,
            cognitive: 0.0,
            social: 0.0,
            seed: 3,
        };
        let r = run_pso(&p, &config, &[0.9, 0.9]).unwrap();
        // Every generation re-evaluates the same frozen positions, so the
        // best equals the best of the initial population.
        let initial_best = r.trace.records()[..10]
            .iter()
            .map(|rec| rec.value)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(r.best_value, initial_best);
    }

    #[test]
    fn sphere_median_over_ten_seeds() {
        let mut finals = Vec::new();
        for seed in 0..10u64 {
            let p = sphere_problem(3, 1000).unwrap();
            let config = PsoConfig::default().with_seed(seed);
            let r = run_pso(&p, &config, &[4.0, -4.0, 4.0]).unwrap();
            finals.push(r.best_value);
        }
        finals.sort_by(|a, b| a.total_cmp(b));
        let median = 0.5 * (finals[4] + finals[5]);
        assert!(median <= 1e-2, "median {median}");
    }

    #[test]
    fn identical_seeds_identical_traces() {
        let p = sphere_problem(2, 300).unwrap();
        let config = PsoConfig::default().with_seed(42);
        let a = run_pso(&p, &config, &[1.0, 1.0]).unwrap();
        let b = run_pso(&p, &config, &[1.0, 1.0]).unwrap();
        for (ra, rb) in a.trace.records().iter().zip(b.trace.records()) {
            assert_eq!(ra.point, rb.point);
            assert_eq!(ra.value.to_bits(), rb.value.to_bits());
        }
    }

    #[test]
    fn budget_smaller_than_population_still_respected() {
        let p = sphere_problem(2, 10).unwrap();
        let r = run_pso(&p, &PsoConfig::default().with_seed(1), &[1.0, 1.0]).unwrap();
        assert_eq!(r.evals_used, 10);
    }

    #[test]
    fn all_points_inside_bounds() {
        let p = sphere_problem(2, 500).unwrap();
        let r = run_pso(&p, &PsoConfig::default().with_seed(9), &[5.0, -5.0]).unwrap();
        for rec in r.trace.records() {
            assert!(rec.point.iter().all(|&v| (-5.0..=5.0).contains(&v)));
        }
    }
}
