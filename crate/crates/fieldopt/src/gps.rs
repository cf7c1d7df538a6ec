//! Generalized pattern search: deterministic opportunistic polling over the
//! `2n` coordinate directions with step expansion on success and
//! contraction on a full poll failure.

use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::trace::{Evaluator, RunResult};

/// Step-control parameters; step sizes are fractions of each coordinate
/// range.
#[derive(Debug, Clone)]
pub struct GpsConfig {
    pub expansion: f64,
    pub contraction: f64,
    /// Initial step as a fraction of each bound range.
    pub initial_step: f64,
    /// Termination threshold as a fraction of each bound range.
    pub min_step: f64,
}

impl Default for GpsConfig {
    fn default() -> Self {
        Self {
            expansion: 2.0,
            contraction: 0.5,
            initial_step: 0.25,
            min_step: 1e-8,
        }
    }
}

impl GpsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.expansion > 1.0 && self.contraction > 0.0 && self.contraction < 1.0) {
            return Err(Error::ConfigInconsistent(format!(
                "require expansion > 1 > contraction > 0, got {} and {}",
                self.expansion, self.contraction
            )));
        }
        if !(self.initial_step > 0.0 && self.min_step > 0.0) {
            return Err(Error::ConfigInconsistent(
                "step fractions must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// The fixed poll order: `+e_1, -e_1, +e_2, ..., -e_n`.
pub fn poll_directions(dim: usize) -> Vec<(usize, f64)> {
    (0..dim).flat_map(|i| [(i, 1.0), (i, -1.0)]).collect()
}

/// Runs pattern search from `start` (clamped into bounds).
///
/// Polling is opportunistic: the first strictly improving candidate
/// recenters the pattern and doubles the steps; a full failed poll halves
/// them. Terminates when every step falls below `min_step` of its range,
/// or on budget exhaustion.
pub fn run_gps(problem: &Problem, config: &GpsConfig, start: &[f64]) -> Result<RunResult> {
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
    let ranges: Vec<f64> = (0..n).map(|i| bounds.range(i)).collect();
    let mut ev = Evaluator::new(problem);

    let mut x = problem.clamp(start);
    let mut fx = match ev.evaluate(&x) {
        Ok(f) => f,
        Err(Error::BudgetExhausted) => return Ok(ev.into_result(None)),
        Err(e) => return Err(e),
    };
    let mut step: Vec<f64> = ranges.iter().map(|r| config.initial_step * r).collect();
    let directions = poll_directions(n);

    'outer: loop {
        let mut improved = false;
        for &(i, sign) in &directions {
            let mut cand = x.clone();
            cand[i] = (cand[i] + sign * step[i]).clamp(bounds.lower()[i], bounds.upper()[i]);
            if cand[i] == x[i] {
                continue; // clamped onto the center, nothing to try
            }
            match ev.evaluate(&cand) {
                Ok(f) => {
                    if f < fx {
                        x = cand;
                        fx = f;
                        improved = true;
                        break;
                    }
                }
                Err(Error::BudgetExhausted) => break 'outer,
                Err(e) => return Err(e),
            }
        }
        if improved {
            for (s, r) in step.iter_mut().zip(&ranges) {
                *s = (*s * config.expansion).min(*r);
            }
        } else {
            for s in step.iter_mut() {
                *s *= config.contraction;
            }
            let all_below = step
                .iter()
                .zip(&ranges)
                .all(|(s, r)| *s < config.min_step * r);
            if all_below {
                break;
            }
        }
    }
    Ok(ev.into_result(None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{camel_problem, six_hump_camel};
    use crate::problem::{Bounds, Sense};

    #[test]
    fn poll_set_is_two_n_directions() {
        let dirs = poll_directions(2);
        assert_eq!(dirs, vec![(0, 1.0), (0, -1.0), (1, 1.0), (1, -1.0)]);
    }

    #[test]
    fn converges_on_convex_quadratic() {
        let p = Problem::new(
            Bounds::uniform(3, -4.0, 4.0).unwrap(),
            |x| {
                (x[0] - 0.3) * (x[0] - 0.3)
                    + 2.0 * (x[1] + 1.2) * (x[1] + 1.2)
                    + 0.5 * (x[2] - 2.0) * (x[2] - 2.0)
            },
            Sense::Minimize,
            20_000,
        );
        let r = run_gps(&p, &GpsConfig::default(), &[0.0, 0.0, 0.0]).unwrap();
        for (b, t) in r.best_point.iter().zip(&[0.3, -1.2, 2.0]) {
            assert!((b - t).abs() <= 1e-6, "best {:?}", r.best_point);
        }
    }

    #[test]
    fn camel_from_origin_reaches_a_deep_minimum() {
        let p = camel_problem(600);
        let r = run_gps(&p, &GpsConfig::default(), &[0.0, 0.0]).unwrap();
        assert!(r.best_value <= -1.02, "best {}", r.best_value);
        assert!((six_hump_camel(&r.best_point) - r.best_value).abs() < 1e-12);
    }

    #[test]
    fn deterministic_and_budget_bounded() {
        let p = camel_problem(143);
        let a = run_gps(&p, &GpsConfig::default(), &[1.0, 1.0]).unwrap();
        let b = run_gps(&p, &GpsConfig::default(), &[1.0, 1.0]).unwrap();
        assert_eq!(a.trace.records().len(), b.trace.records().len());
        for (ra, rb) in a.trace.records().iter().zip(b.trace.records()) {
            assert_eq!(ra.point, rb.point);
        }
        assert!(a.evals_used <= 143);
    }

    #[test]
    fn respects_bounds_at_every_point() {
        let p = camel_problem(200);
        let r = run_gps(&p, &GpsConfig::default(), &[2.9, 1.9]).unwrap();
        for rec in r.trace.records() {
            assert!(rec.point[0] >= -3.0 && rec.point[0] <= 3.0);
            assert!(rec.point[1] >= -2.0 && rec.point[1] <= 2.0);
        }
    }
}
