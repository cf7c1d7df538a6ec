//! Budgeted objective evaluation with full tracing.
//!
//! Every optimizer funnels its objective calls through an [`Evaluator`],
//! which enforces the budget, applies integer rounding, checks bounds,
//! records a trace entry, and hands back a value in minimization sense
//! (maximization problems are negated here, so optimizers never branch on
//! the sense).

use crate::error::{Error, Result};
use crate::problem::{Problem, Sense};

/// One objective evaluation: 1-based index, the point the objective saw
/// (after rounding), its value in the problem's own sense, and the running
/// best in that sense.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub eval_index: usize,
    pub point: Vec<f64>,
    pub value: f64,
    pub best_so_far: f64,
}

/// Ordered record of all evaluations of one optimizer run.
///
/// `best_so_far` is monotone in the problem's sense: nondecreasing for
/// maximization, nonincreasing for minimization.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvaluationTrace {
    records: Vec<TraceRecord>,
}

impl EvaluationTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn final_best(&self) -> Option<f64> {
        self.records.last().map(|r| r.best_so_far)
    }

    pub(crate) fn push(&mut self, point: Vec<f64>, value: f64, sense: Sense) {
        let best_so_far = match (self.final_best(), sense) {
            (None, _) => value,
            (Some(b), Sense::Maximize) => b.max(value),
            (Some(b), Sense::Minimize) => b.min(value),
        };
        self.records.push(TraceRecord {
            eval_index: self.records.len() + 1,
            point,
            value,
            best_so_far,
        });
    }

    /// Best value seen within the first `k` evaluations (`k` is clamped to
    /// the trace length). Used for limited-budget snapshots.
    pub fn best_at_budget(&self, k: usize) -> Result<f64> {
        if self.records.is_empty() {
            return Err(Error::EmptyTrace);
        }
        if k == 0 {
            return Err(Error::EmptyInput);
        }
        let idx = k.min(self.records.len()) - 1;
        Ok(self.records[idx].best_so_far)
    }
}

/// Outcome of one optimizer run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub best_point: Vec<f64>,
    /// Best objective value in the problem's own sense; equals the trace's
    /// final `best_so_far`.
    pub best_value: f64,
    pub trace: EvaluationTrace,
    pub evals_used: usize,
    pub seed: Option<u64>,
}

/// Budget-enforcing evaluation frontend owned by a single optimizer run.
pub struct Evaluator<'p> {
    problem: &'p Problem,
    trace: EvaluationTrace,
    best_internal: f64,
    best_point: Vec<f64>,
}

impl<'p> Evaluator<'p> {
    pub fn new(problem: &'p Problem) -> Self {
        Self {
            problem,
            trace: EvaluationTrace::new(),
            best_internal: f64::INFINITY,
            best_point: Vec::new(),
        }
    }

    pub fn problem(&self) -> &'p Problem {
        self.problem
    }

    pub fn used(&self) -> usize {
        self.trace.len()
    }

    pub fn remaining(&self) -> usize {
        self.problem.budget().saturating_sub(self.used())
    }

    pub fn exhausted(&self) -> bool {
        self.remaining() == 0
    }

    /// Best value so far in minimization sense (`+inf` before any call).
    pub fn best_internal(&self) -> f64 {
        self.best_internal
    }

    pub fn best_point(&self) -> Option<&[f64]> {
        if self.best_point.is_empty() {
            None
        } else {
            Some(&self.best_point)
        }
    }

    pub fn trace(&self) -> &EvaluationTrace {
        &self.trace
    }

    /// Evaluates the objective at `point` and returns the value in
    /// minimization sense.
    ///
    /// Rounds integer-masked coordinates first, then checks bounds (errors
    /// on violations beyond the tolerance), then counts the call against the
    /// budget and appends a trace record.
    pub fn evaluate(&mut self, point: &[f64]) -> Result<f64> {
        if self.used() >= self.problem.budget() {
            return Err(Error::BudgetExhausted);
        }
        let rounded = self.problem.round(point);
        let checked = self.problem.bounds().check(&rounded)?;
        let raw = self.problem.call_objective(&checked);
        self.trace.push(checked.clone(), raw, self.problem.sense());
        let internal = match self.problem.sense() {
            Sense::Minimize => raw,
            Sense::Maximize => -raw,
        };
        if internal < self.best_internal {
            self.best_internal = internal;
            self.best_point = checked;
        }
        Ok(internal)
    }

    /// Finalizes the run. `best_value` is reported in the problem's sense.
    pub fn into_result(self, seed: Option<u64>) -> RunResult {
        let evals_used = self.trace.len();
        let best_value = self.trace.final_best().unwrap_or(f64::NAN);
        RunResult {
            best_point: self.best_point,
            best_value,
            trace: self.trace,
            evals_used,
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Bounds;

    fn max_problem(budget: usize) -> Problem {
        // f(x) = -x^2, maximized at 0.
        Problem::new(
            Bounds::uniform(1, -1.0, 1.0).unwrap(),
            |x| -x[0] * x[0],
            Sense::Maximize,
            budget,
        )
    }

    #[test]
    fn maximize_stores_external_best() {
        let p = max_problem(3);
        let mut ev = Evaluator::new(&p);
        let internal = ev.evaluate(&[0.0]).unwrap();
        assert_eq!(internal, 0.0);
        assert_eq!(ev.trace().records()[0].best_so_far, 0.0);
        ev.evaluate(&[0.5]).unwrap();
        // best_so_far stays at the maximum 0.0 even though -0.25 came later
        assert_eq!(ev.trace().final_best(), Some(0.0));
    }

    #[test]
    fn integer_mask_applied_before_objective() {
        let p = Problem::new(
            Bounds::uniform(2, 0.0, 10.0).unwrap(),
            |x| {
                assert_eq!(x, &[3.0, 8.0]);
                0.0
            },
            Sense::Minimize,
            1,
        )
        .with_integer_mask(vec![true, true])
        .unwrap();
        let mut ev = Evaluator::new(&p);
        ev.evaluate(&[3.4, 7.6]).unwrap();
        assert_eq!(ev.trace().records()[0].point, vec![3.0, 8.0]);
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let p = max_problem(1);
        let mut ev = Evaluator::new(&p);
        ev.evaluate(&[0.1]).unwrap();
        assert!(matches!(ev.evaluate(&[0.2]), Err(Error::BudgetExhausted)));
        assert_eq!(ev.used(), 1);
    }

    #[test]
    fn best_at_budget_clamps_and_errors() {
        let p = max_problem(4);
        let mut ev = Evaluator::new(&p);
        for x in [-1.0, 0.5, 0.5, 0.0] {
            ev.evaluate(&[x]).unwrap();
        }
        let trace = ev.into_result(None).trace;
        // external values: -1, -0.25, -0.25, 0 -> best prefix: -1, -0.25, -0.25, 0
        assert_eq!(trace.best_at_budget(2).unwrap(), -0.25);
        assert_eq!(trace.best_at_budget(100).unwrap(), 0.0);
        assert_eq!(trace.best_at_budget(1).unwrap(), -1.0);
        assert!(matches!(
            EvaluationTrace::new().best_at_budget(1),
            Err(Error::EmptyTrace)
        ));
    }

    #[test]
    fn empty_run_result_is_nan() {
        let p = max_problem(1);
        let ev = Evaluator::new(&p);
        let r = ev.into_result(None);
        assert!(r.best_value.is_nan());
        assert_eq!(r.evals_used, 0);
    }
}
