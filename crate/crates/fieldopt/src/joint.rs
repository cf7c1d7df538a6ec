//! Joint placement-and-control optimization: the simultaneous procedure
//! (one run over the concatenated variables) and the sequential procedure
//! (alternating placement-only and control-only stages with fixed budgets
//! and warm starts).

use std::sync::Arc;
use std::sync::Mutex;

use crate::algorithms::{run_algorithm, run_algorithm_warm, AlgorithmId};
use crate::error::{Error, Result};
use crate::problem::Sense;
use crate::scenario::{make_problem, make_problem_staged, ScenarioFile, ScenarioKind,
                      ScenarioProblem, StageContext};
use crate::trace::{EvaluationTrace, RunResult};

/// Budgets and algorithms of one sequential run.
#[derive(Debug, Clone)]
pub struct SequentialPlan {
    pub placement_algorithm: AlgorithmId,
    pub control_algorithm: AlgorithmId,
    pub placement_stage_budget: usize,
    pub control_stage_budget: usize,
    pub total_budget: usize,
    pub master_seed: u64,
}

impl SequentialPlan {
    pub fn validate(&self) -> Result<()> {
        if self.placement_stage_budget == 0 || self.control_stage_budget == 0 {
            return Err(Error::ConfigInconsistent(
                "stage budgets must be >= 1".into(),
            ));
        }
        if self.total_budget < self.placement_stage_budget + self.control_stage_budget {
            return Err(Error::ConfigInconsistent(
                "total budget must cover at least one full iteration".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageKind {
    Placement,
    Control,
}

/// Where one stage landed in the concatenated trace.
#[derive(Debug, Clone)]
pub struct StageSpan {
    pub kind: StageKind,
    /// Zero-based iteration this stage belongs to.
    pub iteration: usize,
    /// Half-open record range in the concatenated trace.
    pub trace_range: (usize, usize),
    pub evals: usize,
}

/// Result of a sequential run: the joint-space outcome plus the stage
/// structure.
#[derive(Debug, Clone)]
pub struct SequentialOutcome {
    pub result: RunResult,
    /// Completed placement+control iterations.
    pub iterations: usize,
    pub stages: Vec<StageSpan>,
}

/// Observer invoked with every decoded candidate of every stage.
pub type StageObserver = Arc<dyn Fn(StageKind, &[Vec<f64>], &[Vec<f64>]) + Send + Sync>;

/// One optimizer run over the full joint variable vector.
pub fn run_simultaneous(
    scenario: &ScenarioFile,
    algorithm: AlgorithmId,
    budget: usize,
    seed: Option<u64>,
) -> Result<RunResult> {
    let sp = make_problem(scenario, ScenarioKind::Joint, budget)?;
    run_algorithm(algorithm, &sp.problem, &sp.initial_point(), seed)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stage seeds derive from (master seed, iteration, stage tag) so whole
/// sequential runs reproduce under one seed.
fn stage_seed(master: u64, iteration: usize, kind: StageKind) -> u64 {
    let tag = match kind {
        StageKind::Placement => 0x70,
        StageKind::Control => 0xc0,
    };
    splitmix(master ^ splitmix((iteration as u64) << 8 | tag))
}

/// Runs the sequential procedure: placement and control stages alternate
/// under their fixed budgets until the total budget is spent. Controls are
/// initially the scenario defaults; each stage freezes the other side at
/// the incumbent and warm-starts from it, and the incumbent advances only
/// on strict improvement. The returned trace concatenates all stages in
/// joint coordinates with a globally monotone best.
pub fn run_sequential(scenario: &ScenarioFile, plan: &SequentialPlan) -> Result<SequentialOutcome> {
    run_sequential_observed(scenario, plan, None)
}

/// [`run_sequential`] with an observer for stage-isolation checks.
pub fn run_sequential_observed(
    scenario: &ScenarioFile,
    plan: &SequentialPlan,
    observer: Option<StageObserver>,
) -> Result<SequentialOutcome> {
    plan.validate()?;
    scenario.validate()?;
    // Joint-space packer for trace records and the final best point.
    let joint = make_problem(scenario, ScenarioKind::Joint, 1)?;

    let mut incumbent_placements: Vec<Vec<f64>> = scenario
        .wells
        .iter()
        .map(joint_initial_placement)
        .collect();
    let mut incumbent_controls: Vec<Vec<f64>> = scenario
        .wells
        .iter()
        .map(|w| vec![w.control_initial; scenario.control_periods])
        .collect();

    let mut best_value = f64::NEG_INFINITY;
    let mut trace = EvaluationTrace::new();
    let mut stages: Vec<StageSpan> = Vec::new();
    let mut remaining = plan.total_budget;
    let mut iterations = 0usize;

    'outer: loop {
        for kind in [StageKind::Placement, StageKind::Control] {
            if remaining == 0 {
                break 'outer;
            }
            let stage_budget = match kind {
                StageKind::Placement => plan.placement_stage_budget.min(remaining),
                StageKind::Control => plan.control_stage_budget.min(remaining),
            };
            let (stage_kind, algorithm) = match kind {
                StageKind::Placement => (ScenarioKind::Placement, plan.placement_algorithm),
                StageKind::Control => (ScenarioKind::Control, plan.control_algorithm),
            };
            let stage_ctx = StageContext {
                fixed_placements: Some(incumbent_placements.clone()),
                fixed_controls: Some(incumbent_controls.clone()),
                observer: observer.as_ref().map(|obs| {
                    let obs = Arc::clone(obs);
                    let k = kind;
                    Arc::new(move |p: &[Vec<f64>], c: &[Vec<f64>]| obs(k, p, c))
                        as crate::scenario::EvalObserver
                }),
            };
            let sp = make_problem_staged(scenario, stage_kind, stage_budget, stage_ctx)?;
            let x0 = sp.pack(&incumbent_placements, &incumbent_controls)?;
            let seed = stage_seed(plan.master_seed, iterations, kind);
            let stage_result = run_algorithm_warm(algorithm, &sp.problem, &x0, Some(seed))?;

            let start_len = trace.len();
            append_stage_trace(&mut trace, &joint, &sp, &stage_result)?;
            stages.push(StageSpan {
                kind,
                iteration: iterations,
                trace_range: (start_len, trace.len()),
                evals: stage_result.evals_used,
            });
            remaining = remaining.saturating_sub(stage_result.evals_used);

            if stage_result.evals_used > 0 && stage_result.best_value > best_value {
                best_value = stage_result.best_value;
                let (p, c) = sp.unpack(&stage_result.best_point)?;
                incumbent_placements = p;
                incumbent_controls = c;
            }
            if stage_result.evals_used == 0 {
                // A stage that cannot evaluate anything would loop forever.
                break 'outer;
            }
        }
        iterations += 1;
    }

    let best_point = joint.pack(&incumbent_placements, &incumbent_controls)?;
    let evals_used = trace.len();
    let result = RunResult {
        best_point,
        best_value,
        trace,
        evals_used,
        seed: Some(plan.master_seed),
    };
    Ok(SequentialOutcome {
        result,
        iterations,
        stages,
    })
}

fn joint_initial_placement(slot: &crate::scenario::WellSlot) -> Vec<f64> {
    match &slot.trajectory {
        None => vec![slot.x, slot.y],
        Some(t) => vec![
            slot.x,
            slot.y,
            t.z,
            t.length_m,
            t.azimuth_rad,
            t.inclination_rad,
        ],
    }
}

/// Re-expresses a stage trace in joint coordinates and appends it; the
/// running best recomputes globally across stage boundaries.
fn append_stage_trace(
    trace: &mut EvaluationTrace,
    joint: &ScenarioProblem,
    stage: &ScenarioProblem,
    stage_result: &RunResult,
) -> Result<()> {
    for rec in stage_result.trace.records() {
        let (p, c) = stage.unpack(&rec.point)?;
        let joint_point = joint.pack(&p, &c)?;
        trace.push(joint_point, rec.value, Sense::Maximize);
    }
    Ok(())
}

/// Observation log produced by [`recording_observer`].
pub type StageLog = Arc<Mutex<Vec<(StageKind, Vec<Vec<f64>>, Vec<Vec<f64>>)>>>;

/// Convenience used by tests: collected stage observations.
pub fn recording_observer() -> (StageObserver, StageLog) {
    let log: StageLog = Arc::new(Mutex::new(Vec::new()));
    let sink = Arc::clone(&log);
    let obs: StageObserver = Arc::new(move |kind, p, c| {
        sink.lock().unwrap().push((kind, p.to_vec(), c.to_vec()));
    });
    (obs, log)
}
