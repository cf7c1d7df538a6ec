//! Declarative experiment runner: JSON configs, multi-trial execution with
//! optional parallelism, and CSV artifacts (per-trial traces, summary
//! statistics, limited-budget snapshots, and beanplot-ready finals).

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::algorithms::{run_algorithm, AlgorithmId, AlgorithmSelector};
use crate::bench;
use crate::error::{Error, Result};
use crate::joint::{run_sequential, SequentialPlan};
use crate::problem::Problem;
use crate::scenario::{make_problem, ScenarioFile, ScenarioKind};
use crate::stats::{aggregate_trials, stats_of_values, TrialStatistics};
use crate::trace::RunResult;

/// Fraction of the evaluations used for the limited-budget snapshot.
pub const SNAPSHOT_FRACTION: f64 = 0.15;

pub const SUMMARY_HEADER: &str = "algorithm,trials,Max,Min,Mean,Median,Std";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioChoice {
    Benchmark,
    Placement,
    Control,
    JointSimultaneous,
    JointSequential,
}

/// On-disk experiment description (one flat JSON document).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioChoice,
    /// Benchmark function name (`camel`, `sphere`, `rastrigin`).
    #[serde(default)]
    pub function: Option<String>,
    /// Dimension for the dimension-generic benchmark functions.
    #[serde(default)]
    pub dimension: Option<usize>,
    /// Scenario file path for the reservoir scenarios, relative to the
    /// config file.
    #[serde(default)]
    pub model: Option<PathBuf>,
    /// Algorithm id, or an `Algorithm1-Algorithm2` pair for the
    /// sequential procedure.
    pub algorithm: String,
    pub budget: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// One seed per trial for stochastic algorithms.
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub placement_stage_budget: Option<usize>,
    #[serde(default)]
    pub control_stage_budget: Option<usize>,
    /// Output directory (overridable on the command line).
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_trials() -> usize {
    1
}

/// Loads a config and remembers its directory for relative paths.
pub fn load_config(path: &Path) -> Result<(ExperimentConfig, PathBuf)> {
    let text = fs::read_to_string(path)?;
    let config: ExperimentConfig = serde_json::from_str(&text).map_err(|e| {
        Error::Config(format!(
            "{}:{}:{}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    let base = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((config, base))
}

enum Task {
    /// One optimizer per trial over a ready-made problem.
    Single {
        id: AlgorithmId,
        problem: Problem,
        start: Vec<f64>,
    },
    /// A sequential placement/control run per trial.
    Sequential {
        scenario: Box<ScenarioFile>,
        placement: AlgorithmId,
        control: AlgorithmId,
        placement_budget: usize,
        control_budget: usize,
        total_budget: usize,
    },
}

/// A validated, fully resolved experiment.
pub struct Experiment {
    pub algorithm_label: String,
    pub trials: usize,
    seeds: Vec<Option<u64>>,
    task: Task,
}

fn load_scenario(config: &ExperimentConfig, base: &Path) -> Result<ScenarioFile> {
    let rel = config.model.as_ref().ok_or_else(|| {
        Error::Config("field 'model' is required for reservoir scenarios".into())
    })?;
    let path = if rel.is_absolute() {
        rel.clone()
    } else {
        base.join(rel)
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::Config(format!("cannot read model {}: {e}", path.display())))?;
    let scenario: ScenarioFile = serde_json::from_str(&text).map_err(|e| {
        Error::Config(format!(
            "{}:{}:{}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    scenario.validate()?;
    Ok(scenario)
}

fn benchmark_problem(config: &ExperimentConfig) -> Result<Problem> {
    let name = config.function.as_deref().ok_or_else(|| {
        Error::Config("field 'function' is required for benchmark scenarios".into())
    })?;
    match name {
        "camel" => Ok(bench::camel_problem(config.budget)),
        "sphere" => {
            let dim = config
                .dimension
                .ok_or_else(|| Error::Config("sphere needs 'dimension'".into()))?;
            bench::sphere_problem(dim, config.budget)
        }
        "rastrigin" => {
            let dim = config
                .dimension
                .ok_or_else(|| Error::Config("rastrigin needs 'dimension'".into()))?;
            bench::rastrigin_problem(dim, config.budget)
        }
        other => Err(Error::Config(format!("unknown benchmark function '{other}'"))),
    }
}

/// Validates a config and resolves every referenced file.
pub fn resolve(config: &ExperimentConfig, base: &Path) -> Result<Experiment> {
    if config.budget == 0 {
        return Err(Error::Config("budget must be >= 1".into()));
    }
    if config.trials == 0 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    let selector = AlgorithmSelector::from_str(&config.algorithm)?;
    let deterministic = selector.is_deterministic();
    if deterministic {
        if config.trials != 1 {
            return Err(Error::Config(format!(
                "algorithm '{selector}' is deterministic: trials must be 1, got {}",
                config.trials
            )));
        }
        if !config.seeds.is_empty() {
            return Err(Error::Config(
                "deterministic algorithms take no seeds".into(),
            ));
        }
    } else if config.seeds.len() != config.trials {
        return Err(Error::Config(format!(
            "stochastic algorithms need one seed per trial: {} trials vs {} seeds",
            config.trials,
            config.seeds.len()
        )));
    }

    let task = match (config.scenario, selector) {
        (ScenarioChoice::JointSequential, AlgorithmSelector::Pair(a, b)) => {
            let placement_budget = config.placement_stage_budget.ok_or_else(|| {
                Error::Config("joint-sequential needs 'placement_stage_budget'".into())
            })?;
            let control_budget = config.control_stage_budget.ok_or_else(|| {
                Error::Config("joint-sequential needs 'control_stage_budget'".into())
            })?;
            let scenario = load_scenario(config, base)?;
            let plan = SequentialPlan {
                placement_algorithm: a,
                control_algorithm: b,
                placement_stage_budget: placement_budget,
                control_stage_budget: control_budget,
                total_budget: config.budget,
                master_seed: 0,
            };
            plan.validate()?;
            Task::Sequential {
                scenario: Box::new(scenario),
                placement: a,
                control: b,
                placement_budget,
                control_budget,
                total_budget: config.budget,
            }
        }
        (ScenarioChoice::JointSequential, AlgorithmSelector::Single(_)) => {
            return Err(Error::Config(
                "joint-sequential needs an Algorithm1-Algorithm2 pair".into(),
            ))
        }
        (_, AlgorithmSelector::Pair(..)) => {
            return Err(Error::Config(
                "algorithm pairs are only valid for joint-sequential".into(),
            ))
        }
        (choice, AlgorithmSelector::Single(id)) => {
            let (problem, start) = match choice {
                ScenarioChoice::Benchmark => {
                    let p = benchmark_problem(config)?;
                    let s = p.bounds().midpoint();
                    (p, s)
                }
                ScenarioChoice::JointSequential => unreachable!("handled above"),
                _ => {
                    let scenario = load_scenario(config, base)?;
                    let kind = match choice {
                        ScenarioChoice::Placement => ScenarioKind::Placement,
                        ScenarioChoice::Control => ScenarioKind::Control,
                        _ => ScenarioKind::Joint,
                    };
                    let sp = make_problem(&scenario, kind, config.budget)?;
                    let s = sp.initial_point();
                    (sp.problem, s)
                }
            };
            Task::Single { id, problem, start }
        }
    };

    let seeds: Vec<Option<u64>> = if deterministic {
        vec![None; config.trials]
    } else {
        config.seeds.iter().map(|&s| Some(s)).collect()
    };

    Ok(Experiment {
        algorithm_label: selector.to_string(),
        trials: config.trials,
        seeds,
        task,
    })
}

impl Experiment {
    fn run_trial(&self, trial: usize) -> Result<RunResult> {
        let seed = self.seeds[trial];
        match &self.task {
            Task::Single { id, problem, start } => run_algorithm(*id, problem, start, seed),
            Task::Sequential {
                scenario,
                placement,
                control,
                placement_budget,
                control_budget,
                total_budget,
            } => {
                let plan = SequentialPlan {
                    placement_algorithm: *placement,
                    control_algorithm: *control,
                    placement_stage_budget: *placement_budget,
                    control_stage_budget: *control_budget,
                    total_budget: *total_budget,
                    master_seed: seed.unwrap_or(0),
                };
                run_sequential(scenario, &plan).map(|out| out.result)
            }
        }
    }
}

/// Everything an experiment produced.
pub struct ExperimentOutput {
    pub dir: PathBuf,
    pub results: Vec<RunResult>,
    pub stats: TrialStatistics,
}

fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, content)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn trace_csv(result: &RunResult) -> String {
    let mut out = String::from("eval_index,value,best_so_far\n");
    for rec in result.trace.records() {
        out.push_str(&format!(
            "{},{},{}\n",
            rec.eval_index, rec.value, rec.best_so_far
        ));
    }
    out
}

fn seed_label(seed: Option<u64>) -> String {
    seed.map(|s| s.to_string()).unwrap_or_default()
}

/// Runs all trials (up to `jobs` concurrently) and writes the artifact set
/// into `out_dir`: `trial_XXX.csv` traces, `summary.csv`,
/// `budget_snapshots.csv`, and `beanplot.csv`. Partially written artifacts
/// are removed on failure.
pub fn run(experiment: &Experiment, out_dir: &Path, jobs: usize) -> Result<ExperimentOutput> {
    fs::create_dir_all(out_dir)?;
    let written: Mutex<Vec<PathBuf>> = Mutex::new(Vec::new());
    let outcome = run_inner(experiment, out_dir, jobs, &written);
    if outcome.is_err() {
        for path in written.into_inner().unwrap() {
            let _ = fs::remove_file(path);
        }
    }
    outcome
}

fn run_inner(
    experiment: &Experiment,
    out_dir: &Path,
    jobs: usize,
    written: &Mutex<Vec<PathBuf>>,
) -> Result<ExperimentOutput> {
    let trials = experiment.trials;
    let jobs = jobs.max(1).min(trials);
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<RunResult>>>> =
        (0..trials).map(|_| Mutex::new(None)).collect();

    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let t = next.fetch_add(1, Ordering::SeqCst);
                if t >= trials {
                    break;
                }
                let result = experiment.run_trial(t);
                *slots[t].lock().unwrap() = Some(result);
            });
        }
    });

    let mut results = Vec::with_capacity(trials);
    for slot in slots {
        results.push(slot.into_inner().unwrap().expect("trial executed")?);
    }

    let track = |p: PathBuf| written.lock().unwrap().push(p);
    for (t, result) in results.iter().enumerate() {
        let path = out_dir.join(format!("trial_{:03}.csv", t + 1));
        write_atomic(&path, &trace_csv(result))?;
        track(path);
    }

    let stats = aggregate_trials(&results)?;
    let summary = format!(
        "{SUMMARY_HEADER}\n{},{},{},{},{},{},{}\n",
        experiment.algorithm_label,
        stats.trials,
        stats.max,
        stats.min,
        stats.mean,
        stats.median,
        stats.std
    );
    let path = out_dir.join("summary.csv");
    write_atomic(&path, &summary)?;
    track(path);

    let mut snapshots = String::from("trial,seed,evals_at_15pct,best_at_15pct\n");
    for (t, result) in results.iter().enumerate() {
        let k = ((SNAPSHOT_FRACTION * result.evals_used as f64).floor() as usize).max(1);
        let best = result.trace.best_at_budget(k)?;
        snapshots.push_str(&format!(
            "{},{},{},{}\n",
            t + 1,
            seed_label(result.seed),
            k,
            best
        ));
    }
    let path = out_dir.join("budget_snapshots.csv");
    write_atomic(&path, &snapshots)?;
    track(path);

    let mut beanplot = String::from("trial,seed,final_best\n");
    for (t, result) in results.iter().enumerate() {
        beanplot.push_str(&format!(
            "{},{},{}\n",
            t + 1,
            seed_label(result.seed),
            result.best_value
        ));
    }
    let path = out_dir.join("beanplot.csv");
    write_atomic(&path, &beanplot)?;
    track(path);

    Ok(ExperimentOutput {
        dir: out_dir.to_path_buf(),
        results,
        stats,
    })
}

/// Convenience wrapper: load, resolve, run.
pub fn run_experiment(config_path: &Path, out_override: Option<&Path>, jobs: usize) -> Result<ExperimentOutput> {
    let (config, base) = load_config(config_path)?;
    let experiment = resolve(&config, &base)?;
    let out_dir = match out_override {
        Some(p) => p.to_path_buf(),
        None => {
            let rel = config.output.clone().ok_or_else(|| {
                Error::Config("no output directory: set 'output' or pass --out".into())
            })?;
            if rel.is_absolute() {
                rel
            } else {
                base.join(rel)
            }
        }
    };
    run(&experiment, &out_dir, jobs)
}

#[derive(Debug, Clone, PartialEq)]
struct SummaryRow {
    algorithm: String,
    trials: usize,
    stats: [f64; 5],
}

fn read_summary(dir: &Path) -> Result<SummaryRow> {
    let path = dir.join("summary.csv");
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::SchemaMismatch(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::SchemaMismatch(format!("{}: empty file", path.display())))?;
    if header != SUMMARY_HEADER {
        return Err(Error::SchemaMismatch(format!(
            "{}: header '{header}' does not match '{SUMMARY_HEADER}'",
            path.display()
        )));
    }
    let row = lines
        .next()
        .ok_or_else(|| Error::SchemaMismatch(format!("{}: missing data row", path.display())))?;
    let fields: Vec<&str> = row.split(',').collect();
    if fields.len() != 7 {
        return Err(Error::SchemaMismatch(format!(
            "{}: expected 7 fields, got {}",
            path.display(),
            fields.len()
        )));
    }
    let parse = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|e| Error::SchemaMismatch(format!("{}: bad number '{s}': {e}", path.display())))
    };
    Ok(SummaryRow {
        algorithm: fields[0].to_string(),
        trials: fields[1]
            .parse()
            .map_err(|e| Error::SchemaMismatch(format!("{}: bad trials: {e}", path.display())))?,
        stats: [
            parse(fields[2])?,
            parse(fields[3])?,
            parse(fields[4])?,
            parse(fields[5])?,
            parse(fields[6])?,
        ],
    })
}

/// Combines the summaries of several experiment directories into one
/// comparison table, sorted by median descending (ties break on the
/// algorithm id).
pub fn compare(dirs: &[PathBuf], out_path: &Path) -> Result<()> {
    if dirs.len() < 2 {
        return Err(Error::Config("compare needs at least two experiment directories".into()));
    }
    let mut rows = Vec::with_capacity(dirs.len());
    for dir in dirs {
        rows.push(read_summary(dir)?);
    }
    rows.sort_by(|a, b| {
        b.stats[3]
            .total_cmp(&a.stats[3])
            .then_with(|| a.algorithm.cmp(&b.algorithm))
    });
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.algorithm, r.trials, r.stats[0], r.stats[1], r.stats[2], r.stats[3], r.stats[4]
        ));
    }
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    write_atomic(out_path, &out)?;
    Ok(())
}

/// Re-derives summary statistics from the final column of the trial
/// traces; used to cross-check the written summary.
pub fn stats_from_traces(results: &[RunResult]) -> Result<TrialStatistics> {
    let finals: Vec<f64> = results
        .iter()
        .map(|r| r.trace.final_best().ok_or(Error::EmptyTrace))
        .collect::<Result<_>>()?;
    stats_of_values(&finals)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn camel_config(algorithm: &str, trials: usize, seeds: Vec<u64>) -> ExperimentConfig {
        ExperimentConfig {
            scenario: ScenarioChoice::Benchmark,
            function: Some("camel".into()),
            dimension: None,
            model: None,
            algorithm: algorithm.into(),
            budget: 120,
            trials,
            seeds,
            placement_stage_budget: None,
            control_stage_budget: None,
            output: None,
        }
    }

    #[test]
    fn deterministic_configs_force_single_trial() {
        let bad = camel_config("mcs-1", 3, vec![]);
        assert!(matches!(resolve(&bad, Path::new(".")), Err(Error::Config(_))));
        let good = camel_config("mcs-1", 1, vec![]);
        assert!(resolve(&good, Path::new(".")).is_ok());
    }

    #[test]
    fn stochastic_configs_need_matching_seeds() {
        let bad = camel_config("pso", 3, vec![1, 2]);
        assert!(matches!(resolve(&bad, Path::new(".")), Err(Error::Config(_))));
        let good = camel_config("pso", 3, vec![1, 2, 3]);
        assert!(resolve(&good, Path::new(".")).is_ok());
    }

    #[test]
    fn pair_only_for_sequential() {
        let bad = camel_config("mcs-1-gps", 1, vec![]);
        assert!(matches!(resolve(&bad, Path::new(".")), Err(Error::Config(_))));
    }

    #[test]
    fn run_writes_all_artifacts_and_matches_stats() {
        let dir = std::env::temp_dir().join(format!("fieldopt_exp_{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        let config = camel_config("pso", 3, vec![1, 2, 3]);
        let experiment = resolve(&config, Path::new(".")).unwrap();
        let out = run(&experiment, &dir, 2).unwrap();
        for name in [
            "trial_001.csv",
            "trial_002.csv",
            "trial_003.csv",
            "summary.csv",
            "budget_snapshots.csv",
            "beanplot.csv",
        ] {
            assert!(dir.join(name).exists(), "{name} missing");
        }
        let derived = stats_from_traces(&out.results).unwrap();
        assert_eq!(out.stats, derived);
        let summary = fs::read_to_string(dir.join("summary.csv")).unwrap();
        assert!(summary.starts_with(SUMMARY_HEADER));
        assert!(summary.contains("pso,3,"));
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let base = std::env::temp_dir().join(format!("fieldopt_rr_{}", std::process::id()));
        let (dir_a, dir_b) = (base.join("a"), base.join("b"));
        let _ = fs::remove_dir_all(&base);
        let config = camel_config("pso", 2, vec![5, 6]);
        let experiment = resolve(&config, Path::new(".")).unwrap();
        run(&experiment, &dir_a, 1).unwrap();
        run(&experiment, &dir_b, 2).unwrap();
        for name in ["trial_001.csv", "trial_002.csv", "summary.csv", "beanplot.csv"] {
            let a = fs::read(dir_a.join(name)).unwrap();
            let b = fs::read(dir_b.join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between reruns");
        }
        let _ = fs::remove_dir_all(&base);
    }

    #[test]
    fn compare_sorts_by_median_descending() {
        let base = std::env::temp_dir().join(format!("fieldopt_cmp_{}", std::process::id()));
        let _ = fs::remove_dir_all(&base);
        fs::create_dir_all(base.join("x")).unwrap();
        fs::create_dir_all(base.join("y")).unwrap();
        fs::write(
            base.join("x/summary.csv"),
            format!("{SUMMARY_HEADER}\ngps,1,-1,-1,-1,-1,0\n"),
        )
        .unwrap();
        fs::write(
            base.join("y/summary.csv"),
            format!("{SUMMARY_HEADER}\nmcs-1,1,-0.5,-0.5,-0.5,-0.5,0\n"),
        )
        .unwrap();
        let out = base.join("comparison.csv");
        compare(&[base.join("x"), base.join("y")], &out).unwrap();
        let text = fs::read_to_string(&out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], SUMMARY_HEADER);
        assert!(lines[1].starts_with("mcs-1"), "{text}");
        assert!(lines[2].starts_with("gps"));
        let _ = fs::remove_dir_all(&base);
    }

    #[test]
    fn compare_rejects_schema_drift() {
        let base = std::env::temp_dir().join(format!("fieldopt_schema_{}", std::process::id()));
        let _ = fs::remove_dir_all(&base);
        fs::create_dir_all(base.join("x")).unwrap();
        fs::create_dir_all(base.join("y")).unwrap();
        fs::write(base.join("x/summary.csv"), "algorithm,Max\nmcs-1,1\n").unwrap();
        fs::write(
            base.join("y/summary.csv"),
            format!("{SUMMARY_HEADER}\nmcs-1,1,0,0,0,0,0\n"),
        )
        .unwrap();
        let out = base.join("comparison.csv");
        assert!(matches!(
            compare(&[base.join("x"), base.join("y")], &out),
            Err(Error::SchemaMismatch(_))
        ));
        let _ = fs::remove_dir_all(&base);
    }
}
