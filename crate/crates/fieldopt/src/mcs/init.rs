//! Initialization lists: the per-coordinate candidate values that seed the
//! first partition of the domain.

use crate::error::{Error, Result};
use crate::mcs::McsConfig;
use crate::problem::Problem;
use crate::trace::Evaluator;

/// Margin (as a fraction of the interval width) used when clamping a user
/// guess into the open interval so the list stays strictly ordered.
const GUESS_MARGIN: f64 = 1e-6;

/// How the initialization list is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitStrategy {
    /// Boundary points plus the midpoint: `{u, (u+v)/2, v}`.
    BoundaryMid,
    /// Uniformly spaced interior points: `{(5u+v)/6, (u+v)/2, (u+5v)/6}`.
    Interior,
    /// Per-coordinate line searches collect up to `nloc` local minimizers.
    LineSearch,
    /// Boundary points with a user guess in the middle: `{u, x0, v}`.
    BoundaryGuess,
    /// Interior outer points with a user guess in the middle.
    InteriorGuess,
}

/// Per-coordinate candidate values (strictly increasing, at least three per
/// coordinate), optionally with cached objective values from the
/// line-search construction so initialization does not re-evaluate them.
#[derive(Debug, Clone)]
pub struct InitializationList {
    points: Vec<Vec<f64>>,
    /// Cached values per coordinate, aligned with `points`. For coordinate
    /// `i` the cached value of entry `j` is the objective at the evolving
    /// incumbent with coordinate `i` set to `points[i][j]`.
    cached: Vec<Option<Vec<f64>>>,
    /// Designated start entry per coordinate.
    anchors: Vec<usize>,
    /// Start point and value of the line-search construction, recorded so
    /// initialization can replay the same path.
    origin: Option<(Vec<f64>, f64)>,
}

impl InitializationList {
    fn validate(&self, problem: &Problem) -> Result<()> {
        let n = problem.dimension();
        if self.points.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.points.len(),
            });
        }
        for (i, pts) in self.points.iter().enumerate() {
            if pts.len() < 3 {
                return Err(Error::ConfigInconsistent(format!(
                    "initialization list for coordinate {i} has fewer than 3 points"
                )));
            }
            let (lo, hi) = (problem.bounds().lower()[i], problem.bounds().upper()[i]);
            for w in pts.windows(2) {
                if !(w[0] < w[1]) {
                    return Err(Error::ConfigInconsistent(format!(
                        "initialization list for coordinate {i} is not strictly increasing"
                    )));
                }
            }
            if pts[0] < lo || *pts.last().unwrap() > hi {
                return Err(Error::OutOfBounds {
                    index: i,
                    value: pts[0].min(*pts.last().unwrap()),
                    lower: lo,
                    upper: hi,
                });
            }
            if self.anchors[i] >= pts.len() {
                return Err(Error::ConfigInconsistent(format!(
                    "anchor out of range for coordinate {i}"
                )));
            }
            if let Some(vals) = &self.cached[i] {
                if vals.len() != pts.len() {
                    return Err(Error::ConfigInconsistent(format!(
                        "cached values misaligned for coordinate {i}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn points(&self, coord: usize) -> &[f64] {
        &self.points[coord]
    }

    pub fn anchor(&self, coord: usize) -> usize {
        self.anchors[coord]
    }

    pub(crate) fn cached(&self, coord: usize) -> Option<&[f64]> {
        self.cached[coord].as_deref()
    }

    pub(crate) fn origin(&self) -> Option<&(Vec<f64>, f64)> {
        self.origin.as_ref()
    }
}

/// Builds the list for the four formula-based strategies.
///
/// Guess strategies clamp each `x0` coordinate into the open interval
/// between the outer entries (margin [`GUESS_MARGIN`] of the width) so the
/// three entries stay strictly ordered.
pub fn build_init_list(problem: &Problem, config: &McsConfig) -> Result<InitializationList> {
    config.validate(problem)?;
    let n = problem.dimension();
    let (lower, upper) = (problem.bounds().lower(), problem.bounds().upper());
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let (u, v) = (lower[i], upper[i]);
        let w = v - u;
        let mid = 0.5 * (u + v);
        let (lo6, hi6) = ((5.0 * u + v) / 6.0, (u + 5.0 * v) / 6.0);
        let triple = match config.init_strategy {
            InitStrategy::BoundaryMid => [u, mid, v],
            InitStrategy::Interior => [lo6, mid, hi6],
            InitStrategy::BoundaryGuess => {
                let x0 = config.initial_guess.as_ref().ok_or(Error::MissingGuess)?[i];
                [u, x0.clamp(u + GUESS_MARGIN * w, v - GUESS_MARGIN * w), v]
            }
            InitStrategy::InteriorGuess => {
                let x0 = config.initial_guess.as_ref().ok_or(Error::MissingGuess)?[i];
                [
                    lo6,
                    x0.clamp(lo6 + GUESS_MARGIN * w, hi6 - GUESS_MARGIN * w),
                    hi6,
                ]
            }
            InitStrategy::LineSearch => {
                return Err(Error::Config(
                    "line-search lists are built by line_search_init".into(),
                ))
            }
        };
        points.push(triple.to_vec());
    }
    let list = InitializationList {
        points,
        cached: vec![None; n],
        anchors: vec![1; n],
        origin: None,
    };
    list.validate(problem)?;
    Ok(list)
}

/// Componentwise point of minimal absolute value inside the bounds.
fn min_abs_point(lo: f64, hi: f64) -> f64 {
    if lo <= 0.0 && hi >= 0.0 {
        0.0
    } else if lo > 0.0 {
        lo
    } else {
        hi
    }
}

/// Builds the initialization list with per-coordinate line searches.
///
/// Starting from the componentwise minimal-absolute-value point (or the
/// configured guess), each coordinate is scanned with at most `smaxls`
/// samples; up to `nloc` strict discrete minimizers enter the list,
/// supplemented by the samples nearest the interval ends when fewer are
/// found, and padded to three entries. The best sample is carried forward
/// as the start for the next coordinate. Sample values are cached in the
/// list so initialization replays them without spending budget again.
///
/// On budget exhaustion the remaining coordinates fall back to boundary
/// plus midpoint entries (uncached).
pub fn line_search_init(ev: &mut Evaluator, config: &McsConfig) -> Result<InitializationList> {
    let problem = ev.problem();
    config.validate(problem)?;
    let n = problem.dimension();
    let lower = problem.bounds().lower().to_vec();
    let upper = problem.bounds().upper().to_vec();

    let start: Vec<f64> = match &config.initial_guess {
        Some(g) => problem.clamp(g),
        None => (0..n).map(|i| min_abs_point(lower[i], upper[i])).collect(),
    };

    let mut x = start.clone();
    let mut x_val: Option<f64> = None;
    let mut origin: Option<(Vec<f64>, f64)> = None;

    let mut points = Vec::with_capacity(n);
    let mut cached = Vec::with_capacity(n);
    let mut anchors = Vec::with_capacity(n);
    let mut exhausted = false;

    for i in 0..n {
        let (u, v) = (lower[i], upper[i]);
        let tol = 1e-12 * (v - u);
        if exhausted {
            points.push(vec![u, 0.5 * (u + v), v]);
            cached.push(None);
            anchors.push(1);
            continue;
        }

        // Sample positions: the current coordinate value plus a uniform
        // grid of smaxls - 1 points spanning [u, v].
        let m = config.smaxls - 1;
        let mut ts: Vec<f64> = (0..m)
            .map(|k| u + (v - u) * k as f64 / (m - 1) as f64)
            .collect();
        if !ts.iter().any(|t| (t - x[i]).abs() <= tol) {
            ts.push(x[i]);
        }
        ts.sort_by(|a, b| a.total_cmp(b));

        let mut samples: Vec<(f64, f64)> = Vec::with_capacity(ts.len());
        for &t in &ts {
            let f = if let (true, Some(v)) = ((t - x[i]).abs() <= tol, x_val) {
                v
            } else {
                let mut p = x.clone();
                p[i] = t;
                match ev.evaluate(&p) {
                    Ok(f) => f,
                    Err(Error::BudgetExhausted) => {
                        exhausted = true;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            };
            if (t - x[i]).abs() <= tol {
                x_val = Some(f);
            }
            samples.push((t, f));
        }
        if exhausted || samples.len() < 3 {
            exhausted = true;
            points.push(vec![u, 0.5 * (u + v), v]);
            cached.push(None);
            anchors.push(1);
            continue;
        }
        if origin.is_none() {
            // x_val is set: the start coordinate was among the samples.
            origin = Some((start.clone(), x_val.expect("start sampled")));
        }

        // Strict discrete minimizers among the sorted samples.
        let k = samples.len();
        let mut minima: Vec<usize> = (0..k)
            .filter(|&j| {
                let left_ok = j == 0 || samples[j].1 < samples[j - 1].1;
                let right_ok = j == k - 1 || samples[j].1 < samples[j + 1].1;
                left_ok && right_ok
            })
            .collect();
        minima.sort_by(|&a, &b| {
            samples[a]
                .1
                .total_cmp(&samples[b].1)
                .then(samples[a].0.total_cmp(&samples[b].0))
        });
        minima.truncate(config.nloc);

        let best_idx = (0..k)
            .min_by(|&a, &b| {
                samples[a]
                    .1
                    .total_cmp(&samples[b].1)
                    .then(samples[a].0.total_cmp(&samples[b].0))
            })
            .unwrap();

        let mut chosen: Vec<(f64, f64)> = minima.iter().map(|&j| samples[j]).collect();
        let add_distinct = |list: &mut Vec<(f64, f64)>, entry: (f64, f64)| {
            if !list.iter().any(|&(t, _)| (t - entry.0).abs() <= tol) {
                list.push(entry);
            }
        };
        // The best sample always enters, so the carried-forward incumbent
        // is a list entry.
        add_distinct(&mut chosen, samples[best_idx]);
        if chosen.len() < config.nloc {
            add_distinct(&mut chosen, samples[0]);
            add_distinct(&mut chosen, samples[k - 1]);
        }
        // Pad to three entries: the start sample first, then the sample
        // nearest the interval midpoint.
        if chosen.len() < 3 {
            if let Some(&s) = samples.iter().find(|&&(t, _)| (t - x[i]).abs() <= tol) {
                add_distinct(&mut chosen, s);
            }
        }
        if chosen.len() < 3 {
            let mid = 0.5 * (u + v);
            let mut by_mid: Vec<(f64, f64)> = samples.clone();
            by_mid.sort_by(|a, b| (a.0 - mid).abs().total_cmp(&(b.0 - mid).abs()));
            for s in by_mid {
                if chosen.len() >= 3 {
                    break;
                }
                add_distinct(&mut chosen, s);
            }
        }
        chosen.sort_by(|a, b| a.0.total_cmp(&b.0));

        let anchor = (0..chosen.len())
            .min_by(|&a, &b| chosen[a].1.total_cmp(&chosen[b].1).then(a.cmp(&b)))
            .unwrap();

        // Carry the best point forward.
        x[i] = chosen[anchor].0;
        x_val = Some(chosen[anchor].1);

        points.push(chosen.iter().map(|&(t, _)| t).collect());
        cached.push(Some(chosen.iter().map(|&(_, f)| f).collect()));
        anchors.push(anchor);
    }

    let list = InitializationList {
        points,
        cached,
        anchors,
        origin,
    };
    list.validate(problem)?;
    Ok(list)
}
