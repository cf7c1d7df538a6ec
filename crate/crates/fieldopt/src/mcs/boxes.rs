//! Box bookkeeping for multilevel coordinate search: the live partition of
//! the domain, level-driven selection, and the two split operations.

use crate::error::{Error, Result};
use crate::mcs::init::InitializationList;
use crate::trace::Evaluator;

/// Golden ratio conjugate (sqrt(5) - 1) / 2.
const RHO: f64 = 0.618_033_988_749_894_8;

/// A coordinate is frozen (never split again) once its box width falls
/// below this fraction of the original domain range.
const FREEZE_FRACTION: f64 = 1e-12;

/// Tolerance fraction for treating two coordinate values as the same
/// sample position.
const SAMPLE_TOL_FRACTION: f64 = 1e-12;

/// The two golden-section points of `(a, b)`: `a + 0.382 (b - a)` and
/// `a + 0.618 (b - a)`, computed in convex-combination form so mirrored
/// intervals produce exactly mirrored splits.
pub fn golden_splits(a: f64, b: f64) -> Result<(f64, f64)> {
    if !(b - a >= 1e-14 * a.abs().max(b.abs()).max(1.0)) {
        return Err(Error::DegenerateInterval { a, b });
    }
    let g1 = RHO * a + (1.0 - RHO) * b;
    let g2 = (1.0 - RHO) * a + RHO * b;
    Ok((g1, g2))
}

/// What to do with a selected box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitDecision {
    /// Split along the given coordinate (the least-split one).
    ByRank(usize),
    /// Fit per-coordinate quadratics and split along the most promising
    /// coordinate, or raise the level when no gain is expected.
    ByGain,
}

/// Split-by-rank applies when the box level exceeds `2 n (c_min + 1)`,
/// where `c_min` is the smallest per-coordinate split count; ties on the
/// count go to the lowest coordinate index.
pub fn split_decision(level: usize, split_counts: &[usize]) -> SplitDecision {
    let n = split_counts.len();
    let c_min = *split_counts.iter().min().expect("nonempty counts");
    if level > 2 * n * (c_min + 1) {
        let coord = split_counts.iter().position(|&c| c == c_min).unwrap();
        SplitDecision::ByRank(coord)
    } else {
        SplitDecision::ByGain
    }
}

/// Up to three most recent distinct samples `(t, f)` along one coordinate.
#[derive(Debug, Clone, Copy, Default)]
pub(super) struct CoordSamples {
    data: [(f64, f64); 3],
    len: u8,
}

impl CoordSamples {
    fn insert(&mut self, t: f64, f: f64, tol: f64) {
        let n = self.len as usize;
        if let Some(k) = (0..n).find(|&k| (self.data[k].0 - t).abs() <= tol) {
            // Same position: drop the stale entry, re-insert as most recent.
            for j in k..n - 1 {
                self.data[j] = self.data[j + 1];
            }
            self.data[n - 1] = (t, f);
            return;
        }
        if n == 3 {
            self.data[0] = self.data[1];
            self.data[1] = self.data[2];
            self.data[2] = (t, f);
        } else {
            self.data[n] = (t, f);
            self.len += 1;
        }
    }

    fn as_slice(&self) -> &[(f64, f64)] {
        &self.data[..self.len as usize]
    }

    #[cfg(test)]
    pub(super) fn insert_for_test(&mut self, t: f64, f: f64) {
        self.insert(t, f, 1e-12);
    }
}

#[derive(Debug, Clone)]
pub(super) struct McsBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub base: Vec<f64>,
    /// Objective at `base`, minimization sense.
    pub value: f64,
    pub level: usize,
    pub split_counts: Vec<usize>,
    pub alive: bool,
    /// Eligible for split-by-gain; cleared when tagged not promising.
    pub promising: bool,
    pub samples: Vec<CoordSamples>,
}

pub(super) struct SweepState {
    pub boxes: Vec<McsBox>,
    pub s_max: usize,
    pub n: usize,
    range: Vec<f64>,
    new_at_smax: Vec<usize>,
    seeded: Vec<Vec<f64>>,
}

impl SweepState {
    pub(super) fn new(n: usize, range: Vec<f64>, s_max: usize) -> Self {
        Self {
            boxes: Vec::new(),
            s_max,
            n,
            range,
            new_at_smax: Vec::new(),
            seeded: Vec::new(),
        }
    }

    pub(super) fn push_box(&mut self, b: McsBox) -> usize {
        let id = self.boxes.len();
        let at_max = b.level >= self.s_max;
        self.boxes.push(b);
        if at_max {
            self.new_at_smax.push(id);
        }
        id
    }

    fn kill(&mut self, id: usize) {
        let b = &mut self.boxes[id];
        b.alive = false;
        // Children own copies of everything they need.
        b.samples = Vec::new();
    }

    pub fn any_alive_below_smax(&self) -> bool {
        self.boxes.iter().any(|b| b.alive && b.level < self.s_max)
    }

    /// Best live box at exactly `level` (minimal base value, earliest
    /// creation on ties).
    pub fn select_at_level(&self, level: usize) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (id, b) in self.boxes.iter().enumerate() {
            if b.alive && b.level == level {
                match best {
                    Some(cur) if self.boxes[cur].value <= b.value => {}
                    _ => best = Some(id),
                }
            }
        }
        best
    }

    /// Snapshot of the per-level selection: for each non-empty level in
    /// `2 .. s_max`, the live box with the best base value. The sweep
    /// itself re-queries level by level so freshly created boxes are
    /// eligible within the same sweep.
    #[cfg_attr(not(test), allow(dead_code))]
    pub fn select_boxes(&self) -> Vec<(usize, usize)> {
        (2..self.s_max)
            .filter_map(|s| self.select_at_level(s).map(|id| (s, id)))
            .collect()
    }

    pub fn level_of(&self, id: usize) -> usize {
        self.boxes[id].level
    }

    pub fn split_counts_of(&self, id: usize) -> &[usize] {
        &self.boxes[id].split_counts
    }

    pub fn base_of(&self, id: usize) -> &[f64] {
        &self.boxes[id].base
    }

    pub fn value_of(&self, id: usize) -> f64 {
        self.boxes[id].value
    }

    fn frozen(&self, id: usize, coord: usize) -> bool {
        let b = &self.boxes[id];
        b.hi[coord] - b.lo[coord] < FREEZE_FRACTION * self.range[coord]
    }

    /// Redirects a by-rank choice away from frozen coordinates; `None`
    /// when every coordinate is frozen.
    pub fn redirect_frozen(&self, id: usize, coord: usize) -> Option<usize> {
        if !self.frozen(id, coord) {
            return Some(coord);
        }
        let counts = &self.boxes[id].split_counts;
        (0..self.n)
            .filter(|&c| !self.frozen(id, c))
            .min_by(|&a, &b| counts[a].cmp(&counts[b]).then(a.cmp(&b)))
    }

    /// Raises the box level by one (not-promising tag) and records arrival
    /// at `s_max`.
    pub fn bump(&mut self, id: usize) {
        let level = (self.boxes[id].level + 1).min(self.s_max);
        self.boxes[id].level = level;
        self.boxes[id].promising = false;
        if level >= self.s_max {
            self.new_at_smax.push(id);
        }
    }

    pub fn drain_new_at_smax(&mut self) -> Vec<usize> {
        std::mem::take(&mut self.new_at_smax)
    }

    pub fn already_seeded(&self, point: &[f64]) -> bool {
        self.seeded.iter().any(|p| p == point)
    }

    pub fn mark_seeded(&mut self, point: Vec<f64>) {
        self.seeded.push(point);
    }

    fn sample_tol(&self, coord: usize) -> f64 {
        SAMPLE_TOL_FRACTION * self.range[coord]
    }
}

/// Builds the first generation of boxes from the initialization list.
///
/// For each coordinate in turn the incumbent is varied over the list
/// entries, the incumbent moves to the best variant, and the current box is
/// partitioned along that coordinate with one cell per list point (cell
/// boundaries sit at golden-section points between consecutive entries,
/// with the larger share on the better side). Cached list values are
/// replayed without spending budget. Budget exhaustion returns the state
/// built so far.
pub(super) fn initialize(
    ev: &mut Evaluator,
    list: &InitializationList,
    s_max: usize,
) -> Result<SweepState> {
    let problem = ev.problem();
    let n = problem.dimension();
    let lower = problem.bounds().lower().to_vec();
    let upper = problem.bounds().upper().to_vec();
    let range: Vec<f64> = (0..n).map(|i| upper[i] - lower[i]).collect();
    let mut state = SweepState::new(n, range, s_max);

    // Incumbent: the line-search origin when available, otherwise the
    // anchor entries (evaluated once).
    let (mut x, mut fx) = match list.origin() {
        Some((pt, val)) => (pt.clone(), *val),
        None => {
            let x: Vec<f64> = (0..n).map(|i| list.points(i)[list.anchor(i)]).collect();
            match ev.evaluate(&x) {
                Ok(f) => (x, f),
                Err(Error::BudgetExhausted) => return Ok(state),
                Err(e) => return Err(e),
            }
        }
    };

    let mut chain_lo = lower;
    let mut chain_hi = upper;
    let mut chain_counts = vec![0usize; n];
    let mut chain_level = 1usize;
    let mut chain_samples = vec![CoordSamples::default(); n];
    let mut chain_id: Option<usize> = None;
    let mut init_samples: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];

    for i in 0..n {
        let pts = list.points(i);
        let count = pts.len();
        let mut vals: Vec<Option<f64>> = vec![None; count];
        if let Some(cache) = list.cached(i) {
            for (slot, &v) in vals.iter_mut().zip(cache) {
                *slot = Some(v);
            }
        } else {
            let anchor = list.anchor(i);
            vals[anchor] = Some(fx);
            let mut dead = false;
            for (j, slot) in vals.iter_mut().enumerate() {
                if j == anchor {
                    continue;
                }
                let mut p = x.clone();
                p[i] = pts[j];
                match ev.evaluate(&p) {
                    Ok(f) => *slot = Some(f),
                    Err(Error::BudgetExhausted) => {
                        dead = true;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            if dead {
                break;
            }
        }
        let vals: Vec<f64> = vals.into_iter().map(|v| v.unwrap()).collect();
        init_samples[i] = pts.iter().copied().zip(vals.iter().copied()).collect();

        // Partition boundaries: golden-section point in each gap, larger
        // share toward the better endpoint.
        let mut cuts = Vec::with_capacity(count + 1);
        cuts.push(chain_lo[i]);
        for j in 0..count - 1 {
            let (a, b) = (pts[j], pts[j + 1]);
            let rho = if vals[j] <= vals[j + 1] { RHO } else { 1.0 - RHO };
            cuts.push((1.0 - rho) * a + rho * b);
        }
        cuts.push(chain_hi[i]);

        let best_j = (0..count)
            .min_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)))
            .unwrap();

        // The previous chain cell is replaced by this partition.
        if let Some(id) = chain_id {
            state.kill(id);
        }
        let child_level = (chain_level + 1).min(s_max);
        let mut child_counts = chain_counts.clone();
        child_counts[i] += 1;
        let tol = state.sample_tol(i);
        let mut next_chain = None;
        for j in 0..count {
            let mut lo = chain_lo.clone();
            let mut hi = chain_hi.clone();
            lo[i] = cuts[j];
            hi[i] = cuts[j + 1];
            let mut base = x.clone();
            base[i] = pts[j];
            let mut samples = chain_samples.clone();
            for &(t, f) in &init_samples[i] {
                samples[i].insert(t, f, tol);
            }
            samples[i].insert(pts[j], vals[j], tol);
            let id = state.push_box(McsBox {
                lo,
                hi,
                base,
                value: vals[j],
                level: child_level,
                split_counts: child_counts.clone(),
                alive: true,
                promising: true,
                samples,
            });
            if j == best_j {
                next_chain = Some(id);
            }
        }

        let cid = next_chain.unwrap();
        x[i] = pts[best_j];
        fx = vals[best_j];
        chain_lo = state.boxes[cid].lo.clone();
        chain_hi = state.boxes[cid].hi.clone();
        chain_counts = state.boxes[cid].split_counts.clone();
        chain_level = state.boxes[cid].level;
        chain_samples = state.boxes[cid].samples.clone();
        chain_id = Some(cid);
    }

    // Seed every first-generation box with the full set of list samples so
    // expected-gain models have data along every coordinate.
    for id in 0..state.boxes.len() {
        if !state.boxes[id].alive {
            continue;
        }
        for j in 0..n {
            let tol = state.sample_tol(j);
            let pairs = init_samples[j].clone();
            for (t, f) in pairs {
                state.boxes[id].samples[j].insert(t, f, tol);
            }
            let (bt, bv) = (state.boxes[id].base[j], state.boxes[id].value);
            state.boxes[id].samples[j].insert(bt, bv, tol);
        }
    }
    let _ = fx;
    Ok(state)
}

/// Tiles the parent box into three parts along `coord` at the two
/// golden-section points of its extent. `evals` are freshly evaluated
/// `(t, f)` pairs along that coordinate; each part takes the best known
/// point inside it (parent base first on ties) as its base.
fn partition_box(state: &mut SweepState, parent_id: usize, coord: usize, evals: &[(f64, f64)]) {
    let parent = state.boxes[parent_id].clone();
    let (a, b) = (parent.lo[coord], parent.hi[coord]);
    let (g1, g2) = golden_splits(a, b).expect("split coordinate not degenerate");
    let tol = state.sample_tol(coord);

    let mut candidates: Vec<(f64, f64)> = Vec::with_capacity(1 + evals.len());
    candidates.push((parent.base[coord], parent.value));
    candidates.extend_from_slice(evals);

    state.kill(parent_id);
    let child_level = (parent.level + 1).min(state.s_max);
    let mut child_counts = parent.split_counts.clone();
    child_counts[coord] += 1;

    for &(plo, phi) in &[(a, g1), (g1, g2), (g2, b)] {
        let chosen = candidates
            .iter()
            .filter(|&&(t, _)| t >= plo - tol && t <= phi + tol)
            .copied()
            .reduce(|best, cur| if cur.1 < best.1 { cur } else { best })
            .expect("every part contains a candidate");
        let mut lo = parent.lo.clone();
        let mut hi = parent.hi.clone();
        lo[coord] = plo;
        hi[coord] = phi;
        let mut base = parent.base.clone();
        base[coord] = chosen.0;
        let mut samples = parent.samples.clone();
        for &(t, f) in evals {
            samples[coord].insert(t, f, tol);
        }
        for j in 0..state.n {
            let tj = state.sample_tol(j);
            samples[j].insert(base[j], chosen.1, tj);
        }
        state.push_box(McsBox {
            lo,
            hi,
            base,
            value: chosen.1,
            level: child_level,
            split_counts: child_counts.clone(),
            alive: true,
            promising: true,
            samples,
        });
    }
}

/// Splits a box along `coord`, evaluating the two golden-section points of
/// its extent (the parent base moved to each golden point).
pub(super) fn split_by_rank(
    state: &mut SweepState,
    ev: &mut Evaluator,
    id: usize,
    coord: usize,
) -> Result<()> {
    let (a, b) = (state.boxes[id].lo[coord], state.boxes[id].hi[coord]);
    let (g1, g2) = match golden_splits(a, b) {
        Ok(v) => v,
        Err(Error::DegenerateInterval { .. }) => {
            state.bump(id);
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    let base = state.boxes[id].base.clone();
    let mut p = base.clone();
    p[coord] = g1;
    let f1 = ev.evaluate(&p)?;
    p[coord] = g2;
    let f2 = ev.evaluate(&p)?;
    partition_box(state, id, coord, &[(g1, f1), (g2, f2)]);
    Ok(())
}

/// One-dimensional model fit through the recent samples along a
/// coordinate; returns the predicted minimum `(f_exp, t_star)` inside
/// `[lo, hi]`. Falls back to a line (two samples) or the base value alone.
fn fit_and_minimize(
    samples: &[(f64, f64)],
    lo: f64,
    hi: f64,
    base_t: f64,
    base_f: f64,
) -> (f64, f64) {
    match samples.len() {
        0 | 1 => (base_f, base_t),
        2 => {
            let (t0, f0) = samples[0];
            let (t1, f1) = samples[1];
            let slope = (f1 - f0) / (t1 - t0);
            let t = if slope > 0.0 { lo } else { hi };
            let fe = f0 + slope * (t - t0);
            if fe.is_finite() {
                (fe, t)
            } else {
                (base_f, base_t)
            }
        }
        _ => {
            let (t0, f0) = samples[0];
            let (t1, f1) = samples[1];
            let (t2, f2) = samples[2];
            let d1 = (f1 - f0) / (t1 - t0);
            let d2 = ((f2 - f1) / (t2 - t1) - d1) / (t2 - t0);
            let q = |t: f64| f0 + d1 * (t - t0) + d2 * (t - t0) * (t - t1);
            let t = if d2 > 0.0 {
                (0.5 * (t0 + t1) - d1 / (2.0 * d2)).clamp(lo, hi)
            } else if q(lo) <= q(hi) {
                lo
            } else {
                hi
            };
            let fe = q(t);
            if fe.is_finite() && t.is_finite() {
                (fe, t)
            } else {
                (base_f, base_t)
            }
        }
    }
}

/// Split-by-expected-gain: fits a quadratic along each unfrozen
/// coordinate (sampling the box midpoint when fewer than three samples are
/// known), picks the coordinate with the lowest predicted value, and splits
/// there when the prediction beats the incumbent best; otherwise the box is
/// tagged not promising and its level raised by one.
pub(super) fn split_by_gain(state: &mut SweepState, ev: &mut Evaluator, id: usize) -> Result<()> {
    if !state.boxes[id].promising {
        state.bump(id);
        return Ok(());
    }
    let candidates: Vec<usize> = (0..state.n).filter(|&c| !state.frozen(id, c)).collect();
    if candidates.is_empty() {
        state.bump(id);
        return Ok(());
    }

    let mut best: Option<(f64, usize, f64)> = None; // (f_exp, coord, t_star)
    for &j in &candidates {
        let tol = state.sample_tol(j);
        if state.boxes[id].samples[j].as_slice().len() < 3 {
            let (lo, hi) = (state.boxes[id].lo[j], state.boxes[id].hi[j]);
            let tm = 0.5 * (lo + hi);
            let distinct = !state.boxes[id].samples[j]
                .as_slice()
                .iter()
                .any(|&(t, _)| (t - tm).abs() <= tol);
            if distinct {
                let mut p = state.boxes[id].base.clone();
                p[j] = tm;
                let f = ev.evaluate(&p)?;
                state.boxes[id].samples[j].insert(tm, f, tol);
            }
        }
        let b = &state.boxes[id];
        let (fe, ts) = fit_and_minimize(
            b.samples[j].as_slice(),
            b.lo[j],
            b.hi[j],
            b.base[j],
            b.value,
        );
        let better = match best {
            None => true,
            Some((cur, _, _)) => fe < cur,
        };
        if better {
            best = Some((fe, j, ts));
        }
    }

    let (f_exp, coord, t_star) = best.expect("candidates nonempty");
    if f_exp < ev.best_internal() {
        let b = &state.boxes[id];
        let (lo, hi) = (b.lo[coord], b.hi[coord]);
        let base_t = b.base[coord];
        let base = b.base.clone();
        let tol = state.sample_tol(coord);
        let (g1, g2) = match golden_splits(lo, hi) {
            Ok(v) => v,
            Err(Error::DegenerateInterval { .. }) => {
                state.bump(id);
                return Ok(());
            }
            Err(e) => return Err(e),
        };
        let mut evals: Vec<(f64, f64)> = Vec::with_capacity(3);
        for t in [t_star, g1, g2] {
            let dup = (t - base_t).abs() <= tol
                || evals.iter().any(|&(seen, _)| (seen - t).abs() <= tol);
            if dup {
                continue;
            }
            let mut p = base.clone();
            p[coord] = t;
            let f = ev.evaluate(&p)?;
            evals.push((t, f));
        }
        partition_box(state, id, coord, &evals);
    } else {
        state.bump(id);
    }
    Ok(())
}
