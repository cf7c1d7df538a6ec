//! Local search launched from box base points that reach the maximum
//! level: a diagonal quadratic model from central finite differences with a
//! golden-section line search along the model descent direction.

use crate::error::Result;
use crate::mcs::McsConfig;
use crate::trace::Evaluator;

const RHO: f64 = 0.618_033_988_749_894_8;

/// Finite-difference step as a fraction of each coordinate range.
const FD_STEP_FRACTION: f64 = 1e-3;

/// Golden-section refinements per line search.
const LINE_SEARCH_ITERS: usize = 10;

/// Largest multiple of the model (Newton) step explored by a line search.
const MAX_STEP_MULTIPLE: f64 = 2.0;

/// Runs the local search from `start` (with known value `start_value`).
///
/// `reference` is the incumbent best at launch time; the search stops when
/// an accepted value lands within `gamma * |reference|` of it (absolute
/// test `|f| < gamma` when the reference is zero), after
/// `local_max_steps` model steps, when no descent is found, or on budget
/// exhaustion (partial progress is kept by the evaluator).
pub(super) fn local_search(
    ev: &mut Evaluator,
    start: &[f64],
    start_value: f64,
    reference: f64,
    config: &McsConfig,
) -> Result<()> {
    let n = start.len();
    let bounds = ev.problem().bounds().clone();
    let gamma = config.local_gamma;
    let stop = |f: f64| {
        if reference == 0.0 {
            f.abs() < gamma
        } else {
            (f - reference).abs() < gamma * reference.abs()
        }
    };

    let mut x = start.to_vec();
    let mut fx = start_value;

    for _ in 0..config.local_max_steps {
        // Diagonal quadratic model around x.
        let mut grad = vec![0.0; n];
        let mut curv = vec![0.0; n];
        for i in 0..n {
            let (lb, ub) = (bounds.lower()[i], bounds.upper()[i]);
            let h = FD_STEP_FRACTION * (ub - lb);
            let tp = (x[i] + h).min(ub);
            let tm = (x[i] - h).max(lb);
            if tp - tm <= f64::EPSILON * (ub - lb) {
                continue;
            }
            let mut p = x.clone();
            p[i] = tp;
            let fp = ev.evaluate(&p)?;
            p[i] = tm;
            let fm = ev.evaluate(&p)?;
            grad[i] = (fp - fm) / (tp - tm);
            let dp = tp - x[i];
            let dm = x[i] - tm;
            if dp > 1e-3 * h && dm > 1e-3 * h {
                curv[i] = 2.0 * (fp * dm + fm * dp - fx * (dp + dm)) / (dp * dm * (dp + dm));
            }
        }

        // Newton-scaled descent direction with a curvature floor so
        // non-convex coordinates fall back to scaled steepest descent.
        let cmax = curv.iter().fold(0.0f64, |m, &c| m.max(c.abs()));
        let floor = (1e-8 * cmax).max(1e-12);
        let mut dir = vec![0.0; n];
        let mut scaled_norm = 0.0;
        for i in 0..n {
            let denom = if curv[i] > floor { curv[i] } else { floor };
            dir[i] = -grad[i] / denom;
            let r = bounds.range(i);
            scaled_norm += (dir[i] / r) * (dir[i] / r);
        }
        if scaled_norm.sqrt() < 1e-12 {
            break; // stationary point of the model
        }

        // Largest step multiple that stays inside the bounds.
        let mut t_hi = MAX_STEP_MULTIPLE;
        for i in 0..n {
            if dir[i] > 0.0 {
                t_hi = t_hi.min((bounds.upper()[i] - x[i]) / dir[i]);
            } else if dir[i] < 0.0 {
                t_hi = t_hi.min((bounds.lower()[i] - x[i]) / dir[i]);
            }
        }
        if !(t_hi > 0.0) {
            break;
        }

        // Golden-section search on [0, t_hi].
        let point_at = |x: &[f64], t: f64| -> Vec<f64> {
            let p: Vec<f64> = x.iter().zip(&dir).map(|(&xi, &di)| xi + t * di).collect();
            bounds.clamp(&p)
        };
        let (mut a, mut b) = (0.0f64, t_hi);
        let mut t1 = RHO * a + (1.0 - RHO) * b;
        let mut t2 = (1.0 - RHO) * a + RHO * b;
        let mut f1 = ev.evaluate(&point_at(&x, t1))?;
        let mut f2 = ev.evaluate(&point_at(&x, t2))?;
        let mut best_t = if f1 <= f2 { t1 } else { t2 };
        let mut best_f = f1.min(f2);
        for _ in 0..LINE_SEARCH_ITERS {
            if f1 <= f2 {
                b = t2;
                t2 = t1;
                f2 = f1;
                t1 = RHO * a + (1.0 - RHO) * b;
                f1 = ev.evaluate(&point_at(&x, t1))?;
            } else {
                a = t1;
                t1 = t2;
                f1 = f2;
                t2 = (1.0 - RHO) * a + RHO * b;
                f2 = ev.evaluate(&point_at(&x, t2))?;
            }
            let (tc, fc) = if f1 <= f2 { (t1, f1) } else { (t2, f2) };
            if fc < best_f {
                best_f = fc;
                best_t = tc;
            }
        }

        if best_f < fx {
            x = point_at(&x, best_t);
            fx = best_f;
            if stop(fx) {
                break;
            }
        } else {
            break; // no descent along the model direction
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::six_hump_camel;
    use crate::mcs::InitStrategy;
    use crate::problem::{Bounds, Problem, Sense};

    #[test]
    fn converges_near_the_camel_minimizer() {
        let p = Problem::new(
            Bounds::new(vec![-3.0, -2.0], vec![3.0, 2.0]).unwrap(),
            six_hump_camel,
            Sense::Minimize,
            600,
        );
        let config = McsConfig::new(InitStrategy::BoundaryMid, 2);
        let mut ev = Evaluator::new(&p);
        let start = [0.05, -0.7];
        let f_start = ev.evaluate(&start).unwrap();
        // Reference mimics a typical incumbent from the global phase, far
        // enough that the relative stop does not bite near the optimum.
        local_search(&mut ev, &start, f_start, -0.9, &config).unwrap();
        let best = ev.best_point().unwrap();
        assert!(
            (best[0] - 0.0898).abs() <= 1e-3 && (best[1] + 0.7127).abs() <= 1e-3,
            "best {best:?}"
        );
    }

    #[test]
    fn no_move_from_exact_quadratic_minimizer() {
        let p = Problem::new(
            Bounds::uniform(2, -1.0, 1.0).unwrap(),
            |x| (x[0] - 0.25) * (x[0] - 0.25) + 2.0 * (x[1] + 0.5) * (x[1] + 0.5),
            Sense::Minimize,
            100,
        );
        let config = McsConfig::new(InitStrategy::BoundaryMid, 2);
        let mut ev = Evaluator::new(&p);
        let start = [0.25, -0.5];
        let f_start = ev.evaluate(&start).unwrap();
        local_search(&mut ev, &start, f_start, -1.0, &config).unwrap();
        // Model evaluations happen, but the incumbent never moves.
        assert_eq!(ev.best_point().unwrap(), start.as_slice());
    }

    #[test]
    fn zero_steps_returns_immediately() {
        let p = Problem::new(
            Bounds::uniform(1, -1.0, 1.0).unwrap(),
            |x| x[0] * x[0],
            Sense::Minimize,
            100,
        );
        let config = McsConfig::new(InitStrategy::BoundaryMid, 1).without_local_search();
        let mut ev = Evaluator::new(&p);
        let f = ev.evaluate(&[0.5]).unwrap();
        local_search(&mut ev, &[0.5], f, -1.0, &config).unwrap();
        assert_eq!(ev.used(), 1);
    }
}
