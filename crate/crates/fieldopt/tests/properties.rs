//! Cross-cutting invariants fuzzed over optimizers, budgets, and
//! scenarios.

use proptest::prelude::*;

use fieldopt::algorithms::{run_algorithm, AlgorithmId};
use fieldopt::bench::{camel_problem, six_hump_camel};
use fieldopt::gps::{run_gps, GpsConfig};
use fieldopt::mcs::golden_splits;
use fieldopt::npv::{npv, EconomicParams, ProductionSeries, WellSeries};
use fieldopt::scenario::{joint_channel_scenario, make_problem, ScenarioKind};
use fieldopt::wells::WellRole;
use fieldopt::{Bounds, Problem, Sense};

fn algorithm_by_index(i: usize) -> AlgorithmId {
    AlgorithmId::all()[i % AlgorithmId::all().len()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_optimizer_is_budget_bounded_and_monotone(
        budget in 5usize..120,
        algo in 0usize..10,
        seed in 0u64..1000,
    ) {
        let id = algorithm_by_index(algo);
        let p = camel_problem(budget);
        let mid = p.bounds().midpoint();
        let r = run_algorithm(id, &p, &mid, Some(seed)).unwrap();
        prop_assert!(r.evals_used <= budget);
        prop_assert_eq!(r.trace.len(), r.evals_used);
        // Minimization: best_so_far is nonincreasing and tracks the prefix
        // minimum exactly.
        let mut best = f64::INFINITY;
        for rec in r.trace.records() {
            best = best.min(rec.value);
            prop_assert_eq!(rec.best_so_far, best);
            // Every evaluated point respects the bounds.
            prop_assert!(rec.point[0] >= -3.0 && rec.point[0] <= 3.0);
            prop_assert!(rec.point[1] >= -2.0 && rec.point[1] <= 2.0);
        }
        prop_assert_eq!(r.best_value, best);
    }

    #[test]
    fn golden_splits_stay_interior_and_mirror(a in -1e6f64..1e6, w in 1e-3f64..1e6) {
        let b = a + w;
        let (g1, g2) = golden_splits(a, b).unwrap();
        prop_assert!(a < g1 && g1 < g2 && g2 < b);
        let (m1, m2) = golden_splits(-b, -a).unwrap();
        prop_assert_eq!(m1, -g2);
        prop_assert_eq!(m2, -g1);
    }

    #[test]
    fn npv_is_linear_in_prices(alpha in 0.1f64..10.0, seed in 0u64..500) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let steps = rng.random_range(1..5);
        let mut t = 0.0;
        let (mut time_days, mut dt_days) = (Vec::new(), Vec::new());
        for _ in 0..steps {
            let dt = rng.random_range(1.0..50.0);
            t += dt;
            time_days.push(t);
            dt_days.push(dt);
        }
        let rates = |rng: &mut rand_chacha::ChaCha8Rng| {
            (0..steps).map(|_| rng.random_range(0.0..50.0)).collect::<Vec<_>>()
        };
        let series = ProductionSeries {
            time_days,
            dt_days,
            wells: vec![WellSeries {
                name: "W".into(),
                role: WellRole::Producer,
                q_gas_prod_m3d: rates(&mut rng),
                q_oil_prod_m3d: rates(&mut rng),
                q_water_prod_m3d: rates(&mut rng),
                q_water_inj_m3d: rates(&mut rng),
            }],
        };
        let base = EconomicParams {
            gas_revenue_usd_m3: 0.5,
            oil_revenue_usd_m3: 500.0,
            water_prod_cost_usd_m3: 80.0,
            water_inj_cost_usd_m3: 80.0,
            discount_rate_annual: 0.07,
            discount_norm_days: 365.0,
        };
        let mut scaled = base.clone();
        scaled.gas_revenue_usd_m3 *= alpha;
        scaled.oil_revenue_usd_m3 *= alpha;
        scaled.water_prod_cost_usd_m3 *= alpha;
        scaled.water_inj_cost_usd_m3 *= alpha;
        let v0 = npv(&series, &base).unwrap();
        let v1 = npv(&series, &scaled).unwrap();
        let tol = 1e-9 * v0.abs().max(1.0) * alpha.max(1.0);
        prop_assert!((v1 - alpha * v0).abs() <= tol, "{} vs {}", v1, alpha * v0);
    }

    #[test]
    fn scenario_pack_unpack_round_trips(unit in proptest::collection::vec(0.0f64..1.0, 28)) {
        let scenario = joint_channel_scenario();
        let sp = make_problem(&scenario, ScenarioKind::Joint, 1).unwrap();
        let b = sp.problem.bounds();
        let x: Vec<f64> = unit
            .iter()
            .enumerate()
            .map(|(i, u)| b.lower()[i] + u * (b.upper()[i] - b.lower()[i]))
            .collect();
        let (p, c) = sp.unpack(&x).unwrap();
        let repacked = sp.pack(&p, &c).unwrap();
        prop_assert_eq!(repacked, x);
    }
}

#[test]
fn gps_sense_symmetry_yields_identical_point_sequences() {
    let bounds = Bounds::new(vec![-3.0, -2.0], vec![3.0, 2.0]).unwrap();
    let min_p = Problem::new(bounds.clone(), six_hump_camel, Sense::Minimize, 150);
    let max_p = Problem::new(bounds, |x| -six_hump_camel(x), Sense::Maximize, 150);
    let a = run_gps(&min_p, &GpsConfig::default(), &[0.5, 0.5]).unwrap();
    let b = run_gps(&max_p, &GpsConfig::default(), &[0.5, 0.5]).unwrap();
    assert_eq!(a.trace.len(), b.trace.len());
    for (ra, rb) in a.trace.records().iter().zip(b.trace.records()) {
        assert_eq!(ra.point, rb.point);
        assert_eq!(ra.value, -rb.value);
    }
}

#[test]
fn maximize_trace_is_nondecreasing() {
    let bounds = Bounds::uniform(2, -2.0, 2.0).unwrap();
    let p = Problem::new(
        bounds,
        |x| -(x[0] * x[0] + x[1] * x[1]),
        Sense::Maximize,
        80,
    );
    let mid = p.bounds().midpoint();
    for id in [AlgorithmId::Mcs1, AlgorithmId::Gps, AlgorithmId::Pso] {
        let r = run_algorithm(id, &p, &mid, Some(4)).unwrap();
        let mut best = f64::NEG_INFINITY;
        for rec in r.trace.records() {
            best = best.max(rec.value);
            assert_eq!(rec.best_so_far, best, "{id}");
        }
    }
}
