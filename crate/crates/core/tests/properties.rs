use dbca::analytics::{expected_occupied, expected_throughput, non_dominated, FrontierPoint};
use dbca::estimator::UpdateBase;
use dbca::optimizer::{crs_decision, solve, CrsRounding, FixedKMethod, ResourceBudget};
use dbca::sim::{run_dacb, run_dbca, run_qtra, DacbMode, RunOptions, UeStatus};
use dbca::traffic::BurstScenario;
use dbca::{BacklogEstimator, DbcaParams, ExperimentConfig, OperatingPoint, SystemConfig};
use proptest::prelude::*;

fn cfg() -> SystemConfig {
    SystemConfig::default()
}

proptest! {
    #[test]
    fn throughput_bounded_by_occupancy(n in 0.0..20_000.0f64, p in 0.0..=1.0f64, k in 0u32..=14) {
        let s = expected_throughput(n, p, k, 54).unwrap();
        let occ = expected_occupied(n, p, 54).unwrap();
        prop_assert!(s >= 0.0);
        prop_assert!(s <= occ * (1.0 + 1e-12) + 1e-12);
        prop_assert!(occ <= 54.0 + 1e-9);
    }

    #[test]
    fn throughput_grows_with_k(n in 2.0..10_000.0f64, p in 0.001..=1.0f64, k in 0u32..14) {
        let a = expected_throughput(n, p, k, 54).unwrap();
        let b = expected_throughput(n, p, k + 1, 54).unwrap();
        prop_assert!(b >= a * (1.0 - 1e-12));
    }

    #[test]
    fn crs_monotone_in_budget(n in 1.0..10_000.0f64, p in 0.01..=1.0f64, e1 in 15.0..500.0f64, extra in 0.0..200.0f64) {
        let c = cfg();
        let k1 = crs_decision(n, p, &ResourceBudget::fixed(e1), &c, CrsRounding::Floor);
        let k2 = crs_decision(n, p, &ResourceBudget::fixed(e1 + extra), &c, CrsRounding::Floor);
        prop_assert!(k2 >= k1);
        prop_assert!(k1 <= c.k_max);
    }

    #[test]
    fn solver_respects_budget(n in 1.0..10_000.0f64, c in 1.0..2.0f64) {
        let sys = cfg();
        let budget = ResourceBudget::proportional(c, n, &sys).unwrap();
        let sol = solve(n, &budget, &sys, FixedKMethod::Exact).unwrap();
        prop_assert!(sol.point.p > 0.0 && sol.point.p <= 1.0);
        prop_assert!(sol.resources <= budget.epsilon_r * (1.0 + 1e-9));
    }

    #[test]
    fn estimator_stays_non_negative(steps in prop::collection::vec((0.01..=1.0f64, 0u32..=54, 0u32..=54), 1..60)) {
        let mut est = BacklogEstimator::new(54, UpdateBase::Posterior);
        for (p, idle, s) in steps {
            est.observe_idle(p, idle).unwrap();
            prop_assert!(est.posterior() >= 0.0);
            let next = est.observe_successes(s);
            prop_assert!(next >= 0.0 && next.is_finite());
        }
    }

    #[test]
    fn frontier_points_are_mutually_non_dominated(
        pts in prop::collection::vec((0.0..50.0f64, 10.0..500.0f64), 1..80)
    ) {
        let candidates: Vec<FrontierPoint<f64>> = pts
            .iter()
            .map(|&(s, r)| FrontierPoint { throughput: s, resources: r, point: OperatingPoint { p: 1.0, k: 0 } })
            .collect();
        let front = non_dominated(&candidates);
        prop_assert!(!front.is_empty());
        for a in &front {
            prop_assert!(!candidates.iter().any(|c| c.dominates(a)));
        }
    }

    #[test]
    fn config_round_trips(seed in 0..=i64::MAX as u64, reps in 1usize..100, c in 1.0..3.0f64) {
        let mut config = ExperimentConfig::default();
        config.master_seed = seed;
        config.replications = reps;
        config.max_replications = reps * 2;
        config.protocols.dbca_c = vec![c];
        let back = ExperimentConfig::from_toml(&config.to_toml().unwrap()).unwrap();
        prop_assert_eq!(back, config);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn every_protocol_connects_every_ue(ues in 1u64..400, seed in any::<u64>(), which in 0usize..3) {
        let sys = cfg();
        let scenario = BurstScenario::beta(ues);
        let opts = RunOptions::new(seed, 0);
        let result = match which {
            0 => run_dbca(&scenario, &sys, &DbcaParams::proportional(1.2), &opts),
            1 => run_dacb(&scenario, &sys, DacbMode::Estimated, UpdateBase::Posterior, &opts),
            _ => run_qtra(&scenario, &sys, 8, &opts),
        }
        .unwrap();
        prop_assert_eq!(result.ues.len() as u64, ues);
        prop_assert!(result.ues.iter().all(|u| u.status == UeStatus::Connected));
        prop_assert_eq!(result.total_successes(), ues);
        for u in &result.ues {
            prop_assert!(u.success_round.unwrap() >= u.activation_round);
        }
    }
}
