mod common;

use std::collections::BTreeMap;

use pooltest::adaptive::{adaptive_gamma_ordered, delta_test_bound, gamma_test_bound};
use pooltest::experiment::{run_adaptive_cdf, Decoder, Setting, SweepConfig};
use pooltest::{
    adaptive_delta, adaptive_gamma, draw_uniform_k_sparse, rng_from_seed, InfectionVector, TestOracle,
};
use rand::seq::SliceRandom;
use rand::Rng;

#[test]
fn zero_error_and_budgets_on_10k_instances() {
    for seed in 0..10_000u64 {
        let rng = &mut rng_from_seed(seed);
        let n = rng.random_range(1..=1000);
        let k = rng.random_range(1..=n.min(40));
        let sigma = draw_uniform_k_sparse(n, k, rng).unwrap();

        let delta = rng.random_range(2..=6);
        let mut oracle = TestOracle::new(sigma.clone()).with_log();
        let report = adaptive_delta(n, k, delta, &mut oracle).unwrap();
        assert!(report.matches(&sigma), "delta, seed {seed}");
        assert!(oracle.per_item_test_count().iter().all(|&c| c <= delta));
        assert!(report.tests_used <= delta_test_bound(n, k, delta), "seed {seed}");
        assert!(oracle.replay_matches());

        let gamma = rng.random_range(1..=32);
        let mut oracle = TestOracle::new(sigma.clone()).with_log();
        let report = adaptive_gamma(n, gamma, &mut oracle, rng).unwrap();
        assert!(report.matches(&sigma), "gamma, seed {seed}");
        assert!(oracle.max_query_size_seen() <= gamma);
        assert!(report.tests_used <= gamma_test_bound(n, k, gamma), "seed {seed}");
        assert!(oracle.replay_matches());
    }
}

#[test]
fn delta_accepts_an_upper_bound_on_k() {
    for seed in 0..500u64 {
        let rng = &mut rng_from_seed(seed);
        let n = 400;
        let k_true = rng.random_range(0..=10);
        let k_max = k_true + rng.random_range(1..=10);
        let sigma = draw_uniform_k_sparse(n, k_true, rng).unwrap();
        let mut oracle = TestOracle::new(sigma.clone());
        let report = adaptive_delta(n, k_max, 3, &mut oracle).unwrap();
        assert!(report.matches(&sigma));
        assert!(report.tests_used <= delta_test_bound(n, k_max, 3));
    }
}

#[test]
fn gamma_matches_reference_simulation() {
    for seed in 0..2_000u64 {
        let rng = &mut rng_from_seed(seed);
        let n = rng.random_range(1..=300);
        let k = rng.random_range(0..=n.min(20));
        let gamma = rng.random_range(1..=20);
        let sigma = draw_uniform_k_sparse(n, k, rng).unwrap();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut oracle = TestOracle::new(sigma.clone());
        let report = adaptive_gamma_ordered(&order, gamma, &mut oracle).unwrap();
        let (tests, found) = common::gamma_adaptive_tests(&order, gamma, sigma.status());
        assert_eq!(report.tests_used, tests, "seed {seed}");
        assert_eq!(report.declared_infected.iter().copied().collect::<std::collections::BTreeSet<_>>(), found);
    }
}

/// Visits every permutation of `items` (Heap's algorithm).
fn for_each_permutation(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k <= 1 {
        visit(items);
        return;
    }
    for i in 0..k {
        for_each_permutation(items, k - 1, visit);
        let j = if k.is_multiple_of(2) { i } else { 0 };
        items.swap(j, k - 1);
    }
}

#[test]
fn eight_by_four_distribution_by_enumeration() {
    // Every infected position under every grouping permutation.
    let (n, gamma) = (8, 4);
    let mut expected: BTreeMap<usize, u64> = BTreeMap::new();
    let mut library: BTreeMap<usize, u64> = BTreeMap::new();
    for infected in 0..n {
        let status = common::status_from(n, &[infected]);
        let sigma = InfectionVector::from_infected(n, &[infected]).unwrap();
        let mut order: Vec<usize> = (0..n).collect();
        for_each_permutation(&mut order, n, &mut |perm| {
            let (tests, _) = common::gamma_adaptive_tests(perm, gamma, &status);
            *expected.entry(tests).or_default() += 1;
            let mut oracle = TestOracle::new(sigma.clone());
            let report = adaptive_gamma_ordered(perm, gamma, &mut oracle).unwrap();
            assert!(report.matches(&sigma));
            *library.entry(report.tests_used).or_default() += 1;
        });
    }
    assert_eq!(expected.values().sum::<u64>(), 8 * 40_320);
    assert_eq!(library, expected);
    assert!(expected.keys().all(|t| (4..=7).contains(t)));

    // The seeded harness must reproduce the same law.
    let config = SweepConfig {
        setting: Setting::GammaAdaptive,
        n,
        theta: None,
        k: Some(1),
        constraint: gamma,
        m_grid: vec![],
        trials: 2_000,
        master_seed: 3,
        decoder: Decoder::Dd,
        timing: false,
    };
    let report = run_adaptive_cdf(&config, None).unwrap();
    let total: u64 = expected.values().sum();
    for record in &report.records {
        let p = *expected.get(&record.tests_used).unwrap_or(&0) as f64 / total as f64;
        assert!(p > 0.0, "tests_used {} is outside the exact support", record.tests_used);
        let freq = record.count as f64 / config.trials as f64;
        assert!((freq - p).abs() < 0.05, "tests_used {}: {freq} vs {p}", record.tests_used);
    }
    assert_eq!(report.records.last().unwrap().cumulative_fraction, 1.0);
}
