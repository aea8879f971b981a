mod common;

use std::collections::BTreeSet;

use pooltest::decode::decode_both;
use pooltest::{
    brute_force_optimal_success, classify, comp, compute_outcomes, count_consistent, dd,
    dd_success_predicate, draw_uniform_k_sparse, rng_from_seed, InfectionVector, PoolingDesign,
};
use rand::Rng;

fn set(v: &[usize]) -> BTreeSet<usize> {
    v.iter().copied().collect()
}

fn random_instance(seed: u64, max_n: usize) -> (PoolingDesign, InfectionVector) {
    let rng = &mut rng_from_seed(seed);
    let design = common::random_design(rng, max_n);
    let k = rng.random_range(0..=design.n().min(8));
    let sigma = draw_uniform_k_sparse(design.n(), k, rng).unwrap();
    (design, sigma)
}

#[test]
fn sandwich_on_100k_instances() {
    for seed in 0..100_000u64 {
        let (design, sigma) = random_instance(seed, 200);
        let (d, c) = decode_both(&design, &sigma).unwrap();
        let truth = set(&sigma.infected());
        assert!(set(&d.declared_infected).is_subset(&truth), "seed {seed}");
        // Untested infected individuals are declared uninfected by COMP too.
        let tested_truth: BTreeSet<usize> =
            truth.iter().copied().filter(|&x| !design.tests_of(x).is_empty()).collect();
        assert!(tested_truth.is_subset(&set(&c.declared_infected)), "seed {seed}");
        if design.untested_count() == 0 {
            assert!(truth.is_subset(&set(&c.declared_infected)), "seed {seed}");
        }
    }
}

#[test]
fn decoders_and_classes_match_oracles() {
    for seed in 0..10_000u64 {
        let (design, sigma) = random_instance(seed, 50);
        let n = design.n();
        let tests = common::tests_of_design(&design);
        let status = sigma.status().to_vec();
        let out = compute_outcomes(&design, &sigma).unwrap();
        assert_eq!(out.results(), common::outcomes(&tests, &status).as_slice());

        let d = dd(&design, &out).unwrap();
        let c = comp(&design, &out).unwrap();
        assert_eq!(set(&d.declared_infected), common::dd(n, &tests, out.results()), "seed {seed}");
        assert_eq!(set(&c.declared_infected), common::comp(n, &tests, out.results()), "seed {seed}");

        let cls = classify(&design, &sigma, &out).unwrap();
        let expected = common::classify(n, &tests, &status);
        assert_eq!(set(&cls.v0_minus), expected.v0_minus, "seed {seed}");
        assert_eq!(set(&cls.v0_plus), expected.v0_plus, "seed {seed}");
        assert_eq!(set(&cls.v1_minus_minus), expected.v1_minus_minus, "seed {seed}");
        assert_eq!(set(&cls.v1_plus), expected.v1_plus, "seed {seed}");

        // V0- and V0+ partition the uninfected.
        let uninfected: BTreeSet<usize> = (0..n).filter(|&x| !sigma.is_infected(x)).collect();
        let union: BTreeSet<usize> = set(&cls.v0_minus).union(&set(&cls.v0_plus)).copied().collect();
        assert_eq!(union, uninfected);
        assert!(set(&cls.v0_minus).is_disjoint(&set(&cls.v0_plus)));

        // DD succeeds exactly when every infected individual is in V1--.
        assert_eq!(d.matches(&sigma), dd_success_predicate(&cls), "seed {seed}");
    }
}

#[test]
fn outcomes_are_monotone_under_supersets() {
    for seed in 0..5_000u64 {
        let (design, sigma) = random_instance(seed, 60);
        let rng = &mut rng_from_seed(seed ^ 0xabcdef);
        let mut status = sigma.status().to_vec();
        for s in status.iter_mut() {
            if rng.random_bool(0.2) {
                *s = true;
            }
        }
        let bigger = InfectionVector::from_status(status);
        let before = compute_outcomes(&design, &sigma).unwrap();
        let after = compute_outcomes(&design, &bigger).unwrap();
        assert!(before.results().iter().zip(after.results()).all(|(&b, &a)| !b || a));
    }
}

#[test]
fn count_consistent_matches_bitmask_scan() {
    for seed in 0..2_000u64 {
        let (design, sigma) = random_instance(seed, 14);
        let tests = common::tests_of_design(&design);
        let out = compute_outcomes(&design, &sigma).unwrap();
        for k in [sigma.k(), sigma.k() + 1, sigma.k().saturating_sub(1)] {
            if k > design.n() {
                continue;
            }
            let z = count_consistent(&design, &out, k).unwrap();
            assert_eq!(z, common::count_consistent(design.n(), &tests, out.results(), k), "seed {seed}, k {k}");
        }
    }
}

#[test]
fn nishimori_lower_bound() {
    for seed in 0..5_000u64 {
        let (design, sigma) = random_instance(seed, 20);
        let out = compute_outcomes(&design, &sigma).unwrap();
        let cls = classify(&design, &sigma, &out).unwrap();
        let z = count_consistent(&design, &out, sigma.k()).unwrap();
        let bound = (cls.v1_plus.len() * cls.v0_plus.len()).max(1) as u64;
        assert!(z >= bound, "seed {seed}: Z = {z} < {bound}");
    }
}

#[test]
fn optimal_success_matches_nishimori_identity() {
    for seed in 0..300u64 {
        let rng = &mut rng_from_seed(seed);
        let design = common::random_design(rng, 12);
        let k = rng.random_range(0..=design.n().min(3));
        let tests = common::tests_of_design(&design);
        let fast = brute_force_optimal_success(&design, k).unwrap();
        let slow = common::optimal_success(design.n(), &tests, k);
        assert!((fast - slow).abs() <= 1e-12, "seed {seed}: {fast} vs {slow}");
    }
}

#[test]
fn optimal_decoder_dominates_dd_and_comp() {
    let trials = 10_000u64;
    for seed in 0..5u64 {
        let rng = &mut rng_from_seed(seed);
        let n = 14;
        let design = pooltest::build_delta_regular(n, 7, 2, rng).unwrap();
        let k = 2;
        let optimum = brute_force_optimal_success(&design, k).unwrap();
        let (mut dd_hits, mut comp_hits) = (0u64, 0u64);
        for t in 0..trials {
            let sigma = draw_uniform_k_sparse(n, k, &mut rng_from_seed(seed * trials + t + 1_000_000)).unwrap();
            let (d, c) = decode_both(&design, &sigma).unwrap();
            dd_hits += u64::from(d.matches(&sigma));
            comp_hits += u64::from(c.matches(&sigma));
        }
        for hits in [dd_hits, comp_hits] {
            let p = hits as f64 / trials as f64;
            let se = (p * (1.0 - p) / trials as f64).sqrt();
            assert!(optimum >= p - 3.0 * se, "seed {seed}: optimum {optimum} < empirical {p}");
        }
    }
}
