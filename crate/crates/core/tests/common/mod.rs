//! Independent reference implementations used as test oracles.
//!
//! Everything here works from plain test lists (`Vec<Vec<usize>>`) and
//! boolean vectors, shares no code with the library, and favours obviously
//! correct brute force over speed.
#![allow(dead_code)]

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use pooltest::PoolingDesign;
use rand::Rng;

pub fn tests_of_design(design: &PoolingDesign) -> Vec<Vec<usize>> {
    (0..design.m()).map(|a| design.items_of(a).to_vec()).collect()
}

pub fn status_from(n: usize, infected: &[usize]) -> Vec<bool> {
    let mut s = vec![false; n];
    for &x in infected {
        s[x] = true;
    }
    s
}

pub fn outcomes(tests: &[Vec<usize>], status: &[bool]) -> Vec<bool> {
    tests.iter().map(|t| t.iter().any(|&x| status[x])).collect()
}

fn tested_items(n: usize, tests: &[Vec<usize>]) -> Vec<bool> {
    let mut seen = vec![false; n];
    for t in tests {
        for &x in t {
            seen[x] = true;
        }
    }
    seen
}

/// COMP: everyone tested and never in a negative test.
pub fn comp(n: usize, tests: &[Vec<usize>], out: &[bool]) -> BTreeSet<usize> {
    let tested = tested_items(n, tests);
    let mut cleared = vec![false; n];
    for (t, &pos) in tests.iter().zip(out) {
        if !pos {
            for &x in t {
                cleared[x] = true;
            }
        }
    }
    (0..n).filter(|&x| tested[x] && !cleared[x]).collect()
}

/// DD: the sole uncleared distinct member of a positive test.
pub fn dd(n: usize, tests: &[Vec<usize>], out: &[bool]) -> BTreeSet<usize> {
    let candidates = comp(n, tests, out);
    let mut declared = BTreeSet::new();
    for (t, &pos) in tests.iter().zip(out) {
        if pos {
            let remaining: BTreeSet<usize> = t.iter().copied().filter(|x| candidates.contains(x)).collect();
            if remaining.len() == 1 {
                declared.extend(remaining);
            }
        }
    }
    declared
}

#[derive(Debug, Default, PartialEq, Eq)]
pub struct Classes {
    pub v0_minus: BTreeSet<usize>,
    pub v0_plus: BTreeSet<usize>,
    pub v1_minus_minus: BTreeSet<usize>,
    pub v1_plus: BTreeSet<usize>,
}

/// Direct reading of the disguise definitions over distinct test members.
/// Infected individuals in neither V1-- nor V1+ are left out.
pub fn classify(n: usize, tests: &[Vec<usize>], status: &[bool]) -> Classes {
    let out = outcomes(tests, status);
    let tests_of = |x: usize| -> Vec<usize> { (0..tests.len()).filter(|&a| tests[a].contains(&x)).collect() };
    let mut c = Classes::default();
    for x in (0..n).filter(|&x| !status[x]) {
        if tests_of(x).iter().any(|&a| !out[a]) {
            c.v0_minus.insert(x);
        } else {
            c.v0_plus.insert(x);
        }
    }
    for x in (0..n).filter(|&x| status[x]) {
        let others = |a: usize| -> BTreeSet<usize> { tests[a].iter().copied().filter(|&y| y != x).collect() };
        let mine = tests_of(x);
        if mine.iter().any(|&a| others(a).is_subset(&c.v0_minus)) {
            c.v1_minus_minus.insert(x);
        } else if mine.iter().all(|&a| others(a).iter().any(|&y| status[y])) {
            c.v1_plus.insert(x);
        }
    }
    c
}

/// Number of k-sets consistent with `out`, by scanning every bitmask.
pub fn count_consistent(n: usize, tests: &[Vec<usize>], out: &[bool], k: usize) -> u64 {
    assert!(n <= 24, "oracle scans 2^n masks");
    let mut count = 0;
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let status: Vec<bool> = (0..n).map(|x| mask >> x & 1 == 1).collect();
        if outcomes(tests, &status) == out {
            count += 1;
        }
    }
    count
}

/// Success of the optimal decoder by the Nishimori identity: mean of 1/Z
/// over all k-sets.
pub fn optimal_success(n: usize, tests: &[Vec<usize>], k: usize) -> f64 {
    let mut total = 0.0;
    let mut sets = 0u64;
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let status: Vec<bool> = (0..n).map(|x| mask >> x & 1 == 1).collect();
        let out = outcomes(tests, &status);
        total += 1.0 / count_consistent(n, tests, &out, k) as f64;
        sets += 1;
    }
    total / sets as f64
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Counting bound as an exact rational, converted to f64 at the end.
pub fn exact_success_bound(n: u64, k: u64, m: u64, delta: u64) -> f64 {
    let top = (delta * k).min(m);
    let num: BigUint = (0..=top).map(|i| binomial(m, i)).sum();
    let den = binomial(n, k);
    if num >= den {
        return 1.0;
    }
    // 128 extra bits keep the quotient far more precise than an f64.
    let shift = 128u64;
    let quotient = (num << shift) / den;
    let bits = quotient.bits();
    let drop = bits.saturating_sub(64);
    let mantissa = (quotient >> drop).to_u64().unwrap() as f64;
    mantissa * 2f64.powi(drop as i32 - shift as i32)
}

/// Algorithms 3 and 4 simulated from scratch; returns the number of tests.
pub fn gamma_adaptive_tests(order: &[usize], gamma: usize, status: &[bool]) -> (usize, BTreeSet<usize>) {
    let mut tests = 0;
    let mut found = BTreeSet::new();
    let positive = |g: &[usize]| g.iter().any(|&x| status[x]);
    for start in (0..order.len()).step_by(gamma) {
        let mut group: Vec<usize> = order[start..(start + gamma).min(order.len())].to_vec();
        loop {
            if group.is_empty() {
                break;
            }
            tests += 1;
            if !positive(&group) {
                break;
            }
            let mut cur = group.clone();
            while cur.len() > 1 {
                let half = cur.len() / 2;
                tests += 1;
                cur = if positive(&cur[..half]) { cur[..half].to_vec() } else { cur[half..].to_vec() };
            }
            found.insert(cur[0]);
            group.retain(|&x| x != cur[0]);
        }
    }
    (tests, found)
}

/// Random explicit design: every individual joins `d_x <= delta` tests drawn
/// with replacement, so multi-edges and untested individuals both occur.
pub fn random_bounded_design<R: Rng>(n: usize, m: usize, delta: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut tests = vec![Vec::new(); m];
    for x in 0..n {
        let d = rng.random_range(0..=delta);
        for _ in 0..d {
            tests[rng.random_range(0..m)].push(x);
        }
    }
    tests
}

pub fn random_k_set<R: Rng>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        all.swap(i, j);
    }
    all.truncate(k);
    all
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// A random library-built design of one of the three kinds, with `n <= max_n`.
pub fn random_design<R: Rng>(rng: &mut R, max_n: usize) -> PoolingDesign {
    let n = rng.random_range(2..=max_n);
    match rng.random_range(0..3) {
        0 => {
            let m = rng.random_range(1..=n);
            let delta = rng.random_range(1..=4);
            pooltest::build_delta_regular(n, m, delta, rng).unwrap()
        }
        1 => {
            let gamma = rng.random_range(1..=n.min(6));
            let step = n / gcd(n, gamma);
            // Item degree m*gamma/n stays at most 4.
            let max_j = (4 * n / (step * gamma)).max(1);
            let m = step * rng.random_range(1..=max_j);
            pooltest::build_gamma_config(n, m, gamma, rng).unwrap()
        }
        _ => {
            let gamma = rng.random_range(2..=5);
            let (lo, hi) = pooltest::design::matching_m_range(n, gamma);
            let feasible: Vec<usize> = (lo.max(1)..=hi.max(lo))
                .filter(|m| (m * (gamma - 1)) % 2 == 0 && *m >= lo && *m <= hi)
                .filter(|&m| pooltest::design::matching_set_aside(n, m, gamma).is_ok())
                .collect();
            if feasible.is_empty() {
                let m = rng.random_range(1..=n);
                return pooltest::build_delta_regular(n, m, 2, rng).unwrap();
            }
            let m = feasible[rng.random_range(0..feasible.len())];
            pooltest::build_gamma_matching(n, m, gamma, rng).unwrap()
        }
    }
}
