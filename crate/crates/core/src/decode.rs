//! Non-adaptive decoders and exhaustive oracles for small instances.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::design::PoolingDesign;
use crate::error::{Error, Result};
use crate::model::{compute_outcomes, Classification, InfectionVector, OutcomeVector};

/// Largest population the exhaustive routines accept.
pub const ENUMERATION_MAX_N: usize = 30;
/// Largest number of `k`-subsets the exhaustive routines accept.
pub const ENUMERATION_MAX_SUBSETS: f64 = 1e7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "COMP")]
    Comp,
    #[serde(rename = "DD")]
    Dd,
    BruteForceOptimal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeResult {
    /// Ascending indices declared infected.
    pub declared_infected: Vec<usize>,
    pub algorithm: Algorithm,
    /// Individuals in no test; always declared uninfected.
    pub untested: usize,
}

impl DecodeResult {
    pub fn matches(&self, truth: &InfectionVector) -> bool {
        self.declared_infected.len() == truth.k()
            && self.declared_infected.iter().all(|&x| truth.is_infected(x))
    }
}

fn check_outcome_length(design: &PoolingDesign, outcomes: &OutcomeVector) -> Result<()> {
    if outcomes.m() != design.m() {
        return Err(Error::param(format!(
            "outcome vector has length {} but design has m = {}",
            outcomes.m(),
            design.m()
        )));
    }
    Ok(())
}

/// Marks every individual that appears in a negative test.
fn cleared_by_negatives(design: &PoolingDesign, outcomes: &OutcomeVector) -> Vec<bool> {
    let mut cleared = vec![false; design.n()];
    for a in (0..design.m()).filter(|&a| !outcomes.is_positive(a)) {
        for &x in design.items_of(a) {
            cleared[x] = true;
        }
    }
    cleared
}

/// COMP: everything not in a negative test is declared infected, except
/// untested individuals.
pub fn comp(design: &PoolingDesign, outcomes: &OutcomeVector) -> Result<DecodeResult> {
    check_outcome_length(design, outcomes)?;
    let cleared = cleared_by_negatives(design, outcomes);
    let declared_infected = (0..design.n())
        .filter(|&x| !cleared[x] && design.item_degree(x) > 0)
        .collect();
    Ok(DecodeResult {
        declared_infected,
        algorithm: Algorithm::Comp,
        untested: design.untested_count(),
    })
}

/// Definite defectives. After clearing individuals in negative tests, the
/// sole remaining distinct member of any positive test is declared infected.
pub fn dd(design: &PoolingDesign, outcomes: &OutcomeVector) -> Result<DecodeResult> {
    check_outcome_length(design, outcomes)?;
    let cleared = cleared_by_negatives(design, outcomes);
    let mut infected = vec![false; design.n()];
    for a in (0..design.m()).filter(|&a| outcomes.is_positive(a)) {
        let mut remaining = design.distinct_items_of(a).filter(|&x| !cleared[x]);
        if let (Some(x), None) = (remaining.next(), remaining.next()) {
            infected[x] = true;
        }
    }
    let declared_infected = (0..design.n()).filter(|&x| infected[x]).collect();
    Ok(DecodeResult {
        declared_infected,
        algorithm: Algorithm::Dd,
        untested: design.untested_count(),
    })
}

/// DD succeeds exactly when every infected individual is easy to explain.
pub fn dd_success_predicate(classification: &Classification) -> bool {
    classification.v1_minus_minus == classification.infected
}

fn ln_choose(n: usize, k: usize) -> f64 {
    statrs::function::factorial::ln_binomial(n as u64, k as u64)
}

fn check_enumeration_guard(n: usize, k: usize) -> Result<()> {
    if n > ENUMERATION_MAX_N {
        return Err(Error::Capacity(format!(
            "n = {n} exceeds the limit of {ENUMERATION_MAX_N}"
        )));
    }
    if k > n {
        return Err(Error::param(format!("k = {k} exceeds n = {n}")));
    }
    let subsets = ln_choose(n, k).exp();
    if subsets > ENUMERATION_MAX_SUBSETS * (1.0 + 1e-9) {
        return Err(Error::Capacity(format!(
            "C({n}, {k}) ~ {subsets:.3e} exceeds the limit of {ENUMERATION_MAX_SUBSETS:.0e}"
        )));
    }
    Ok(())
}

/// Visits every `k`-subset of `0..n` in lexicographic order as a bitmask.
fn for_each_subset(n: usize, k: usize, mut visit: impl FnMut(u64)) {
    fn rec(start: usize, n: usize, left: usize, mask: u64, visit: &mut dyn FnMut(u64)) {
        if left == 0 {
            visit(mask);
            return;
        }
        for x in start..=(n - left) {
            rec(x + 1, n, left - 1, mask | (1 << x), visit);
        }
    }
    rec(0, n, k, 0, &mut visit);
}

fn test_masks(design: &PoolingDesign) -> Vec<u64> {
    (0..design.m())
        .map(|a| design.items_of(a).iter().fold(0u64, |acc, &x| acc | (1 << x)))
        .collect()
}

/// Exact number of weight-`k` vectors producing `outcomes` on `design`.
///
/// Individuals in negative tests are excluded up front; the remaining
/// candidates are enumerated in lexicographic order, pruning a branch as soon
/// as some positive test can no longer be hit.
pub fn count_consistent(design: &PoolingDesign, outcomes: &OutcomeVector, k: usize) -> Result<u64> {
    check_outcome_length(design, outcomes)?;
    check_enumeration_guard(design.n(), k)?;
    let masks = test_masks(design);
    let forbidden = (0..design.m())
        .filter(|&a| !outcomes.is_positive(a))
        .fold(0u64, |acc, a| acc | masks[a]);
    let candidates: Vec<usize> = (0..design.n()).filter(|&x| forbidden & (1 << x) == 0).collect();

    // Positive tests, each as a mask plus the position in `candidates` after
    // which it can no longer be hit.
    let mut positives: Vec<(u64, usize)> = Vec::new();
    for a in (0..design.m()).filter(|&a| outcomes.is_positive(a)) {
        match candidates.iter().rposition(|&x| masks[a] & (1 << x) != 0) {
            Some(last) => positives.push((masks[a], last)),
            None => return Ok(0),
        }
    }
    positives.sort_by_key(|&(_, last)| last);

    struct Search<'a> {
        candidates: &'a [usize],
        positives: &'a [(u64, usize)],
        count: u64,
    }

    impl Search<'_> {
        fn rec(&mut self, pos: usize, left: usize, mask: u64, checked: usize) {
            // Every positive test whose last candidate precedes `pos` must be hit.
            let mut checked = checked;
            while checked < self.positives.len() && self.positives[checked].1 < pos {
                if self.positives[checked].0 & mask == 0 {
                    return;
                }
                checked += 1;
            }
            if left == 0 {
                if self.positives[checked..].iter().all(|&(t, _)| t & mask != 0) {
                    self.count += 1;
                }
                return;
            }
            if self.candidates.len() - pos < left {
                return;
            }
            for i in pos..=(self.candidates.len() - left) {
                let bit = 1u64 << self.candidates[i];
                self.rec(i + 1, left - 1, mask | bit, checked);
            }
        }
    }

    if candidates.len() < k {
        return Ok(0);
    }
    let mut search = Search {
        candidates: &candidates,
        positives: &positives,
        count: 0,
    };
    search.rec(0, k, 0, 0);
    Ok(search.count)
}

fn outcome_pattern(masks: &[u64], sigma: u64) -> Vec<u64> {
    let mut words = vec![0u64; masks.len().div_ceil(64)];
    for (a, &t) in masks.iter().enumerate() {
        if t & sigma != 0 {
            words[a / 64] |= 1 << (a % 64);
        }
    }
    words
}

/// Success probability of the optimal decoder on `design` for a uniform
/// weight-`k` ground truth: the average over `sigma` of `1 / Z_k(sigma)`.
///
/// `Z_k(sigma)` is the size of the class of weight-`k` vectors sharing the
/// outcome pattern of `sigma`; classes are tallied in one pass over all
/// subsets.
pub fn brute_force_optimal_success(design: &PoolingDesign, k: usize) -> Result<f64> {
    check_enumeration_guard(design.n(), k)?;
    let masks = test_masks(design);
    let mut classes: HashMap<Vec<u64>, u64> = HashMap::new();
    let mut total = 0u64;
    for_each_subset(design.n(), k, |sigma| {
        *classes.entry(outcome_pattern(&masks, sigma)).or_insert(0) += 1;
        total += 1;
    });
    // Each class of size Z contributes Z * (1/Z) = 1.
    Ok(classes.len() as f64 / total as f64)
}

/// Every weight-`k` vector of length `n`, in lexicographic subset order.
pub fn enumerate_k_sparse(n: usize, k: usize) -> Result<Vec<InfectionVector>> {
    check_enumeration_guard(n, k)?;
    let mut out = Vec::new();
    for_each_subset(n, k, |mask| {
        out.push(InfectionVector::from_status(
            (0..n).map(|x| mask & (1 << x) != 0).collect(),
        ));
    });
    Ok(out)
}

/// Convenience: outcomes of `sigma`, then DD and COMP.
pub fn decode_both(
    design: &PoolingDesign,
    sigma: &InfectionVector,
) -> Result<(DecodeResult, DecodeResult)> {
    let outcomes = compute_outcomes(design, sigma)?;
    Ok((dd(design, &outcomes)?, comp(design, &outcomes)?))
}
