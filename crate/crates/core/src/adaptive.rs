//! Adaptive testing: Δ-divisible non-binary splitting, and Γ-sized group
//! testing with binary splitting.
//!
//! Both algorithms talk to a [`TestOracle`], which answers pooled queries from
//! the hidden truth and refuses any query that would break the per-item or
//! per-query budget.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::InfectionVector;

/// Stateful answerer of adaptive pooled tests.
#[derive(Clone, Debug)]
pub struct TestOracle {
    truth: InfectionVector,
    tests_performed: usize,
    per_item_test_count: Vec<usize>,
    max_query_size_seen: usize,
    query_log: Option<Vec<(Vec<usize>, bool)>>,
    item_budget: Option<usize>,
    size_limit: Option<usize>,
}

impl TestOracle {
    pub fn new(truth: InfectionVector) -> Self {
        let n = truth.n();
        TestOracle {
            truth,
            tests_performed: 0,
            per_item_test_count: vec![0; n],
            max_query_size_seen: 0,
            query_log: None,
            item_budget: None,
            size_limit: None,
        }
    }

    /// Records every query and its answer.
    pub fn with_log(mut self) -> Self {
        self.query_log = Some(Vec::new());
        self
    }

    /// Refuses queries that would put any individual into more than `budget` tests.
    pub fn enforce_item_budget(&mut self, budget: usize) {
        self.item_budget = Some(budget);
    }

    /// Refuses queries with more than `limit` members.
    pub fn enforce_size_limit(&mut self, limit: usize) {
        self.size_limit = Some(limit);
    }

    pub fn n(&self) -> usize {
        self.truth.n()
    }

    pub fn truth(&self) -> &InfectionVector {
        &self.truth
    }

    pub fn tests_performed(&self) -> usize {
        self.tests_performed
    }

    pub fn per_item_test_count(&self) -> &[usize] {
        &self.per_item_test_count
    }

    pub fn max_tests_per_item(&self) -> usize {
        self.per_item_test_count.iter().copied().max().unwrap_or(0)
    }

    pub fn max_query_size_seen(&self) -> usize {
        self.max_query_size_seen
    }

    pub fn query_log(&self) -> Option<&[(Vec<usize>, bool)]> {
        self.query_log.as_deref()
    }

    /// Pools `items` into one test. Fails without side effects if the query
    /// references an unknown individual or would exceed a budget.
    pub fn query(&mut self, items: &[usize]) -> Result<bool> {
        if let Some(limit) = self.size_limit {
            if items.len() > limit {
                return Err(Error::integrity(format!(
                    "query of size {} exceeds the test-size limit {limit}",
                    items.len()
                )));
            }
        }
        for &x in items {
            if x >= self.n() {
                return Err(Error::integrity(format!(
                    "query references individual {x} but n = {}",
                    self.n()
                )));
            }
            if let Some(budget) = self.item_budget {
                if self.per_item_test_count[x] >= budget {
                    return Err(Error::integrity(format!(
                        "individual {x} would exceed its budget of {budget} tests"
                    )));
                }
            }
        }
        let answer = items.iter().any(|&x| self.truth.is_infected(x));
        self.tests_performed += 1;
        self.max_query_size_seen = self.max_query_size_seen.max(items.len());
        for &x in items {
            self.per_item_test_count[x] += 1;
        }
        if let Some(log) = self.query_log.as_mut() {
            log.push((items.to_vec(), answer));
        }
        Ok(answer)
    }

    /// Checks a located individual against the truth without spending a test.
    fn audit_infected(&self, x: usize) -> Result<()> {
        if self.truth.is_infected(x) {
            Ok(())
        } else {
            Err(Error::integrity(format!(
                "binary splitting settled on uninfected individual {x}; \
                 the searched group had no infected member"
            )))
        }
    }

    /// Re-evaluates every logged query against the truth.
    pub fn replay_matches(&self) -> bool {
        self.query_log.as_ref().is_none_or(|log| {
            log.iter()
                .all(|(q, ans)| q.iter().any(|&x| self.truth.is_infected(x)) == *ans)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdaptiveReport {
    pub declared_infected: Vec<usize>,
    pub tests_used: usize,
    pub max_tests_per_item: usize,
    pub max_test_size: usize,
}

impl AdaptiveReport {
    fn from_oracle(mut declared_infected: Vec<usize>, oracle: &TestOracle) -> Self {
        declared_infected.sort_unstable();
        AdaptiveReport {
            declared_infected,
            tests_used: oracle.tests_performed(),
            max_tests_per_item: oracle.max_tests_per_item(),
            max_test_size: oracle.max_query_size_seen(),
        }
    }

    pub fn matches(&self, truth: &InfectionVector) -> bool {
        self.declared_infected == truth.infected()
    }
}

/// Splits `items` into `parts` contiguous chunks whose sizes differ by at most one.
fn balanced_partition(items: &[usize], parts: usize) -> impl Iterator<Item = &[usize]> {
    let base = items.len() / parts;
    let extra = items.len() % parts;
    let mut start = 0;
    (0..parts).map(move |i| {
        let len = base + usize::from(i < extra);
        let chunk = &items[start..start + len];
        start += len;
        chunk
    })
}

/// Initial group size `round((n/k)^((Δ-1)/Δ))`, clamped to `[1, n]`.
pub fn initial_group_size(n: usize, k: usize, delta: usize) -> usize {
    let exponent = (delta as f64 - 1.0) / delta as f64;
    let size = (n as f64 / k as f64).powf(exponent).round() as usize;
    size.clamp(1, n.max(1))
}

/// Smallest arity `s` with `s^(Δ-1) >= group_size`, so Δ-1 rounds of
/// splitting into `s` parts isolate every individual.
pub fn split_arity(group_size: usize, delta: usize) -> usize {
    let rounds = u32::try_from(delta - 1).unwrap_or(u32::MAX);
    let mut s = 1usize;
    while s.checked_pow(rounds).is_some_and(|p| p < group_size) {
        s += 1;
    }
    s
}

/// Deterministic test-count bound of [`adaptive_delta`]:
/// `ceil(n/ñ) + (Δ-1) k s`.
pub fn delta_test_bound(n: usize, k: usize, delta: usize) -> usize {
    let group = initial_group_size(n, k, delta);
    n.div_ceil(group) + (delta - 1) * k * split_arity(group, delta)
}

/// Test-count bound of [`adaptive_gamma`]: `ceil(n/Γ) + k (ceil(log2 Γ) + 2)`.
pub fn gamma_test_bound(n: usize, k: usize, gamma: usize) -> usize {
    n.div_ceil(gamma) + k * (ceil_log2(gamma) + 2)
}

pub fn ceil_log2(x: usize) -> usize {
    if x <= 1 {
        0
    } else {
        (usize::BITS - (x - 1).leading_zeros()) as usize
    }
}

/// Δ-divisible adaptive recovery with known `k` (or an upper bound on it).
///
/// Individuals are cut into `ceil(n/ñ)` balanced groups and each group is
/// tested once; every positive group is then split into `s` balanced parts
/// per stage for `Δ-1` stages, discarding negative parts and stopping on
/// positive singletons. No individual is tested more than Δ times.
pub fn adaptive_delta(
    n: usize,
    k: usize,
    delta: usize,
    oracle: &mut TestOracle,
) -> Result<AdaptiveReport> {
    if oracle.n() != n {
        return Err(Error::param(format!("oracle holds {} individuals, expected n = {n}", oracle.n())));
    }
    if k == 0 || k > n {
        return Err(Error::param(format!("adaptive_delta needs 1 <= k <= n, got k = {k}, n = {n}")));
    }
    if delta < 2 {
        return Err(Error::param(format!(
            "adaptive_delta needs delta >= 2, got {delta}; with one test per individual only individual testing identifies the infected set"
        )));
    }
    oracle.enforce_item_budget(delta);

    let group = initial_group_size(n, k, delta);
    let arity = split_arity(group, delta);
    let everyone: Vec<usize> = (0..n).collect();

    let mut declared = Vec::new();
    let mut live: Vec<Vec<usize>> = Vec::new();
    let mut keep = |chunk: &[usize], oracle: &mut TestOracle, live: &mut Vec<Vec<usize>>| -> Result<()> {
        if oracle.query(chunk)? {
            if chunk.len() == 1 {
                declared.push(chunk[0]);
            } else {
                live.push(chunk.to_vec());
            }
        }
        Ok(())
    };

    for chunk in balanced_partition(&everyone, n.div_ceil(group)) {
        keep(chunk, oracle, &mut live)?;
    }
    for _stage in 1..delta {
        if live.is_empty() {
            break;
        }
        let mut next = Vec::new();
        for g in &live {
            for part in balanced_partition(g, arity.min(g.len())) {
                keep(part, oracle, &mut next)?;
            }
        }
        live = next;
    }
    if !live.is_empty() {
        return Err(Error::integrity(format!(
            "{} positive groups remain unresolved after {} stages",
            live.len(),
            delta - 1
        )));
    }
    Ok(AdaptiveReport::from_oracle(declared, oracle))
}

/// Halving search for one infected member of `group`, which must contain one.
/// The lower half (rounded down) is tested at every step.
pub fn binary_splitting(group: &[usize], oracle: &mut TestOracle) -> Result<usize> {
    if group.is_empty() {
        return Err(Error::integrity("binary splitting on an empty group"));
    }
    let mut current = group;
    while current.len() > 1 {
        let (lower, upper) = current.split_at(current.len() / 2);
        current = if oracle.query(lower)? { lower } else { upper };
    }
    oracle.audit_infected(current[0])?;
    Ok(current[0])
}

/// Γ-sized adaptive recovery over a random grouping; `k` need not be known.
pub fn adaptive_gamma<R: Rng + ?Sized>(
    n: usize,
    gamma: usize,
    oracle: &mut TestOracle,
    rng: &mut R,
) -> Result<AdaptiveReport> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    adaptive_gamma_ordered(&order, gamma, oracle)
}

/// [`adaptive_gamma`] with the grouping given as an ordering of the
/// population: consecutive runs of `gamma` form the groups, and a short final
/// group is tested as-is.
pub fn adaptive_gamma_ordered(
    order: &[usize],
    gamma: usize,
    oracle: &mut TestOracle,
) -> Result<AdaptiveReport> {
    if gamma == 0 {
        return Err(Error::param("gamma must be at least 1"));
    }
    if order.len() != oracle.n() {
        return Err(Error::param(format!(
            "ordering covers {} individuals but the oracle holds {}",
            order.len(),
            oracle.n()
        )));
    }
    oracle.enforce_size_limit(gamma);
    let mut declared = Vec::new();
    for chunk in order.chunks(gamma) {
        let mut group = chunk.to_vec();
        while !group.is_empty() && oracle.query(&group)? {
            let found = binary_splitting(&group, oracle)?;
            declared.push(found);
            group.retain(|&x| x != found);
        }
    }
    Ok(AdaptiveReport::from_oracle(declared, oracle))
}
