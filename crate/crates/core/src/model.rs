//! Ground truth, test outcomes and the four individual types.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design::PoolingDesign;
use crate::error::{Error, Result};

/// Infection status of every individual.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfectionVector {
    status: Vec<bool>,
    k: usize,
}

impl InfectionVector {
    pub fn from_status(status: Vec<bool>) -> Self {
        let k = status.iter().filter(|&&s| s).count();
        InfectionVector { status, k }
    }

    /// Vector of length `n` infected exactly at `infected`.
    pub fn from_infected(n: usize, infected: &[usize]) -> Result<Self> {
        let mut status = vec![false; n];
        for &x in infected {
            if x >= n {
                return Err(Error::param(format!("infected index {x} out of range for n = {n}")));
            }
            status[x] = true;
        }
        Ok(Self::from_status(status))
    }

    pub fn n(&self) -> usize {
        self.status.len()
    }

    /// Number of infected individuals.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn is_infected(&self, x: usize) -> bool {
        self.status[x]
    }

    pub fn status(&self) -> &[bool] {
        &self.status
    }

    /// Infected indices, ascending.
    pub fn infected(&self) -> Vec<usize> {
        self.status
            .iter()
            .enumerate()
            .filter_map(|(x, &s)| s.then_some(x))
            .collect()
    }
}

/// Uniform draw among the `C(n, k)` vectors of Hamming weight `k`.
pub fn draw_uniform_k_sparse<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<InfectionVector> {
    if k > n {
        return Err(Error::param(format!("k = {k} exceeds n = {n}")));
    }
    let mut status = vec![false; n];
    for x in rand::seq::index::sample(rng, n, k) {
        status[x] = true;
    }
    Ok(InfectionVector { status, k })
}

/// Per-individual infection probability of the Bernoulli surrogate,
/// `(k - sqrt(k) ln n) / n`.
pub fn bernoulli_star_probability(n: usize, k: usize) -> f64 {
    let n_f = n as f64;
    let k_f = k as f64;
    (k_f - k_f.sqrt() * n_f.ln()) / n_f
}

/// I.i.d. Bernoulli draw with the probability above.
pub fn draw_bernoulli_star<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<InfectionVector> {
    let p = bernoulli_star_probability(n, k);
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param(format!(
            "infection probability {p} for n = {n}, k = {k} is outside (0, 1)"
        )));
    }
    let status = (0..n).map(|_| rng.random_bool(p)).collect();
    Ok(InfectionVector::from_status(status))
}

/// `k = round(n^theta)`.
pub fn k_from_theta(n: usize, theta: f64) -> usize {
    (n as f64).powf(theta).round() as usize
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeVector {
    results: Vec<bool>,
}

impl OutcomeVector {
    pub fn from_results(results: Vec<bool>) -> Self {
        OutcomeVector { results }
    }

    pub fn m(&self) -> usize {
        self.results.len()
    }

    pub fn is_positive(&self, a: usize) -> bool {
        self.results[a]
    }

    pub fn results(&self) -> &[bool] {
        &self.results
    }

    pub fn positive_count(&self) -> usize {
        self.results.iter().filter(|&&r| r).count()
    }
}

/// A test is positive iff it has an infected member. Empty tests are negative.
pub fn compute_outcomes(design: &PoolingDesign, sigma: &InfectionVector) -> Result<OutcomeVector> {
    if sigma.n() != design.n() {
        return Err(Error::param(format!(
            "infection vector has length {} but design has n = {}",
            sigma.n(),
            design.n()
        )));
    }
    let results = (0..design.m())
        .map(|a| design.items_of(a).iter().any(|&x| sigma.is_infected(x)))
        .collect();
    Ok(OutcomeVector { results })
}

/// Partition of the population into easy/disguised uninfected and
/// easy/disguised infected individuals. Sets are ascending index lists.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    /// Uninfected, in at least one negative test.
    pub v0_minus: Vec<usize>,
    /// Uninfected, every test positive (vacuously true when untested).
    pub v0_plus: Vec<usize>,
    /// Infected, in some test whose other distinct members are all in `v0_minus`.
    pub v1_minus_minus: Vec<usize>,
    /// Infected, every test has another distinct infected member (vacuous when untested).
    pub v1_plus: Vec<usize>,
    /// Infected, in neither `v1_minus_minus` nor `v1_plus`.
    pub v1_other: Vec<usize>,
    /// Individuals in no test at all; recovery is impossible for them.
    pub untested: usize,
    /// All infected individuals.
    pub infected: Vec<usize>,
}

/// Classifies every individual from `(design, sigma, outcomes)`. Membership
/// of a test is taken over distinct members, so a double edge never makes an
/// individual its own witness.
pub fn classify(
    design: &PoolingDesign,
    sigma: &InfectionVector,
    outcomes: &OutcomeVector,
) -> Result<Classification> {
    let expected = compute_outcomes(design, sigma)?;
    if expected != *outcomes {
        return Err(Error::integrity(
            "test outcomes are inconsistent with the infection vector",
        ));
    }

    let n = design.n();
    let mut easy_uninfected = vec![false; n];
    let mut c = Classification::default();
    for (x, easy) in easy_uninfected.iter_mut().enumerate() {
        let tests = design.tests_of(x);
        if tests.is_empty() {
            c.untested += 1;
        }
        if !sigma.is_infected(x) {
            if tests.iter().any(|&a| !outcomes.is_positive(a)) {
                *easy = true;
                c.v0_minus.push(x);
            } else {
                c.v0_plus.push(x);
            }
        }
    }

    for x in 0..n {
        if !sigma.is_infected(x) {
            continue;
        }
        c.infected.push(x);
        let tests = design.tests_of(x);
        let explained = tests.iter().any(|&a| {
            design
                .distinct_items_of(a)
                .filter(|&y| y != x)
                .all(|y| easy_uninfected[y])
        });
        let disguised = tests.iter().all(|&a| {
            design
                .distinct_items_of(a)
                .any(|y| y != x && sigma.is_infected(y))
        });
        if explained {
            c.v1_minus_minus.push(x);
        } else if disguised {
            c.v1_plus.push(x);
        } else {
            c.v1_other.push(x);
        }
    }
    Ok(c)
}
