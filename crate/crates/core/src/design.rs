//! Randomized pooling designs as bipartite multigraphs.
//!
//! A design stores its edge multiset twice, once grouped by individual and
//! once grouped by test. Multi-edges are kept in both views and count toward
//! degrees. Indices are dense and 0-based.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignKind {
    /// Every individual picks `delta` tests uniformly with replacement.
    DeltaRegular,
    /// Configuration model with test degree `gamma` and item degree `m*gamma/n`.
    GammaConfig,
    /// `(gamma-1, 2)`-regular core plus set-aside degree-1 individuals.
    GammaMatching,
    /// Supplied test by test by the caller.
    Explicit,
}

impl DesignKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DesignKind::DeltaRegular => "delta",
            DesignKind::GammaConfig => "gamma-config",
            DesignKind::GammaMatching => "gamma-matching",
            DesignKind::Explicit => "explicit",
        }
    }
}

/// A pooling scheme: `n` individuals, `m` tests, and the edges between them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoolingDesign {
    n: usize,
    m: usize,
    kind: DesignKind,
    item_offsets: Vec<usize>,
    item_tests: Vec<usize>,
    test_offsets: Vec<usize>,
    // Sorted ascending within each test, so duplicates are adjacent.
    test_items: Vec<usize>,
}

impl PoolingDesign {
    /// Builds both adjacency views from an edge list of `(item, test)` pairs.
    /// Per-item test order follows the order of `edges`.
    fn from_edges(n: usize, m: usize, kind: DesignKind, edges: &[(usize, usize)]) -> Self {
        let mut item_offsets = vec![0usize; n + 1];
        for &(x, _) in edges {
            item_offsets[x + 1] += 1;
        }
        for i in 0..n {
            item_offsets[i + 1] += item_offsets[i];
        }
        let mut cursor = item_offsets.clone();
        let mut item_tests = vec![0usize; edges.len()];
        for &(x, a) in edges {
            item_tests[cursor[x]] = a;
            cursor[x] += 1;
        }

        let mut test_offsets = vec![0usize; m + 1];
        for &a in &item_tests {
            test_offsets[a + 1] += 1;
        }
        for a in 0..m {
            test_offsets[a + 1] += test_offsets[a];
        }
        let mut cursor = test_offsets.clone();
        let mut test_items = vec![0usize; edges.len()];
        for x in 0..n {
            for &a in &item_tests[item_offsets[x]..item_offsets[x + 1]] {
                test_items[cursor[a]] = x;
                cursor[a] += 1;
            }
        }

        PoolingDesign {
            n,
            m,
            kind,
            item_offsets,
            item_tests,
            test_offsets,
            test_items,
        }
    }

    /// Design given as one member list per test. Repeated members become
    /// multi-edges.
    pub fn from_tests(n: usize, tests: &[Vec<usize>]) -> Result<Self> {
        let mut edges = Vec::new();
        for (a, members) in tests.iter().enumerate() {
            for &x in members {
                if x >= n {
                    return Err(Error::param(format!(
                        "test {a} references individual {x} but n = {n}"
                    )));
                }
                edges.push((x, a));
            }
        }
        // Item-major order keeps tests_of() ascending for explicit designs.
        edges.sort_unstable();
        Ok(Self::from_edges(n, tests.len(), DesignKind::Explicit, &edges))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn kind(&self) -> DesignKind {
        self.kind
    }

    /// Tests of individual `x`, with multiplicity.
    pub fn tests_of(&self, x: usize) -> &[usize] {
        &self.item_tests[self.item_offsets[x]..self.item_offsets[x + 1]]
    }

    /// Members of test `a`, with multiplicity, sorted ascending.
    pub fn items_of(&self, a: usize) -> &[usize] {
        &self.test_items[self.test_offsets[a]..self.test_offsets[a + 1]]
    }

    /// Distinct members of test `a`, ascending.
    pub fn distinct_items_of(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        let items = self.items_of(a);
        items
            .iter()
            .enumerate()
            .filter(move |&(i, &x)| i == 0 || items[i - 1] != x)
            .map(|(_, &x)| x)
    }

    pub fn item_degree(&self, x: usize) -> usize {
        self.item_offsets[x + 1] - self.item_offsets[x]
    }

    pub fn test_degree(&self, a: usize) -> usize {
        self.test_offsets[a + 1] - self.test_offsets[a]
    }

    pub fn edge_count(&self) -> usize {
        self.item_tests.len()
    }

    pub fn max_item_degree(&self) -> usize {
        (0..self.n).map(|x| self.item_degree(x)).max().unwrap_or(0)
    }

    /// Number of individuals that appear in no test.
    pub fn untested_count(&self) -> usize {
        (0..self.n).filter(|&x| self.item_degree(x) == 0).count()
    }

    /// Recomputes the per-test view from the per-item view and compares
    /// multisets.
    pub fn check_duality(&self) -> Result<()> {
        let mut rebuilt: Vec<Vec<usize>> = vec![Vec::new(); self.m];
        for x in 0..self.n {
            for &a in self.tests_of(x) {
                if a >= self.m {
                    return Err(Error::integrity(format!(
                        "individual {x} references test {a} but m = {}",
                        self.m
                    )));
                }
                rebuilt[a].push(x);
            }
        }
        for (a, mut members) in rebuilt.into_iter().enumerate() {
            members.sort_unstable();
            if members != self.items_of(a) {
                return Err(Error::integrity(format!(
                    "adjacency views disagree on test {a}"
                )));
            }
        }
        Ok(())
    }
}

fn require_positive(name: &str, value: usize) -> Result<()> {
    if value == 0 {
        Err(Error::param(format!("{name} must be at least 1")))
    } else {
        Ok(())
    }
}

/// Each individual joins `delta` tests drawn i.i.d. uniformly from `[m]`.
pub fn build_delta_regular<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    delta: usize,
    rng: &mut R,
) -> Result<PoolingDesign> {
    require_positive("n", n)?;
    require_positive("m", m)?;
    require_positive("delta", delta)?;
    let mut edges = Vec::with_capacity(n * delta);
    for x in 0..n {
        for _ in 0..delta {
            edges.push((x, rng.random_range(0..m)));
        }
    }
    Ok(PoolingDesign::from_edges(n, m, DesignKind::DeltaRegular, &edges))
}

/// Nearest `m` below and above with `m * gamma` divisible by `n`.
pub fn nearest_divisible_m(n: usize, m: usize, gamma: usize) -> (Option<usize>, usize) {
    let step = n / gcd(n, gamma);
    let below = (m / step) * step;
    let above = if below == m { m } else { below + step };
    let below = if below == 0 { None } else { Some(below) };
    (below, above)
}

/// Snaps `m` to the closest value with `m * gamma` divisible by `n`; ties go up.
pub fn snap_divisible_m(n: usize, m: usize, gamma: usize) -> usize {
    match nearest_divisible_m(n, m, gamma) {
        (Some(b), a) if m - b < a - m => b,
        (_, a) => a,
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Clone-slot edge list of a configuration model with the given per-item
/// degrees and uniform test degree `test_degree`.
fn configuration_edges<R: Rng + ?Sized>(
    items: &[usize],
    item_degree: usize,
    test_degree: usize,
    rng: &mut R,
) -> Vec<(usize, usize)> {
    let mut clones: Vec<usize> = items
        .iter()
        .flat_map(|&x| std::iter::repeat_n(x, item_degree))
        .collect();
    clones.shuffle(rng);
    clones
        .into_iter()
        .enumerate()
        .map(|(slot, x)| (x, slot / test_degree))
        .collect()
}

/// Configuration model: a uniform perfect matching between `m*gamma` test
/// clones and `n*delta` item clones, `delta = m*gamma/n`.
pub fn build_gamma_config<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    gamma: usize,
    rng: &mut R,
) -> Result<PoolingDesign> {
    require_positive("n", n)?;
    require_positive("m", m)?;
    require_positive("gamma", gamma)?;
    if !(m * gamma).is_multiple_of(n) {
        let (below, above) = nearest_divisible_m(n, m, gamma);
        return Err(Error::Divisibility {
            n,
            m,
            gamma,
            below,
            above,
        });
    }
    let delta = m * gamma / n;
    let items: Vec<usize> = (0..n).collect();
    let edges = configuration_edges(&items, delta, gamma, rng);
    Ok(PoolingDesign::from_edges(n, m, DesignKind::GammaConfig, &edges))
}

/// Number of set-aside degree-1 individuals in the matching design, from
/// `2 (n - gamma_aside) = m (gamma - 1)`.
pub fn matching_set_aside(n: usize, m: usize, gamma: usize) -> Result<usize> {
    require_positive("n", n)?;
    require_positive("m", m)?;
    if gamma < 2 {
        return Err(Error::param("matching design needs gamma >= 2"));
    }
    let (lo, hi) = matching_m_range(n, gamma);
    let range_hint = || {
        let parity = if gamma.is_multiple_of(2) { ", m even" } else { "" };
        format!("feasible m for n = {n}, gamma = {gamma}: [{lo}, {hi}]{parity}")
    };
    let core_edges = m * (gamma - 1);
    if !core_edges.is_multiple_of(2) {
        return Err(Error::param(format!(
            "m*(gamma-1) = {core_edges} is odd; {}",
            range_hint()
        )));
    }
    let core_items = core_edges / 2;
    if core_items > n {
        return Err(Error::param(format!(
            "m = {m} needs {core_items} degree-2 individuals but n = {n}; {}",
            range_hint()
        )));
    }
    let aside = n - core_items;
    if aside > m {
        return Err(Error::param(format!(
            "{aside} set-aside individuals exceed m = {m} tests; {}",
            range_hint()
        )));
    }
    Ok(aside)
}

/// Inclusive range of `m` (ignoring parity) for which the matching design
/// exists: `2n/(gamma+1) <= m <= 2n/(gamma-1)`.
pub fn matching_m_range(n: usize, gamma: usize) -> (usize, usize) {
    let lo = (2 * n).div_ceil(gamma + 1);
    let hi = (2 * n) / (gamma - 1).max(1);
    (lo, hi)
}

/// Matching-based design: a random `gamma_aside`-subset of individuals is set
/// aside, the rest form a `(gamma-1, 2)` configuration model with the tests,
/// and each set-aside individual then joins a distinct random test.
pub fn build_gamma_matching<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    gamma: usize,
    rng: &mut R,
) -> Result<PoolingDesign> {
    let aside = matching_set_aside(n, m, gamma)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let (set_aside, core) = order.split_at(aside);

    let mut edges = configuration_edges(core, 2, gamma - 1, rng);

    let mut tests: Vec<usize> = (0..m).collect();
    tests.shuffle(rng);
    edges.extend(set_aside.iter().zip(&tests).map(|(&x, &a)| (x, a)));
    Ok(PoolingDesign::from_edges(n, m, DesignKind::GammaMatching, &edges))
}

/// Γ-sized design selected by density: configuration model for
/// `theta >= 1/2`, matching design below.
pub fn build_gamma_auto<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    gamma: usize,
    theta: f64,
    rng: &mut R,
) -> Result<PoolingDesign> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::param(format!("theta = {theta} must lie in (0, 1)")));
    }
    if theta >= 0.5 {
        build_gamma_config(n, m, gamma, rng)
    } else {
        build_gamma_matching(n, m, gamma, rng)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignStats {
    pub min_test_degree: usize,
    pub max_test_degree: usize,
    pub mean_test_degree: f64,
    pub distinct_members_per_test: Vec<usize>,
    pub multi_edge_count: usize,
}

pub fn design_stats(design: &PoolingDesign) -> DesignStats {
    let degrees = (0..design.m()).map(|a| design.test_degree(a));
    let min_test_degree = degrees.clone().min().unwrap_or(0);
    let max_test_degree = degrees.max().unwrap_or(0);
    let mean_test_degree = if design.m() == 0 {
        0.0
    } else {
        design.edge_count() as f64 / design.m() as f64
    };
    let distinct_members_per_test: Vec<usize> = (0..design.m())
        .map(|a| design.distinct_items_of(a).count())
        .collect();
    let distinct_edges: usize = distinct_members_per_test.iter().sum();
    DesignStats {
        min_test_degree,
        max_test_degree,
        mean_test_degree,
        distinct_members_per_test,
        multi_edge_count: design.edge_count() - distinct_edges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn single_item_delta_three() {
        let d = build_delta_regular(1, 1, 3, &mut rng_from_seed(0)).unwrap();
        assert_eq!(d.tests_of(0), &[0, 0, 0]);
        assert_eq!(d.test_degree(0), 3);
        let s = design_stats(&d);
        assert_eq!(s.mean_test_degree, 3.0);
        assert_eq!(s.distinct_members_per_test, vec![1]);
        assert_eq!(s.multi_edge_count, 2);
    }

    #[test]
    fn delta_total_degree_is_forced() {
        for seed in 0..50 {
            let d = build_delta_regular(4, 2, 2, &mut rng_from_seed(seed)).unwrap();
            assert_eq!((0..2).map(|a| d.test_degree(a)).sum::<usize>(), 8);
        }
    }

    #[test]
    fn zero_parameters_rejected() {
        let mut rng = rng_from_seed(1);
        assert!(matches!(build_delta_regular(0, 1, 1, &mut rng), Err(Error::Parameter(_))));
        assert!(matches!(build_delta_regular(1, 0, 1, &mut rng), Err(Error::Parameter(_))));
        assert!(matches!(build_delta_regular(1, 1, 0, &mut rng), Err(Error::Parameter(_))));
        assert!(matches!(build_gamma_config(1, 1, 0, &mut rng), Err(Error::Parameter(_))));
    }

    #[test]
    fn gamma_config_small_cases() {
        let d = build_gamma_config(4, 2, 2, &mut rng_from_seed(3)).unwrap();
        assert!((0..4).all(|x| d.item_degree(x) == 1));
        assert!((0..2).all(|a| d.test_degree(a) == 2));

        let d = build_gamma_config(6, 4, 3, &mut rng_from_seed(3)).unwrap();
        assert_eq!(d.edge_count(), 12);
        assert!((0..6).all(|x| d.item_degree(x) == 2));
        let s = design_stats(&d);
        assert_eq!((s.min_test_degree, s.max_test_degree), (3, 3));
        assert_eq!(s.mean_test_degree, 3.0);
    }

    #[test]
    fn gamma_config_divisibility_suggestions() {
        assert!(build_gamma_config(6, 3, 2, &mut rng_from_seed(0)).is_ok());
        match build_gamma_config(6, 4, 2, &mut rng_from_seed(0)) {
            Err(Error::Divisibility { below, above, .. }) => {
                assert_eq!(below, Some(3));
                assert_eq!(above, 6);
            }
            other => panic!("expected divisibility error, got {other:?}"),
        }
        // No valid m below the first multiple.
        assert_eq!(nearest_divisible_m(10, 1, 3), (None, 10));
        assert_eq!(snap_divisible_m(6, 4, 2), 3);
        assert_eq!(snap_divisible_m(6, 5, 2), 6);
    }

    #[test]
    fn gamma_matching_small_case() {
        assert_eq!(matching_set_aside(4, 2, 3).unwrap(), 2);
        for seed in 0..20 {
            let d = build_gamma_matching(4, 2, 3, &mut rng_from_seed(seed)).unwrap();
            let ones = (0..4).filter(|&x| d.item_degree(x) == 1).count();
            let twos = (0..4).filter(|&x| d.item_degree(x) == 2).count();
            assert_eq!((ones, twos), (2, 2));
            assert!(design_stats(&d).max_test_degree <= 3);
        }
    }

    #[test]
    fn gamma_matching_gamma_three_core_is_cycles() {
        assert_eq!(matching_set_aside(1000, 500, 3).unwrap(), 500);
        let d = build_gamma_matching(1000, 500, 3, &mut rng_from_seed(9)).unwrap();
        // Every test holds 2 core slots + exactly one set-aside individual.
        assert!((0..500).all(|a| d.test_degree(a) == 3));
        let ones = (0..1000).filter(|&x| d.item_degree(x) == 1).count();
        assert_eq!(ones, 500);
    }

    #[test]
    fn gamma_matching_infeasible() {
        let err = build_gamma_matching(10, 2, 3, &mut rng_from_seed(0)).unwrap_err();
        assert!(matches!(err, Error::Parameter(_)));
        assert!(err.to_string().contains("[5, 10]"), "{err}");
        // Parity: m*(gamma-1) odd.
        assert!(build_gamma_matching(10, 8, 2, &mut rng_from_seed(0)).is_ok());
        assert!(build_gamma_matching(10, 5, 4, &mut rng_from_seed(0)).is_err());
        assert!(build_gamma_matching(10, 5, 1, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn auto_dispatch_on_theta() {
        let mut rng = rng_from_seed(0);
        let d = build_gamma_auto(6, 4, 3, 0.5, &mut rng).unwrap();
        assert_eq!(d.kind(), DesignKind::GammaConfig);
        let d = build_gamma_auto(4, 2, 3, 0.49, &mut rng).unwrap();
        assert_eq!(d.kind(), DesignKind::GammaMatching);
        assert!(build_gamma_auto(6, 4, 3, 1.0, &mut rng).is_err());
    }

    #[test]
    fn auto_matches_config_distribution_exactly() {
        for seed in 0..10 {
            let a = build_gamma_auto(6, 4, 3, 0.75, &mut rng_from_seed(seed)).unwrap();
            let b = build_gamma_config(6, 4, 3, &mut rng_from_seed(seed)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn explicit_design_keeps_multi_edges() {
        let d = PoolingDesign::from_tests(3, &[vec![0, 0, 1], vec![2]]).unwrap();
        assert_eq!(d.tests_of(0), &[0, 0]);
        assert_eq!(d.distinct_items_of(0).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(design_stats(&d).multi_edge_count, 1);
        d.check_duality().unwrap();
        assert!(PoolingDesign::from_tests(2, &[vec![2]]).is_err());
    }

    #[test]
    fn delta_large_instance_mean_is_exact() {
        let d = build_delta_regular(10_000, 500, 3, &mut rng_from_seed(11)).unwrap();
        assert_eq!(design_stats(&d).mean_test_degree, 60.0);
    }
}
