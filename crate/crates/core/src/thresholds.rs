//! Closed-form test-count thresholds for the Δ-divisible and Γ-sized regimes,
//! and the counting bound on the success probability of any scheme.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Near-integer values of `theta/(1-theta)` within this distance snap to the
/// integer before flooring.
pub const INTEGER_SNAP: f64 = 1e-9;

/// `ln k / ln n`.
pub fn theta_of(n: f64, k: f64) -> f64 {
    k.ln() / n.ln()
}

/// `floor(theta/(1-theta))`, snapping ratios within [`INTEGER_SNAP`] of an integer.
pub fn density_floor(theta: f64) -> u64 {
    let ratio = theta / (1.0 - theta);
    let nearest = ratio.round();
    if (ratio - nearest).abs() < INTEGER_SNAP {
        nearest as u64
    } else {
        ratio.floor() as u64
    }
}

/// Tests per individual DD needs on the configuration model:
/// `max(2, 1 + floor(theta/(1-theta)))`.
pub fn delta_dd(theta: f64) -> u64 {
    (1 + density_floor(theta)).max(2)
}

fn check_delta_inputs(n: f64, k: f64, delta: f64) -> Result<()> {
    if !(k >= 1.0 && k < n) {
        return Err(Error::param(format!("need 1 <= k < n, got n = {n}, k = {k}")));
    }
    if delta < 1.0 {
        return Err(Error::param(format!("delta must be at least 1, got {delta}")));
    }
    Ok(())
}

/// `Δ k (n/k)^(1/Δ)`, i.e. `Δ k^(1 + (1-θ)/(Δθ))` with `k = n^θ`.
fn spread_term(n: f64, k: f64, delta: f64) -> f64 {
    delta * k * (n / k).powf(1.0 / delta)
}

/// `Δ k^(1 + 1/Δ)`.
fn dense_term(k: f64, delta: f64) -> f64 {
    delta * k.powf(1.0 + 1.0 / delta)
}

/// Non-adaptive converse in the Δ-divisible regime:
/// `min{max{e^-1 Δ k (n/k)^(1/Δ), Δ k^(1+1/Δ)}, n}`.
pub fn m_inf_delta(n: f64, k: f64, delta: f64) -> Result<f64> {
    check_delta_inputs(n, k, delta)?;
    let inner = (spread_term(n, k, delta) / std::f64::consts::E).max(dense_term(k, delta));
    Ok(inner.min(n))
}

/// DD achievability on the Δ-regular design:
/// `max{Δ k (n/k)^(1/Δ), Δ k^(1+1/Δ)}`.
pub fn m_dd_delta(n: f64, k: f64, delta: f64) -> Result<f64> {
    check_delta_inputs(n, k, delta)?;
    Ok(spread_term(n, k, delta).max(dense_term(k, delta)))
}

/// Adaptive Δ-divisible splitting: `Δ k (n/k)^(1/Δ)`. Allows `k = n`.
pub fn m_ada_delta(n: f64, k: f64, delta: f64) -> Result<f64> {
    if !(k >= 1.0 && k <= n) || delta < 1.0 {
        return Err(Error::param(format!(
            "need 1 <= k <= n and delta >= 1, got n = {n}, k = {k}, delta = {delta}"
        )));
    }
    Ok(spread_term(n, k, delta))
}

fn check_gamma_inputs(n: f64, gamma: f64, theta: f64) -> Result<()> {
    if gamma < 1.0 || n <= 0.0 {
        return Err(Error::param(format!("need n > 0 and gamma >= 1, got n = {n}, gamma = {gamma}")));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::param(format!("theta = {theta} must lie in (0, 1)")));
    }
    Ok(())
}

/// Information-theoretic threshold for Γ-sized tests at density `theta`:
/// `max{(1 + floor(θ/(1-θ))) n/Γ, 2n/(Γ+1)}`.
pub fn m_inf_gamma_at(n: f64, gamma: f64, theta: f64) -> Result<f64> {
    check_gamma_inputs(n, gamma, theta)?;
    let grouped = (1 + density_floor(theta)) as f64 * n / gamma;
    Ok(grouped.max(matching_bound(n, gamma)))
}

/// DD on the configuration model: `Δ_DD(θ) n/Γ`.
pub fn m_dd_gamma_at(n: f64, gamma: f64, theta: f64) -> Result<f64> {
    check_gamma_inputs(n, gamma, theta)?;
    Ok(delta_dd(theta) as f64 * n / gamma)
}

/// Tests DD needs on the matching design for `theta < 1/2`: `2n/(Γ+1)`.
pub fn matching_bound(n: f64, gamma: f64) -> f64 {
    2.0 * n / (gamma + 1.0)
}

/// [`m_inf_gamma_at`] with `theta = ln k / ln n`.
pub fn m_inf_gamma(n: f64, k: f64, gamma: f64) -> Result<f64> {
    m_inf_gamma_at(n, gamma, theta_of(n, k))
}

/// [`m_dd_gamma_at`] with `theta = ln k / ln n`.
pub fn m_dd_gamma(n: f64, k: f64, gamma: f64) -> Result<f64> {
    m_dd_gamma_at(n, gamma, theta_of(n, k))
}

/// Adaptive Γ-sized splitting: `n/Γ + k log2 Γ`.
pub fn m_ada_gamma(n: f64, k: f64, gamma: f64) -> Result<f64> {
    if gamma < 1.0 || k < 0.0 {
        return Err(Error::param(format!("need gamma >= 1 and k >= 0, got gamma = {gamma}, k = {k}")));
    }
    Ok(n / gamma + k * gamma.log2())
}

fn ln_choose(n: u64, k: u64) -> f64 {
    statrs::function::factorial::ln_binomial(n, k)
}

/// Counting bound on the success probability of any scheme with at most
/// `delta` tests per individual and `m` tests:
/// `sum_{i <= Δk} C(m, i) / C(n, k)`, capped at 1. Evaluated in log space.
pub fn success_upper_bound(n: u64, k: u64, m: u64, delta: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let top = delta.saturating_mul(k).min(m);
    let logs: Vec<f64> = (0..=top).map(|i| ln_choose(m, i)).collect();
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_numerator = peak + logs.iter().map(|&l| (l - peak).exp()).sum::<f64>().ln();
    let log_ratio = log_numerator - ln_choose(n, k);
    if log_ratio >= 0.0 {
        1.0
    } else {
        log_ratio.exp()
    }
}

/// Every threshold for one parameter point. Fields of a regime whose
/// constraint was not supplied are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    pub n: f64,
    pub k: f64,
    pub theta: f64,
    pub delta: Option<f64>,
    pub gamma: Option<f64>,
    pub m_inf_delta: Option<f64>,
    pub m_dd_delta: Option<f64>,
    pub m_ada_delta: Option<f64>,
    pub m_inf_gamma: Option<f64>,
    pub m_dd_gamma: Option<f64>,
    pub matching_bound: Option<f64>,
    pub m_ada_gamma: Option<f64>,
    pub delta_dd: u64,
}

impl ThresholdSet {
    /// `theta` defaults to `ln k / ln n`.
    pub fn evaluate(
        n: f64,
        k: f64,
        theta: Option<f64>,
        delta: Option<f64>,
        gamma: Option<f64>,
    ) -> Result<Self> {
        if !(k >= 1.0 && k < n) {
            return Err(Error::param(format!("need 1 <= k < n, got n = {n}, k = {k}")));
        }
        let theta = theta.unwrap_or_else(|| theta_of(n, k));
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::param(format!("theta = {theta} must lie in (0, 1)")));
        }
        let (m_inf_delta, m_dd_delta, m_ada_delta) = match delta {
            Some(d) => (
                Some(self::m_inf_delta(n, k, d)?),
                Some(self::m_dd_delta(n, k, d)?),
                Some(self::m_ada_delta(n, k, d)?),
            ),
            None => (None, None, None),
        };
        let (m_inf_gamma, m_dd_gamma, matching_bound, m_ada_gamma) = match gamma {
            Some(g) => (
                Some(m_inf_gamma_at(n, g, theta)?),
                Some(m_dd_gamma_at(n, g, theta)?),
                Some(self::matching_bound(n, g)),
                Some(self::m_ada_gamma(n, k, g)?),
            ),
            None => (None, None, None, None),
        };
        Ok(ThresholdSet {
            n,
            k,
            theta,
            delta,
            gamma,
            m_inf_delta,
            m_dd_delta,
            m_ada_delta,
            m_inf_gamma,
            m_dd_gamma,
            matching_bound,
            m_ada_gamma,
            delta_dd: delta_dd(theta),
        })
    }
}
