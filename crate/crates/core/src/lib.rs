//! Group testing with degree-constrained pooling designs.
//!
//! The crate builds random pooling designs under an item-degree (Δ) or
//! test-size (Γ) constraint, decodes outcomes with COMP and DD, runs adaptive
//! splitting strategies against a counting oracle, evaluates the matching
//! threshold formulas, and drives seeded Monte Carlo sweeps.
//!
//! ```
//! use pooltest::{build_delta_regular, compute_outcomes, dd, draw_uniform_k_sparse, rng_from_seed};
//!
//! let mut rng = rng_from_seed(7);
//! let design = build_delta_regular(200, 60, 6, &mut rng).unwrap();
//! let sigma = draw_uniform_k_sparse(200, 2, &mut rng).unwrap();
//! let outcomes = compute_outcomes(&design, &sigma).unwrap();
//! let declared = dd(&design, &outcomes).unwrap();
//! assert!(declared.declared_infected.iter().all(|&x| sigma.is_infected(x)));
//! ```

pub mod adaptive;
pub mod cli;
pub mod decode;
pub mod design;
pub mod error;
pub mod experiment;
pub mod instance;
pub mod model;
pub mod rng;
pub mod thresholds;

/// Version of the CSV and JSON output layouts.
pub const SCHEMA_VERSION: u32 = 1;

pub use adaptive::{adaptive_delta, adaptive_gamma, binary_splitting, AdaptiveReport, TestOracle};
pub use decode::{
    brute_force_optimal_success, comp, count_consistent, dd, dd_success_predicate, Algorithm,
    DecodeResult,
};
pub use design::{
    build_delta_regular, build_gamma_auto, build_gamma_config, build_gamma_matching, design_stats,
    DesignKind, DesignStats, PoolingDesign,
};
pub use error::{Error, Result};
pub use experiment::{run_adaptive_cdf, run_nonadaptive_sweep, CdfRecord, SweepConfig, SweepRecord};
pub use model::{
    classify, compute_outcomes, draw_bernoulli_star, draw_uniform_k_sparse, Classification,
    InfectionVector, OutcomeVector,
};
pub use rng::{rng_from_seed, stream_rng, trial_seed, Stream, TrialRng};
pub use thresholds::{success_upper_bound, ThresholdSet};
