//! Seeded Monte Carlo harness: success-rate sweeps over `m` for the
//! non-adaptive settings and test-count distributions for the adaptive ones.
//!
//! Trial `t` at test count `m` draws everything from
//! `trial_seed(master_seed, m, t)`, so results do not depend on scheduling or
//! on the number of worker threads. Success counts are integer sums.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptive::{adaptive_delta, adaptive_gamma, TestOracle};
use crate::decode::{comp, dd};
use crate::design::{
    build_delta_regular, build_gamma_config, build_gamma_matching, snap_divisible_m,
    PoolingDesign,
};
use crate::error::{Error, Result};
use crate::model::{compute_outcomes, draw_uniform_k_sparse, k_from_theta};
use crate::rng::{stream_rng, trial_seed, Stream};

pub const SWEEP_HEADER: [&str; 11] = [
    "setting",
    "n",
    "theta",
    "k",
    "constraint",
    "m",
    "trials",
    "successes",
    "success_rate",
    "wall_ms",
    "master_seed",
];

pub const CDF_HEADER: [&str; 9] = [
    "setting",
    "n",
    "theta",
    "k",
    "constraint",
    "tests_used",
    "count",
    "cumulative_fraction",
    "master_seed",
];

/// Written in the `success_rate` column of rows whose design could not be built.
pub const SKIPPED_MARKER: &str = "skipped";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Setting {
    DeltaNonAdaptive,
    GammaNonAdaptive,
    DeltaAdaptive,
    GammaAdaptive,
}

impl Setting {
    pub fn as_str(self) -> &'static str {
        match self {
            Setting::DeltaNonAdaptive => "delta-nonadaptive",
            Setting::GammaNonAdaptive => "gamma-nonadaptive",
            Setting::DeltaAdaptive => "delta-adaptive",
            Setting::GammaAdaptive => "gamma-adaptive",
        }
    }

    pub fn is_adaptive(self) -> bool {
        matches!(self, Setting::DeltaAdaptive | Setting::GammaAdaptive)
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delta-nonadaptive" => Ok(Setting::DeltaNonAdaptive),
            "gamma-nonadaptive" => Ok(Setting::GammaNonAdaptive),
            "delta-adaptive" => Ok(Setting::DeltaAdaptive),
            "gamma-adaptive" => Ok(Setting::GammaAdaptive),
            other => Err(Error::param(format!("unknown setting '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decoder {
    Dd,
    Comp,
}

impl Decoder {
    pub fn as_str(self) -> &'static str {
        match self {
            Decoder::Dd => "dd",
            Decoder::Comp => "comp",
        }
    }
}

impl FromStr for Decoder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dd" | "DD" => Ok(Decoder::Dd),
            "comp" | "COMP" => Ok(Decoder::Comp),
            other => Err(Error::param(format!("unknown decoder '{other}'"))),
        }
    }
}

/// One experiment. Exactly one of `theta` and `k` must be set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub setting: Setting,
    pub n: usize,
    pub theta: Option<f64>,
    pub k: Option<usize>,
    /// Δ for the delta settings, Γ for the gamma settings.
    pub constraint: usize,
    /// Test counts to sweep; unused by adaptive settings.
    pub m_grid: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
    pub decoder: Decoder,
    /// Fill `wall_ms`; off by default so reruns are byte-identical.
    pub timing: bool,
}

impl SweepConfig {
    pub fn k(&self) -> usize {
        match (self.k, self.theta) {
            (Some(k), _) => k,
            (None, Some(theta)) => k_from_theta(self.n, theta),
            (None, None) => 0,
        }
    }

    /// Configured density, or `ln k / ln n` when only `k` was given.
    pub fn theta(&self) -> f64 {
        match self.theta {
            Some(theta) => theta,
            None => {
                let k = self.k();
                if k <= 1 || self.n <= 1 {
                    0.0
                } else {
                    (k as f64).ln() / (self.n as f64).ln()
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("n must be at least 1"));
        }
        match (self.theta, self.k) {
            (Some(_), Some(_)) => return Err(Error::param("set either theta or k, not both")),
            (None, None) => return Err(Error::param("one of theta or k is required")),
            (Some(theta), None) if !(theta > 0.0 && theta < 1.0) => {
                return Err(Error::param(format!("theta = {theta} must lie in (0, 1)")))
            }
            _ => {}
        }
        if self.k() > self.n {
            return Err(Error::param(format!("k = {} exceeds n = {}", self.k(), self.n)));
        }
        if self.constraint == 0 {
            return Err(Error::param("constraint (delta or gamma) must be at least 1"));
        }
        if self.trials == 0 {
            return Err(Error::param("trials must be at least 1"));
        }
        if !self.setting.is_adaptive() {
            if self.m_grid.is_empty() {
                return Err(Error::param("m_grid must not be empty"));
            }
            if self.m_grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::param("m_grid must be strictly increasing"));
            }
        }
        Ok(())
    }

    fn constraint_key(&self) -> &'static str {
        match self.setting {
            Setting::DeltaNonAdaptive | Setting::DeltaAdaptive => "delta",
            Setting::GammaNonAdaptive | Setting::GammaAdaptive => "gamma",
        }
    }

    /// Canonical `key = value` form, readable by [`SweepConfig::parse`].
    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("setting = {}\n", self.setting));
        out.push_str(&format!("n = {}\n", self.n));
        if let Some(theta) = self.theta {
            out.push_str(&format!("theta = {theta}\n"));
        }
        if let Some(k) = self.k {
            out.push_str(&format!("k = {k}\n"));
        }
        out.push_str(&format!("{} = {}\n", self.constraint_key(), self.constraint));
        if !self.m_grid.is_empty() {
            let grid: Vec<String> = self.m_grid.iter().map(|m| m.to_string()).collect();
            out.push_str(&format!("m_grid = {}\n", grid.join(",")));
        }
        out.push_str(&format!("trials = {}\n", self.trials));
        out.push_str(&format!("master_seed = {}\n", self.master_seed));
        out.push_str(&format!("decoder = {}\n", self.decoder.as_str()));
        out.push_str(&format!("timing = {}\n", self.timing));
        out
    }

    /// Parses a flat `key = value` file. `#` starts a comment.
    ///
    /// `m_grid` takes comma-separated entries, each either a single count or
    /// an inclusive range `start:end:step`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::param(format!("line {}: expected key = value, got '{line}'", lineno + 1))
            })?;
            let key = key.trim().to_string();
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::param(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
        }

        let mut take = |key: &str| values.remove(key);
        let setting: Setting = take("setting")
            .ok_or_else(|| Error::param("missing key 'setting'"))?
            .parse()?;
        let n = parse_num(&take("n").ok_or_else(|| Error::param("missing key 'n'"))?, "n")?;
        let theta = take("theta").map(|v| parse_num(&v, "theta")).transpose()?;
        let k = take("k").map(|v| parse_num(&v, "k")).transpose()?;
        let delta = take("delta").map(|v| parse_num::<usize>(&v, "delta")).transpose()?;
        let gamma = take("gamma").map(|v| parse_num::<usize>(&v, "gamma")).transpose()?;
        let constraint = match setting {
            Setting::DeltaNonAdaptive | Setting::DeltaAdaptive => {
                delta.ok_or_else(|| Error::param("missing key 'delta'"))?
            }
            Setting::GammaNonAdaptive | Setting::GammaAdaptive => {
                gamma.ok_or_else(|| Error::param("missing key 'gamma'"))?
            }
        };
        let m_grid = take("m_grid").map(|v| parse_grid(&v)).transpose()?.unwrap_or_default();
        let trials = parse_num(&take("trials").ok_or_else(|| Error::param("missing key 'trials'"))?, "trials")?;
        let master_seed = take("master_seed")
            .or_else(|| take("seed"))
            .map(|v| parse_num(&v, "master_seed"))
            .transpose()?
            .unwrap_or(0);
        let decoder = take("decoder").map(|v| v.parse()).transpose()?.unwrap_or(Decoder::Dd);
        let timing = take("timing")
            .map(|v| match v.as_str() {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                other => Err(Error::param(format!("timing: expected true/false, got '{other}'"))),
            })
            .transpose()?
            .unwrap_or(false);
        if let Some(unknown) = values.keys().next() {
            return Err(Error::param(format!("unknown key '{unknown}'")));
        }

        let config = SweepConfig {
            setting,
            n,
            theta,
            k,
            constraint,
            m_grid,
            trials,
            master_seed,
            decoder,
            timing,
        };
        config.validate()?;
        Ok(config)
    }
}

fn parse_num<T: FromStr>(value: &str, key: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::param(format!("{key}: cannot parse '{value}'")))
}

fn parse_grid(value: &str) -> Result<Vec<usize>> {
    let mut grid = Vec::new();
    for entry in value.split(',').map(str::trim).filter(|e| !e.is_empty()) {
        let parts: Vec<&str> = entry.split(':').collect();
        match parts.as_slice() {
            [single] => grid.push(parse_num(single, "m_grid")?),
            [start, end, step] => {
                let start: usize = parse_num(start, "m_grid")?;
                let end: usize = parse_num(end, "m_grid")?;
                let step: usize = parse_num(step, "m_grid")?;
                if step == 0 {
                    return Err(Error::param("m_grid: range step must be positive"));
                }
                grid.extend((start..=end).step_by(step));
            }
            _ => return Err(Error::param(format!("m_grid: bad entry '{entry}'"))),
        }
    }
    Ok(grid)
}

/// Reads and validates a sweep configuration file.
pub fn read_config(path: impl AsRef<Path>) -> Result<SweepConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SweepConfig::parse(&text)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub setting: Setting,
    pub n: usize,
    pub theta: f64,
    pub k: usize,
    pub constraint: usize,
    /// Test count actually used, after snapping to a buildable value.
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    /// `None` when the row was skipped.
    pub success_rate: Option<f64>,
    pub wall_ms: u128,
    pub master_seed: u64,
    /// Why the design could not be built, for skipped rows.
    pub skipped: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdfRecord {
    pub tests_used: usize,
    pub count: usize,
    pub cumulative_fraction: f64,
}

/// Test-count distribution of an adaptive setting plus the parameters
/// echoed into every CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdfReport {
    pub setting: Setting,
    pub n: usize,
    pub theta: f64,
    pub k: usize,
    pub constraint: usize,
    pub master_seed: u64,
    pub records: Vec<CdfRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SweepOutput {
    NonAdaptive(Vec<SweepRecord>),
    Adaptive(CdfReport),
}

fn with_threads<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::param(format!("cannot start {t} worker threads: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// Test count the builder will actually accept for `m`.
fn effective_m(config: &SweepConfig, m: usize) -> usize {
    match config.setting {
        Setting::GammaNonAdaptive if config.theta() >= 0.5 => {
            snap_divisible_m(config.n, m, config.constraint)
        }
        Setting::GammaNonAdaptive if config.constraint.is_multiple_of(2) && !m.is_multiple_of(2) => m + 1,
        _ => m,
    }
}

fn build_design(config: &SweepConfig, m: usize, seed: u64) -> Result<PoolingDesign> {
    // Zero tests satisfy every degree constraint.
    if m == 0 && !config.setting.is_adaptive() {
        return PoolingDesign::from_tests(config.n, &[]);
    }
    let rng = &mut stream_rng(seed, Stream::Design);
    match config.setting {
        Setting::DeltaNonAdaptive => build_delta_regular(config.n, m, config.constraint, rng),
        Setting::GammaNonAdaptive if config.theta() >= 0.5 => {
            build_gamma_config(config.n, m, config.constraint, rng)
        }
        Setting::GammaNonAdaptive => build_gamma_matching(config.n, m, config.constraint, rng),
        _ => Err(Error::param(format!("{} has no pooling design", config.setting))),
    }
}

/// Runs one non-adaptive trial; true when the decoder recovers the truth.
pub fn nonadaptive_trial(config: &SweepConfig, m: usize, seed: u64) -> Result<bool> {
    let design = build_design(config, m, seed)?;
    let sigma = draw_uniform_k_sparse(config.n, config.k(), &mut stream_rng(seed, Stream::Infection))?;
    let outcomes = compute_outcomes(&design, &sigma)?;
    let result = match config.decoder {
        Decoder::Dd => dd(&design, &outcomes)?,
        Decoder::Comp => comp(&design, &outcomes)?,
    };
    Ok(result.matches(&sigma))
}

/// Success rate of the configured decoder at every `m` of the grid.
pub fn run_nonadaptive_sweep(config: &SweepConfig, threads: Option<usize>) -> Result<Vec<SweepRecord>> {
    config.validate()?;
    if config.setting.is_adaptive() {
        return Err(Error::param(format!("{} is not a non-adaptive setting", config.setting)));
    }
    let mut rows = Vec::with_capacity(config.m_grid.len());
    for &requested in &config.m_grid {
        let m = effective_m(config, requested);
        let started = Instant::now();
        let mut row = SweepRecord {
            setting: config.setting,
            n: config.n,
            theta: config.theta(),
            k: config.k(),
            constraint: config.constraint,
            m,
            trials: config.trials,
            successes: 0,
            success_rate: None,
            wall_ms: 0,
            master_seed: config.master_seed,
            skipped: None,
        };
        // Builder parameter checks are deterministic in (n, m, constraint).
        if let Err(e) = build_design(config, m, trial_seed(config.master_seed, m as u64, 0)) {
            match e {
                Error::Parameter(_) | Error::Divisibility { .. } => {
                    row.trials = 0;
                    row.skipped = Some(e.to_string());
                    rows.push(row);
                    continue;
                }
                other => return Err(other),
            }
        }
        let outcomes: Vec<bool> = with_threads(threads, || {
            (0..config.trials)
                .into_par_iter()
                .map(|t| nonadaptive_trial(config, m, trial_seed(config.master_seed, m as u64, t as u64)))
                .collect::<Result<Vec<bool>>>()
        })??;
        row.successes = outcomes.into_iter().filter(|&s| s).count();
        row.success_rate = Some(row.successes as f64 / row.trials as f64);
        if config.timing {
            row.wall_ms = started.elapsed().as_millis();
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Runs one adaptive trial and returns the number of tests it used. A
/// recovery error is an integrity failure naming the seed.
pub fn adaptive_trial(config: &SweepConfig, trial: usize, seed: u64) -> Result<usize> {
    let sigma = draw_uniform_k_sparse(config.n, config.k(), &mut stream_rng(seed, Stream::Infection))?;
    let mut oracle = TestOracle::new(sigma);
    let report = match config.setting {
        Setting::DeltaAdaptive => adaptive_delta(config.n, config.k(), config.constraint, &mut oracle)?,
        Setting::GammaAdaptive => adaptive_gamma(
            config.n,
            config.constraint,
            &mut oracle,
            &mut stream_rng(seed, Stream::Grouping),
        )?,
        _ => return Err(Error::param(format!("{} is not an adaptive setting", config.setting))),
    };
    if !report.matches(oracle.truth()) {
        return Err(Error::integrity(format!(
            "adaptive recovery failed at trial {trial} (seed {seed}, master_seed {})",
            config.master_seed
        )));
    }
    Ok(report.tests_used)
}

/// Distribution of tests used across `trials` adaptive runs.
pub fn run_adaptive_cdf(config: &SweepConfig, threads: Option<usize>) -> Result<CdfReport> {
    config.validate()?;
    if !config.setting.is_adaptive() {
        return Err(Error::param(format!("{} is not an adaptive setting", config.setting)));
    }
    let counts: Vec<usize> = with_threads(threads, || {
        (0..config.trials)
            .into_par_iter()
            .map(|t| adaptive_trial(config, t, trial_seed(config.master_seed, 0, t as u64)))
            .collect::<Result<Vec<usize>>>()
    })??;
    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for c in counts {
        *histogram.entry(c).or_insert(0) += 1;
    }
    let mut cumulative = 0usize;
    let records = histogram
        .into_iter()
        .map(|(tests_used, count)| {
            cumulative += count;
            CdfRecord {
                tests_used,
                count,
                cumulative_fraction: cumulative as f64 / config.trials as f64,
            }
        })
        .collect();
    Ok(CdfReport {
        setting: config.setting,
        n: config.n,
        theta: config.theta(),
        k: config.k(),
        constraint: config.constraint,
        master_seed: config.master_seed,
        records,
    })
}

pub fn run_sweep(config: &SweepConfig, threads: Option<usize>) -> Result<SweepOutput> {
    if config.setting.is_adaptive() {
        run_adaptive_cdf(config, threads).map(SweepOutput::Adaptive)
    } else {
        run_nonadaptive_sweep(config, threads).map(SweepOutput::NonAdaptive)
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("<csv output>", io),
        other => Error::integrity(format!("csv encoding failed: {other:?}")),
    }
}

pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER).map_err(csv_error)?;
    for r in records {
        let rate = r
            .success_rate
            .map_or_else(|| SKIPPED_MARKER.to_string(), |v| v.to_string());
        w.write_record([
            r.setting.to_string(),
            r.n.to_string(),
            r.theta.to_string(),
            r.k.to_string(),
            r.constraint.to_string(),
            r.m.to_string(),
            r.trials.to_string(),
            r.successes.to_string(),
            rate,
            r.wall_ms.to_string(),
            r.master_seed.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))
}

pub fn write_cdf_csv<W: Write>(report: &CdfReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CDF_HEADER).map_err(csv_error)?;
    for r in &report.records {
        w.write_record([
            report.setting.to_string(),
            report.n.to_string(),
            report.theta.to_string(),
            report.k.to_string(),
            report.constraint.to_string(),
            r.tests_used.to_string(),
            r.count.to_string(),
            r.cumulative_fraction.to_string(),
            report.master_seed.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))
}

pub fn write_output<W: Write>(output: &SweepOutput, out: W) -> Result<()> {
    match output {
        SweepOutput::NonAdaptive(rows) => write_sweep_csv(rows, out),
        SweepOutput::Adaptive(report) => write_cdf_csv(report, out),
    }
}

/// Writes the sweep CSV to `path`, header included even when empty.
pub fn write_csv(output: &SweepOutput, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_output(output, std::io::BufWriter::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}
