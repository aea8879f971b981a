//! Line-oriented instance dumps for reproducing a single trial.
//!
//! ```text
//! pooltest-instance v1
//! n = 12
//! k = 2
//! seed = 5
//! kind = delta
//! m = 8
//! constraint = 3
//! ```
//!
//! A generated instance is rebuilt from its seed. An `explicit` instance
//! lists every test as `test = a b c` and the truth as `infected = x y`.

use std::fmt::Write as _;
use std::path::Path;

use crate::design::{
    build_delta_regular, build_gamma_config, build_gamma_matching, DesignKind, PoolingDesign,
};
use crate::error::{Error, Result};
use crate::model::{draw_uniform_k_sparse, InfectionVector};
use crate::rng::{stream_rng, Stream};

pub const INSTANCE_HEADER: &str = "pooltest-instance v1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub kind: DesignKind,
    pub m: usize,
    /// Δ or Γ of a generated design; 0 for explicit ones.
    pub constraint: usize,
    pub tests: Option<Vec<Vec<usize>>>,
    pub infected: Option<Vec<usize>>,
}

impl Instance {
    pub fn generated(n: usize, k: usize, seed: u64, kind: DesignKind, m: usize, constraint: usize) -> Self {
        Instance { n, k, seed, kind, m, constraint, tests: None, infected: None }
    }

    /// Captures a concrete design and truth verbatim.
    pub fn explicit(design: &PoolingDesign, sigma: &InfectionVector, seed: u64) -> Self {
        Instance {
            n: design.n(),
            k: sigma.k(),
            seed,
            kind: DesignKind::Explicit,
            m: design.m(),
            constraint: 0,
            tests: Some((0..design.m()).map(|a| design.items_of(a).to_vec()).collect()),
            infected: Some(sigma.infected()),
        }
    }

    /// Rebuilds the design and the infection vector.
    pub fn materialize(&self) -> Result<(PoolingDesign, InfectionVector)> {
        let design = match (&self.tests, self.kind) {
            (Some(tests), _) => {
                let d = PoolingDesign::from_tests(self.n, tests)?;
                if d.m() != self.m {
                    return Err(Error::param(format!(
                        "instance declares m = {} but lists {} tests",
                        self.m,
                        d.m()
                    )));
                }
                d
            }
            (None, DesignKind::Explicit) => {
                return Err(Error::param("explicit instance has no test lines"))
            }
            (None, kind) => {
                let rng = &mut stream_rng(self.seed, Stream::Design);
                match kind {
                    DesignKind::DeltaRegular => build_delta_regular(self.n, self.m, self.constraint, rng)?,
                    DesignKind::GammaConfig => build_gamma_config(self.n, self.m, self.constraint, rng)?,
                    _ => build_gamma_matching(self.n, self.m, self.constraint, rng)?,
                }
            }
        };
        let sigma = match &self.infected {
            Some(list) => {
                let s = InfectionVector::from_infected(self.n, list)?;
                if s.k() != self.k {
                    return Err(Error::param(format!(
                        "instance declares k = {} but lists {} infected",
                        self.k,
                        s.k()
                    )));
                }
                s
            }
            None => draw_uniform_k_sparse(self.n, self.k, &mut stream_rng(self.seed, Stream::Infection))?,
        };
        Ok((design, sigma))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{INSTANCE_HEADER}");
        let _ = writeln!(out, "n = {}", self.n);
        let _ = writeln!(out, "k = {}", self.k);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "kind = {}", self.kind.as_str());
        let _ = writeln!(out, "m = {}", self.m);
        let _ = writeln!(out, "constraint = {}", self.constraint);
        for test in self.tests.iter().flatten() {
            let _ = writeln!(out, "test = {}", join(test));
        }
        if let Some(infected) = &self.infected {
            let _ = writeln!(out, "infected = {}", join(infected));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .enumerate()
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        match lines.next() {
            Some((_, INSTANCE_HEADER)) => {}
            _ => return Err(Error::param(format!("instance must start with '{INSTANCE_HEADER}'"))),
        }
        let (mut n, mut k, mut seed, mut kind, mut m, mut constraint) = (None, None, None, None, None, None);
        let mut tests: Vec<Vec<usize>> = Vec::new();
        let mut infected = None;
        for (idx, line) in lines {
            let at = |msg: String| Error::param(format!("instance line {}: {msg}", idx + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected key = value, got '{line}'")))?;
            let value = value.trim();
            let num = |v: &str| v.parse::<u64>().map_err(|_| at(format!("cannot parse '{v}'")));
            match key.trim() {
                "n" => n = Some(num(value)? as usize),
                "k" => k = Some(num(value)? as usize),
                "seed" => seed = Some(num(value)?),
                "m" => m = Some(num(value)? as usize),
                "constraint" => constraint = Some(num(value)? as usize),
                "kind" => {
                    kind = Some(match value {
                        "delta" => DesignKind::DeltaRegular,
                        "gamma-config" => DesignKind::GammaConfig,
                        "gamma-matching" => DesignKind::GammaMatching,
                        "explicit" => DesignKind::Explicit,
                        other => return Err(at(format!("unknown kind '{other}'"))),
                    })
                }
                "test" => tests.push(parse_list(value).map_err(|v| at(format!("cannot parse '{v}'")))?),
                "infected" => {
                    infected = Some(parse_list(value).map_err(|v| at(format!("cannot parse '{v}'")))?)
                }
                other => return Err(at(format!("unknown key '{other}'"))),
            }
        }
        let need = |v: Option<usize>, key: &str| v.ok_or_else(|| Error::param(format!("instance is missing '{key}'")));
        let kind = kind.ok_or_else(|| Error::param("instance is missing 'kind'"))?;
        let n = need(n, "n")?;
        let m = need(m, "m")?;
        let explicit_tests = kind == DesignKind::Explicit || !tests.is_empty();
        let k = match (k, &infected) {
            (Some(k), _) => k,
            (None, Some(list)) => list.len(),
            (None, None) => return Err(Error::param("instance is missing 'k'")),
        };
        Ok(Instance {
            n,
            k,
            seed: seed.unwrap_or(0),
            kind,
            m,
            constraint: constraint.unwrap_or(0),
            tests: explicit_tests.then_some(tests),
            infected,
        })
    }
}

fn join(values: &[usize]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse_list(value: &str) -> std::result::Result<Vec<usize>, String> {
    value
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| t.to_string()))
        .collect()
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Instance::parse(&text)
}
