use std::path::{Path, PathBuf};
use std::str::FromStr;

use toml::{Table, Value};

use crate::allocator::Method;
use crate::model::units::RateUnit;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Evaluate,
    SweepK,
    SweepD,
    Epsilon,
    Allocate,
    Visualize,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Evaluate => "evaluate",
            ExperimentKind::SweepK => "sweep-k",
            ExperimentKind::SweepD => "sweep-d",
            ExperimentKind::Epsilon => "epsilon",
            ExperimentKind::Allocate => "allocate",
            ExperimentKind::Visualize => "visualize",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        use ExperimentKind::*;
        [Evaluate, SweepK, SweepD, Epsilon, Allocate, Visualize]
            .into_iter()
            .find(|k| k.name() == s || (s == "visualize-allocation" && *k == Visualize))
            .ok_or_else(|| Error::Config(format!("unknown experiment kind {s:?}")))
    }
}

/// Parameters of one experiment run.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub subchannels: usize,
    pub ues: Vec<usize>,
    pub sparsity: Vec<usize>,
    pub drops: u64,
    pub fading_trials: u64,
    /// Random matrices per sparsity in the epsilon experiment.
    pub matrices: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub monte_carlo: bool,
    pub unit: RateUnit,
    pub max_iter: usize,
    /// Fixed scenario instead of random drops (evaluate, allocate, visualize).
    pub scenario: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// Drops and fading trials used for full-size runs.
pub const FULL_DROPS: u64 = 1000;
pub const FULL_TRIALS: u64 = 1000;
/// Reduced counts for quick runs and CI.
pub const FAST_DROPS: u64 = 100;
pub const FAST_TRIALS: u64 = 200;

impl ExperimentConfig {
    /// Defaults for `kind`.
    pub fn new(kind: ExperimentKind) -> Self {
        use Method::*;
        let base = Self {
            kind,
            subchannels: 50,
            ues: vec![150],
            sparsity: vec![2],
            drops: FULL_DROPS,
            fading_trials: FULL_TRIALS,
            matrices: 1000,
            seed: 1,
            methods: vec![Greedy, Regular, Random],
            monte_carlo: true,
            unit: RateUnit::Bits,
            max_iter: 10_000,
            scenario: None,
            out: None,
        };
        match kind {
            ExperimentKind::SweepK => Self {
                ues: vec![50, 75, 100, 125, 150],
                ..base
            },
            ExperimentKind::SweepD => Self {
                sparsity: vec![1, 2, 3, 4, 5, 6, 8, 10],
                methods: vec![Greedy, Regular, Random, Dense],
                ..base
            },
            ExperimentKind::Epsilon => Self {
                ues: vec![100],
                sparsity: vec![1, 2, 4, 8, 16, 50],
                drops: 1,
                ..base
            },
            ExperimentKind::Visualize => Self {
                subchannels: 30,
                ues: vec![90],
                drops: 1,
                methods: vec![Greedy],
                monte_carlo: false,
                ..base
            },
            ExperimentKind::Evaluate => Self {
                drops: 1,
                methods: vec![Greedy, Regular, Random, Dense],
                ..base
            },
            ExperimentKind::Allocate => Self {
                drops: 1,
                methods: vec![Greedy],
                monte_carlo: false,
                ..base
            },
        }
    }

    pub fn fast(mut self) -> Self {
        if self.drops > 1 {
            self.drops = FAST_DROPS;
        }
        self.fading_trials = FAST_TRIALS;
        self.matrices = self.matrices.min(200);
        self
    }

    /// Applies a flat TOML document on top of the current values.
    ///
    /// Keys: `kind`, `F`, `K`, `d` (`K` and `d` take an integer or a list),
    /// `drops`, `trials`, `matrices`, `seed`, `methods`, `mc`, `units`,
    /// `max_iter`, `scenario`, `out`. All offending keys are reported at once.
    pub fn apply_toml(&mut self, text: &str) -> Result<()> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut problems = Vec::new();
        for (key, value) in &table {
            if let Err(msg) = self.apply_key(key, value) {
                problems.push(format!("{key}: {msg}"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("offending keys: {}", problems.join("; "))))
        }
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_toml(&text)
    }

    fn apply_key(&mut self, key: &str, value: &Value) -> std::result::Result<(), String> {
        fn count(v: &Value) -> std::result::Result<u64, String> {
            match v.as_integer() {
                Some(i) if i >= 0 => Ok(i as u64),
                _ => Err(format!("expected a nonnegative integer, got {v}")),
            }
        }
        fn counts(v: &Value) -> std::result::Result<Vec<usize>, String> {
            match v {
                Value::Array(items) => items.iter().map(|x| count(x).map(|c| c as usize)).collect(),
                other => count(other).map(|c| vec![c as usize]),
            }
        }
        fn text(v: &Value) -> std::result::Result<&str, String> {
            v.as_str().ok_or_else(|| format!("expected a string, got {v}"))
        }
        match key {
            "kind" => self.kind = text(value)?.parse().map_err(|e: Error| e.to_string())?,
            "F" => self.subchannels = count(value)? as usize,
            "K" => self.ues = counts(value)?,
            "d" => self.sparsity = counts(value)?,
            "drops" => self.drops = count(value)?,
            "trials" => self.fading_trials = count(value)?,
            "matrices" => self.matrices = count(value)? as usize,
            "seed" => self.seed = count(value)?,
            "max_iter" => self.max_iter = count(value)? as usize,
            "methods" => {
                let names: Vec<&str> = match value {
                    Value::Array(items) => items.iter().map(text).collect::<std::result::Result<_, _>>()?,
                    other => text(other)?.split(',').collect(),
                };
                self.methods = names
                    .into_iter()
                    .map(str::parse)
                    .collect::<Result<_>>()
                    .map_err(|e| e.to_string())?;
            }
            "mc" => self.monte_carlo = value.as_bool().ok_or_else(|| format!("expected a boolean, got {value}"))?,
            "units" => {
                self.unit = match text(value)? {
                    "bits" => RateUnit::Bits,
                    "nats" => RateUnit::Nats,
                    other => return Err(format!("expected \"bits\" or \"nats\", got {other:?}")),
                }
            }
            "scenario" => self.scenario = Some(PathBuf::from(text(value)?)),
            "out" => self.out = Some(PathBuf::from(text(value)?)),
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Checks every field and lists all problems in one diagnostic.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.subchannels == 0 {
            problems.push("F: must be at least 1".to_string());
        }
        if self.ues.is_empty() || self.ues.contains(&0) {
            problems.push("K: needs at least one positive value".to_string());
        }
        if self.sparsity.is_empty() || self.sparsity.contains(&0) {
            problems.push("d: needs at least one positive value".to_string());
        }
        if let Some(&d) = self.sparsity.iter().find(|&&d| d > self.subchannels) {
            problems.push(format!("d: {d} exceeds F = {}", self.subchannels));
        }
        if self.methods.is_empty() {
            problems.push("methods: must not be empty".to_string());
        }
        if self.drops == 0 {
            problems.push("drops: must be at least 1".to_string());
        }
        if self.monte_carlo && self.fading_trials == 0 {
            problems.push("trials: must be at least 1".to_string());
        }
        if self.max_iter == 0 {
            problems.push("max_iter: must be at least 1".to_string());
        }
        if self.kind == ExperimentKind::Epsilon {
            if self.matrices < 2 {
                problems.push("matrices: epsilon needs at least 2".to_string());
            }
            if self.fading_trials < 2 {
                problems.push("trials: epsilon needs at least 2".to_string());
            }
        }
        if self.methods.contains(&Method::Regular) && self.scenario.is_none() {
            for &k in &self.ues {
                for &d in &self.sparsity {
                    if !(d * k).is_multiple_of(self.subchannels.max(1)) {
                        problems.push(format!(
                            "methods: regular needs d K divisible by F (d = {d}, K = {k}, F = {})",
                            self.subchannels
                        ));
                    }
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("offending keys: {}", problems.join("; "))))
        }
    }
}
