//! Plain-text `key=value` run configuration.
//!
//! The same keys are used by `--config` files and by the header of every
//! output file, so a header can be fed back as a config to reproduce a run.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{GridSpec, ModelParams, RawParams, DEFAULT_ASYMMETRY, DEFAULT_TAU};
use crate::quantum::default_dim;
use crate::sweep::{ClassicalRun, Engine, EngineConfig, QuantumRun, SweepConfig};

/// Line that closes a header block.
pub const END_HEADER: &str = "end_header";

/// Keys that carry provenance only and are ignored when reading a config.
const INFORMATIONAL_KEYS: &[&str] = &[
    "format",
    "code_version",
    "command",
    "out",
    "source",
    "missing",
    "k_axis",
    "gamma_axis",
];

const KNOWN_KEYS: &[&str] = &[
    "engine",
    "kick",
    "gamma",
    "k_range",
    "gamma_range",
    "a",
    "phi",
    "tau",
    "dim",
    "trajectories",
    "ensemble",
    "steps",
    "periods",
    "seed",
    "strict_truncation",
    "eta_bins",
    "eta_span",
];

/// Ordered `key=value` pairs; later assignments override earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: Vec<(String, String)>,
}

impl KeyValues {
    /// Parses `key=value` lines, skipping blanks and `#` comments and stopping
    /// at [`END_HEADER`].
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KeyValues::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line == END_HEADER {
                break;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidInput(format!("line {}: expected key=value, got `{line}`", lineno + 1))
            })?;
            kv.set(key.trim(), value.trim());
        }
        Ok(kv)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    fn parsed<T: FromStr>(&self, key: &'static str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| Error::param(key, format!("cannot parse `{v}`: {e}")))
            })
            .transpose()
    }

    /// Renders as `key=value` lines.
    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}

/// `MIN:MAX:COUNT` axis range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl FromStr for AxisRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err("expected MIN:MAX:COUNT".into());
        }
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
        Ok(AxisRange {
            min: num(parts[0])?,
            max: num(parts[1])?,
            count: parts[2]
                .trim()
                .parse()
                .map_err(|e| format!("`{}`: {e}", parts[2]))?,
        })
    }
}

impl fmt::Display for AxisRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.min, self.max, self.count)
    }
}

/// Fully resolved run configuration with defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub engine: Engine,
    /// Single-point kick strength `K` (point runs).
    pub kick: Option<f64>,
    /// Single-point dissipation (point runs).
    pub gamma: Option<f64>,
    pub k_range: AxisRange,
    pub gamma_range: AxisRange,
    pub a: f64,
    pub phi: f64,
    pub tau: f64,
    pub dim: usize,
    pub trajectories: usize,
    pub ensemble: usize,
    pub steps: u64,
    pub periods: u32,
    pub seed: u64,
    pub strict_truncation: bool,
    pub eta_bins: usize,
    pub eta_span: f64,
}

pub const DEFAULT_K_RANGE: AxisRange = AxisRange {
    min: 1.5,
    max: 10.0,
    count: 34,
};
pub const DEFAULT_GAMMA_RANGE: AxisRange = AxisRange {
    min: 0.2,
    max: 0.8,
    count: 20,
};
pub const DEFAULT_TRAJECTORIES: usize = 200;
pub const DEFAULT_ENSEMBLE: usize = 10_000;
pub const DEFAULT_STEPS: u64 = 10_000;
pub const DEFAULT_PERIODS: u32 = 50;
pub const DEFAULT_SEED: u64 = 1;
/// Classical momentum bins: the basis dimension of the `tau = 0.137` space.
pub const DEFAULT_ETA_BINS: usize = 729;
/// Classical binning span: the momentum range of the `tau = 0.137` space.
pub const DEFAULT_ETA_SPAN: f64 = 729.0 * 0.137;

impl RunConfig {
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        for (key, _) in kv.iter() {
            if !KNOWN_KEYS.contains(&key) && !INFORMATIONAL_KEYS.contains(&key) {
                return Err(Error::InvalidInput(format!("unknown config key `{key}`")));
            }
        }
        let engine = kv.parsed::<Engine>("engine")?.unwrap_or(Engine::Classical);
        let tau = kv.parsed("tau")?.unwrap_or(DEFAULT_TAU);
        if !(tau > 0.0 && f64::is_finite(tau)) {
            return Err(Error::param("tau", format!("{tau} is not a finite value > 0")));
        }
        let strict_truncation = match kv.get("strict_truncation") {
            None => false,
            Some(v) => parse_bool(v).ok_or_else(|| {
                Error::param("strict_truncation", format!("expected true/false, got `{v}`"))
            })?,
        };
        Ok(RunConfig {
            engine,
            kick: kv.parsed("kick")?,
            gamma: kv.parsed("gamma")?,
            k_range: kv.parsed("k_range")?.unwrap_or(DEFAULT_K_RANGE),
            gamma_range: kv.parsed("gamma_range")?.unwrap_or(DEFAULT_GAMMA_RANGE),
            a: kv.parsed("a")?.unwrap_or(DEFAULT_ASYMMETRY),
            phi: kv.parsed("phi")?.unwrap_or(FRAC_PI_2),
            tau,
            dim: kv.parsed("dim")?.unwrap_or_else(|| default_dim(tau)),
            trajectories: kv.parsed("trajectories")?.unwrap_or(DEFAULT_TRAJECTORIES),
            ensemble: kv.parsed("ensemble")?.unwrap_or(DEFAULT_ENSEMBLE),
            steps: kv.parsed("steps")?.unwrap_or(DEFAULT_STEPS),
            periods: kv.parsed("periods")?.unwrap_or(DEFAULT_PERIODS),
            seed: kv.parsed("seed")?.unwrap_or(DEFAULT_SEED),
            strict_truncation,
            eta_bins: kv.parsed("eta_bins")?.unwrap_or(DEFAULT_ETA_BINS),
            eta_span: kv.parsed("eta_span")?.unwrap_or(DEFAULT_ETA_SPAN),
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_key_values(&KeyValues::parse(text)?)
    }

    pub fn engine_config(&self) -> EngineConfig {
        match self.engine {
            Engine::Classical => EngineConfig::Classical(ClassicalRun {
                ensemble: self.ensemble,
                steps: self.steps,
                eta_bins: self.eta_bins,
                eta_span: self.eta_span,
            }),
            Engine::Quantum => EngineConfig::Quantum(QuantumRun {
                dim: self.dim,
                trajectories: self.trajectories,
                periods: self.periods,
                strict_truncation: self.strict_truncation,
            }),
        }
    }

    /// Parameters of a single-point run.
    pub fn point_params(&self) -> Result<ModelParams> {
        RawParams {
            kick: self.kick,
            gamma: self.gamma,
            a: Some(self.a),
            phi: Some(self.phi),
            tau: Some(self.tau),
        }
        .validate()
    }

    pub fn sweep_config(&self) -> Result<SweepConfig> {
        let grid = GridSpec {
            k_min: self.k_range.min,
            k_max: self.k_range.max,
            n_k: self.k_range.count,
            gamma_min: self.gamma_range.min,
            gamma_max: self.gamma_range.max,
            n_gamma: self.gamma_range.count,
            master_seed: self.seed,
        };
        let config = SweepConfig {
            grid,
            a: self.a,
            phi: self.phi,
            tau: self.tau,
            engine: self.engine_config(),
        };
        config.validate()?;
        Ok(config)
    }

    /// The single-point run as a 1x1 sweep, so a point result matches the
    /// corresponding sweep cell.
    pub fn point_sweep_config(&self) -> Result<SweepConfig> {
        let params = self.point_params()?;
        let single = |v: f64| AxisRange {
            min: v,
            max: v,
            count: 1,
        };
        RunConfig {
            k_range: single(params.kick()),
            gamma_range: single(params.gamma()),
            ..self.clone()
        }
        .sweep_config()
    }

    /// Every effective setting, for output headers.
    pub fn key_values(&self) -> KeyValues {
        let mut kv = KeyValues::default();
        kv.set("engine", self.engine.to_string());
        if let Some(k) = self.kick {
            kv.set("kick", k.to_string());
        }
        if let Some(g) = self.gamma {
            kv.set("gamma", g.to_string());
        }
        kv.set("k_range", self.k_range.to_string());
        kv.set("gamma_range", self.gamma_range.to_string());
        kv.set("a", self.a.to_string());
        kv.set("phi", self.phi.to_string());
        kv.set("tau", self.tau.to_string());
        kv.set("dim", self.dim.to_string());
        kv.set("trajectories", self.trajectories.to_string());
        kv.set("ensemble", self.ensemble.to_string());
        kv.set("steps", self.steps.to_string());
        kv.set("periods", self.periods.to_string());
        kv.set("seed", self.seed.to_string());
        kv.set("strict_truncation", self.strict_truncation.to_string());
        kv.set("eta_bins", self.eta_bins.to_string());
        kv.set("eta_span", self.eta_span.to_string());
        kv
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::from_key_values(&KeyValues::default()).expect("defaults are valid")
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_overrides() {
        let kv = KeyValues::parse("# run\nengine=quantum\n\ntau = 0.137\ntau=0.411\nend_header\nnot a pair").unwrap();
        let cfg = RunConfig::from_key_values(&kv).unwrap();
        assert_eq!(cfg.engine, Engine::Quantum);
        assert_eq!(cfg.tau, 0.411);
        assert_eq!(cfg.dim, 243);
    }

    #[test]
    fn rejects_unknown_keys_and_garbage() {
        assert!(RunConfig::parse("gama=0.3").is_err());
        assert!(RunConfig::parse("just text").is_err());
        let err = RunConfig::parse("tau=abc").unwrap_err();
        assert!(err.to_string().contains("tau"));
    }

    #[test]
    fn key_values_round_trip() {
        let cfg = RunConfig::parse("engine=quantum\nkick=7.5\ngamma=0.3\nk_range=2:10:10\nseed=99\nstrict_truncation=true").unwrap();
        let again = RunConfig::parse(&cfg.key_values().render()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn point_params_surface_model_errors() {
        let cfg = RunConfig::parse("kick=1\ngamma=1.5").unwrap();
        let err = cfg.point_params().unwrap_err();
        assert!(err.to_string().contains("gamma"));
    }

    #[test]
    fn axis_range_parse() {
        let r: AxisRange = "2:10:9".parse().unwrap();
        assert_eq!(r, AxisRange { min: 2.0, max: 10.0, count: 9 });
        assert!("2:10".parse::<AxisRange>().is_err());
        assert!("2:x:3".parse::<AxisRange>().is_err());
    }
}
