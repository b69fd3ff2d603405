//! `(K, gamma)` grid sweeps with deterministic per-cell seeding,
//! parallel workers and resumable on-disk artifacts.

mod artifact;
mod runner;
mod seed;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

pub use artifact::{header_key_values, SweepArtifact, ARTIFACT_FORMAT, COLUMNS};
pub use runner::{resume, resume_checked, run_sweep, Progress, SweepOptions};
pub use seed::{cell_seed, splitmix64};

use crate::analysis::participation_ratio;
use crate::classical::{self, OUT_OF_RANGE_WARN};
use crate::error::{Error, Result};
use crate::model::{GridSpec, ModelParams, RawParams};
use crate::quantum::{self, build_space};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    Classical,
    Quantum,
}

impl Engine {
    pub(crate) fn seed_tag(self) -> u64 {
        match self {
            Engine::Classical => 0x43,
            Engine::Quantum => 0x51,
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Classical => "classical",
            Engine::Quantum => "quantum",
        })
    }
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "classical" => Ok(Engine::Classical),
            "quantum" => Ok(Engine::Quantum),
            other => Err(format!("unknown engine `{other}` (expected classical or quantum)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalRun {
    pub ensemble: usize,
    pub steps: u64,
    /// Momentum cells used for the participation ratio.
    pub eta_bins: usize,
    /// Momentum span covered by those cells.
    pub eta_span: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumRun {
    pub dim: usize,
    pub trajectories: usize,
    pub periods: u32,
    /// Turn truncation-suspect cells into failures.
    pub strict_truncation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EngineConfig {
    Classical(ClassicalRun),
    Quantum(QuantumRun),
}

impl EngineConfig {
    pub fn engine(&self) -> Engine {
        match self {
            EngineConfig::Classical(_) => Engine::Classical,
            EngineConfig::Quantum(_) => Engine::Quantum,
        }
    }
}

/// Everything needed to reproduce a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub grid: GridSpec,
    pub a: f64,
    pub phi: f64,
    /// Effective Planck constant; ignored by the classical engine.
    pub tau: f64,
    pub engine: EngineConfig,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.params_at(self.grid.k_min, self.grid.gamma_min)?;
        match self.engine {
            EngineConfig::Classical(run) => {
                if run.ensemble == 0 {
                    return Err(Error::param("ensemble", "need at least one point"));
                }
                if run.eta_bins < 2 {
                    return Err(Error::param("eta_bins", "need at least two bins"));
                }
                if !(run.eta_span > 0.0 && run.eta_span.is_finite()) {
                    return Err(Error::param("eta_span", "span must be positive"));
                }
            }
            EngineConfig::Quantum(run) => {
                let spec = build_space(run.dim, self.tau)?;
                if (spec.dim() as f64) * spec.tau() < std::f64::consts::TAU {
                    return Err(Error::param(
                        "dim",
                        "basis does not cover the initial momentum range [-pi, pi)",
                    ));
                }
                if run.trajectories == 0 {
                    return Err(Error::param("trajectories", "need at least one trajectory"));
                }
                if self.grid.gamma_min <= 0.0 {
                    return Err(Error::param(
                        "gamma",
                        "the quantum engine does not support gamma = 0",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn params_at(&self, kick: f64, gamma: f64) -> Result<ModelParams> {
        RawParams {
            kick: Some(kick),
            gamma: Some(gamma),
            a: Some(self.a),
            phi: Some(self.phi),
            tau: Some(self.tau),
        }
        .validate()
    }

    /// `classical` or `quantum@<tau>`.
    pub fn source_tag(&self) -> String {
        match self.engine {
            EngineConfig::Classical(_) => "classical".into(),
            EngineConfig::Quantum(_) => format!("quantum@{}", self.tau),
        }
    }

    /// Row-major cell index (`gamma` rows, `k` columns).
    pub fn cell_index(&self, i_k: usize, i_gamma: usize) -> usize {
        i_gamma * self.grid.n_k + i_k
    }
}

/// One unit of sweep work.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellTask {
    pub i_k: usize,
    pub i_gamma: usize,
    pub params: ModelParams,
    pub cell_seed: u64,
    pub run: EngineConfig,
}

impl CellTask {
    pub fn engine(&self) -> Engine {
        self.run.engine()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Ok,
    Failed(String),
}

impl CellStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, CellStatus::Ok)
    }
}

/// `ok` or `failed:<message>`, with tabs and newlines in the message blanked.
impl fmt::Display for CellStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellStatus::Ok => f.write_str("ok"),
            CellStatus::Failed(msg) => write!(f, "failed:{}", msg.replace(['\t', '\n', '\r'], " ")),
        }
    }
}

/// Per-cell observables. `stderr` is the Monte Carlo standard error of the
/// quantum current and NaN for classical cells. Equality treats NaN fields
/// as equal so that a reloaded artifact compares equal to the original.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub i_k: usize,
    pub i_gamma: usize,
    pub k: f64,
    pub gamma: f64,
    pub current: f64,
    pub eta: f64,
    pub stderr: f64,
    pub truncation_suspect: bool,
    pub status: CellStatus,
    pub wall_time_s: f64,
}

impl PartialEq for CellResult {
    fn eq(&self, other: &Self) -> bool {
        let same = |a: f64, b: f64| a == b || (a.is_nan() && b.is_nan());
        self.i_k == other.i_k
            && self.i_gamma == other.i_gamma
            && same(self.k, other.k)
            && same(self.gamma, other.gamma)
            && same(self.current, other.current)
            && same(self.eta, other.eta)
            && same(self.stderr, other.stderr)
            && self.truncation_suspect == other.truncation_suspect
            && self.status == other.status
            && same(self.wall_time_s, other.wall_time_s)
    }
}

/// Tasks for every grid cell in row-major order.
pub fn plan_grid(config: &SweepConfig) -> Result<Vec<CellTask>> {
    config.validate()?;
    let ks = config.grid.k_values();
    let gammas = config.grid.gamma_values();
    let engine = config.engine.engine();
    let mut tasks = Vec::with_capacity(config.grid.cell_count());
    for (i_gamma, gamma) in gammas.iter().enumerate() {
        for (i_k, k) in ks.iter().enumerate() {
            tasks.push(CellTask {
                i_k,
                i_gamma,
                params: config.params_at(*k, *gamma)?,
                cell_seed: cell_seed(config.grid.master_seed, i_k, i_gamma, engine),
                run: config.engine,
            });
        }
    }
    Ok(tasks)
}

/// Observables of one cell together with the distribution they came from.
#[derive(Debug, Clone)]
pub struct CellOutput {
    pub result: CellResult,
    pub distribution: crate::distribution::MomentumDistribution,
    /// Quantum: largest edge mass seen. Classical: out-of-span fraction.
    pub edge_mass: f64,
    /// Final classical ensemble, kept for point-cloud dumps.
    pub ensemble: Option<classical::ClassicalEnsemble>,
}

/// Runs one cell and keeps the full distribution.
pub fn run_cell_detailed(task: &CellTask) -> Result<CellOutput> {
    let start = Instant::now();
    let p = task.params;
    let mut result = CellResult {
        i_k: task.i_k,
        i_gamma: task.i_gamma,
        k: p.kick(),
        gamma: p.gamma(),
        current: f64::NAN,
        eta: f64::NAN,
        stderr: f64::NAN,
        truncation_suspect: false,
        status: CellStatus::Ok,
        wall_time_s: 0.0,
    };
    let (distribution, edge_mass, ensemble) = match task.run {
        EngineConfig::Classical(run) => {
            let e = classical::sample_initial(run.ensemble, task.cell_seed)?;
            let e = classical::evolve_ensemble(e, &p, run.steps);
            let binned = classical::discretize_momentum(&e, run.eta_bins, run.eta_span)?;
            result.current = classical::classical_current(&e)?;
            result.truncation_suspect = binned.out_of_range > OUT_OF_RANGE_WARN;
            (binned.distribution, binned.out_of_range, Some(e))
        }
        EngineConfig::Quantum(run) => {
            let spec = build_space(run.dim, p.tau())?;
            let batch = quantum::run_batch(&p, &spec, run.periods, run.trajectories, task.cell_seed)?;
            let dist = quantum::batch_distribution(&batch)?;
            result.current = quantum::quantum_current(&dist, &spec);
            result.stderr = batch.current_stderr();
            result.truncation_suspect = batch.truncation_suspect();
            if run.strict_truncation && result.truncation_suspect {
                result.status = CellStatus::Failed(format!(
                    "truncation-suspect: edge mass {:.3e} exceeds {}",
                    batch.edge_mass,
                    quantum::EDGE_MASS_LIMIT
                ));
            }
            (dist, batch.edge_mass, None)
        }
    };
    result.eta = participation_ratio(&distribution)?;
    result.wall_time_s = start.elapsed().as_secs_f64();
    Ok(CellOutput {
        result,
        distribution,
        edge_mass,
        ensemble,
    })
}

/// Runs one cell. Errors and panics are recorded in the result's status.
pub fn run_cell(task: &CellTask) -> CellResult {
    let start = Instant::now();
    let outcome = std::panic::catch_unwind(|| run_cell_detailed(task));
    let message = match outcome {
        Ok(Ok(out)) => return out.result,
        Ok(Err(e)) => e.to_string(),
        Err(panic) => panic
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into()),
    };
    CellResult {
        i_k: task.i_k,
        i_gamma: task.i_gamma,
        k: task.params.kick(),
        gamma: task.params.gamma(),
        current: f64::NAN,
        eta: f64::NAN,
        stderr: f64::NAN,
        truncation_suspect: false,
        status: CellStatus::Failed(message),
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}
