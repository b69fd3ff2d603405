use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::flight::flight_in_place;
use super::kick::KickOperator;
use super::space::HilbertSpec;
use super::state::{sample_initial_state, QuantumState};
use crate::distribution::MomentumDistribution;
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Edge mass above which a run is flagged as truncation-suspect.
pub const EDGE_MASS_LIMIT: f64 = 1e-2;

// Trajectories per reduction chunk. Fixed so sums do not depend on the number
// of workers.
const CHUNK: usize = 16;

/// Repeats `periods` times: kick, then one unit of dissipative flight.
pub fn evolve_trajectory<R: Rng + ?Sized>(
    state: &QuantumState,
    params: &ModelParams,
    spec: &HilbertSpec,
    periods: u32,
    rng: &mut R,
) -> Result<QuantumState> {
    let mut kick = KickOperator::new(params, spec);
    let mut out = state.clone();
    for _ in 0..periods {
        kick.apply(&mut out);
        flight_in_place(&mut out, params, spec, rng)?;
    }
    Ok(out)
}

/// Random stream of trajectory `index` within a batch seeded by `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Monte Carlo estimate of the momentum diagonal of the density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBatch {
    pub count: usize,
    pub seed: u64,
    pub spec: HilbertSpec,
    /// Sum over trajectories of `|c_n|^2`.
    pub diagonal: Vec<f64>,
    /// Sum over trajectories of `|c_n|^4`, for per-cell standard errors.
    pub diagonal_sq: Vec<f64>,
    /// Sum and sum of squares of the per-trajectory mean momentum.
    pub current_sum: f64,
    pub current_sq_sum: f64,
    /// Largest probability seen in the outer 10% of cells, over all
    /// trajectories and periods.
    pub edge_mass: f64,
}

impl TrajectoryBatch {
    fn empty(spec: HilbertSpec, seed: u64) -> Self {
        TrajectoryBatch {
            count: 0,
            seed,
            spec,
            diagonal: vec![0.0; spec.dim()],
            diagonal_sq: vec![0.0; spec.dim()],
            current_sum: 0.0,
            current_sq_sum: 0.0,
            edge_mass: 0.0,
        }
    }

    fn record(&mut self, state: &QuantumState) {
        let mut current = 0.0;
        for (i, c) in state.amplitudes().iter().enumerate() {
            let w = c.norm_sqr();
            self.diagonal[i] += w;
            self.diagonal_sq[i] += w * w;
            current += w * self.spec.index_to_n(i) as f64;
        }
        current *= self.spec.tau();
        self.current_sum += current;
        self.current_sq_sum += current * current;
        self.count += 1;
    }

    fn merge(&mut self, other: &TrajectoryBatch) {
        for (a, b) in self.diagonal.iter_mut().zip(&other.diagonal) {
            *a += b;
        }
        for (a, b) in self.diagonal_sq.iter_mut().zip(&other.diagonal_sq) {
            *a += b;
        }
        self.current_sum += other.current_sum;
        self.current_sq_sum += other.current_sq_sum;
        self.count += other.count;
        self.edge_mass = self.edge_mass.max(other.edge_mass);
    }

    pub fn truncation_suspect(&self) -> bool {
        self.edge_mass > EDGE_MASS_LIMIT
    }

    pub fn mean_current(&self) -> f64 {
        self.current_sum / self.count as f64
    }

    /// Standard error of the trajectory-averaged current.
    pub fn current_stderr(&self) -> f64 {
        let n = self.count as f64;
        if self.count < 2 {
            return 0.0;
        }
        let mean = self.current_sum / n;
        let var = ((self.current_sq_sum - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }

    /// Standard error of each normalized diagonal entry.
    pub fn cell_stderr(&self) -> Vec<f64> {
        let n = self.count as f64;
        if self.count < 2 {
            return vec![0.0; self.diagonal.len()];
        }
        self.diagonal
            .iter()
            .zip(&self.diagonal_sq)
            .map(|(s, s2)| {
                let mean = s / n;
                let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
                (var / n).sqrt()
            })
            .collect()
    }
}

fn edge_mass(state: &QuantumState, edge: usize) -> f64 {
    let amps = state.amplitudes();
    let len = amps.len();
    amps[..edge]
        .iter()
        .chain(&amps[len - edge..])
        .map(|c| c.norm_sqr())
        .sum()
}

/// Runs `count` independent trajectories for `periods` periods and
/// accumulates their momentum probabilities. Trajectory `i` draws from
/// [`trajectory_rng`]`(seed, i)`, and partial sums are merged in index order,
/// so the result does not depend on scheduling.
pub fn run_batch(
    params: &ModelParams,
    spec: &HilbertSpec,
    periods: u32,
    count: usize,
    seed: u64,
) -> Result<TrajectoryBatch> {
    if count == 0 {
        return Err(Error::param("trajectories", "need at least one trajectory"));
    }
    let edge = spec.edge_cells();
    let chunks: Vec<TrajectoryBatch> = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| -> Result<TrajectoryBatch> {
            let mut kick = KickOperator::new(params, spec);
            let mut acc = TrajectoryBatch::empty(*spec, seed);
            for index in chunk * CHUNK..((chunk + 1) * CHUNK).min(count) {
                let mut rng = trajectory_rng(seed, index as u64);
                let mut state = sample_initial_state(spec, &mut rng);
                for _ in 0..periods {
                    kick.apply(&mut state);
                    flight_in_place(&mut state, params, spec, &mut rng)?;
                    acc.edge_mass = acc.edge_mass.max(edge_mass(&state, edge));
                }
                acc.record(&state);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;

    let mut total = TrajectoryBatch::empty(*spec, seed);
    for chunk in &chunks {
        total.merge(chunk);
    }
    Ok(total)
}

/// Normalized accumulated diagonal.
pub fn batch_distribution(batch: &TrajectoryBatch) -> Result<MomentumDistribution> {
    MomentumDistribution::from_weights(batch.diagonal.clone(), batch.spec.momenta())
}

/// `J_q = sum_i tau n_i P_i`.
pub fn quantum_current(dist: &MomentumDistribution, spec: &HilbertSpec) -> f64 {
    dist.probabilities()
        .iter()
        .enumerate()
        .map(|(i, w)| spec.tau() * spec.index_to_n(i) as f64 * w)
        .sum()
}
