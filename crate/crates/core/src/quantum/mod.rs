//! Open-system quantum evolution over a truncated momentum basis.
//!
//! Production runs unravel the master equation into pure-state quantum
//! trajectories with exact waiting times ([`run_batch`]). The dense
//! density-matrix integrator in [`oracle`] is a small-basis cross-check.

pub mod flight;
pub mod kick;
pub mod oracle;
pub mod space;
pub mod state;
pub mod trajectory;

pub use flight::{apply_jump, dissipative_flight, jump_waiting_time};
pub use kick::{apply_kick, KickOperator};
pub use oracle::{dense_lindblad_oracle, DenseOracle, DensityMatrix};
pub use space::{build_space, default_dim, HilbertSpec};
pub use state::{sample_initial_state, QuantumState};
pub use trajectory::{
    batch_distribution, evolve_trajectory, quantum_current, run_batch, trajectory_rng,
    TrajectoryBatch, EDGE_MASS_LIMIT,
};
