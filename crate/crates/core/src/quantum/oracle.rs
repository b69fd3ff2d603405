//! Dense density-matrix integrator for small bases, used to check the
//! trajectory backend.
//!
//! Each period conjugates `rho` with the kick unitary, then integrates the
//! master equation
//!
//! ```text
//! d rho / dt = -i [H, rho] - 1/2 sum_mu {L_mu^dag L_mu, rho} + sum_mu L_mu rho L_mu^dag
//! ```
//!
//! over unit time with classical fixed-step RK4. `H = tau n^2 / 2` and the
//! jump operators are built entry by entry from their ladder definition; no
//! structure shared with the trajectory code is assumed.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::space::HilbertSpec;
use crate::error::{Error, Result};
use crate::model::ModelParams;

pub type DensityMatrix = DMatrix<Complex64>;

/// Largest basis the oracle accepts.
pub const MAX_ORACLE_DIM: usize = 64;

const INPUT_TOL: f64 = 1e-10;

/// Sparse operator as `(row, col, value)` triplets.
#[derive(Debug, Clone, Default)]
struct Sparse {
    entries: Vec<(usize, usize, Complex64)>,
}

impl Sparse {
    fn push(&mut self, row: usize, col: usize, value: Complex64) {
        self.entries.push((row, col, value));
    }

    /// `out += scale * (self * rho)`
    fn left_mul_add(&self, rho: &DensityMatrix, scale: Complex64, out: &mut DensityMatrix) {
        let n = rho.ncols();
        for &(a, b, v) in &self.entries {
            let f = scale * v;
            for j in 0..n {
                out[(a, j)] += f * rho[(b, j)];
            }
        }
    }

    /// `out += scale * (rho * self)`
    fn right_mul_add(&self, rho: &DensityMatrix, scale: Complex64, out: &mut DensityMatrix) {
        let n = rho.nrows();
        for &(a, b, v) in &self.entries {
            let f = scale * v;
            for i in 0..n {
                out[(i, b)] += f * rho[(i, a)];
            }
        }
    }

    /// `out += self * rho * self^dag`
    fn sandwich_add(&self, rho: &DensityMatrix, out: &mut DensityMatrix) {
        for &(a, b, v) in &self.entries {
            for &(c, d, w) in &self.entries {
                out[(a, c)] += v * rho[(b, d)] * w.conj();
            }
        }
    }

    /// `self^dag * self`
    fn gram(&self) -> Sparse {
        let mut dense = std::collections::BTreeMap::new();
        for &(a, b, v) in &self.entries {
            for &(c, d, w) in &self.entries {
                if a == c {
                    *dense.entry((b, d)).or_insert(Complex64::default()) += v.conj() * w;
                }
            }
        }
        Sparse {
            entries: dense.into_iter().map(|((r, c), v)| (r, c, v)).collect(),
        }
    }
}

struct Generator {
    hamiltonian: Sparse,
    anticommutator: Sparse,
    jumps: Vec<Sparse>,
}

impl Generator {
    fn new(params: &ModelParams, spec: &HilbertSpec) -> Self {
        let idx = |n: i64| spec.n_to_index(n).expect("index inside basis");
        let g = params.coupling();
        let n_max = spec.n_max();

        let mut hamiltonian = Sparse::default();
        for n in spec.momentum_indices() {
            let e = 0.5 * spec.tau() * (n * n) as f64;
            hamiltonian.push(idx(n), idx(n), Complex64::new(e, 0.0));
        }
        // L1 = g sum_{n>=0} sqrt(n+1) |n><n+1|,  L2 = g sum_{n>=0} sqrt(n+1) |-n><-n-1|
        let mut lower = Sparse::default();
        let mut raise = Sparse::default();
        for n in 0..n_max {
            let v = Complex64::new(g * ((n + 1) as f64).sqrt(), 0.0);
            lower.push(idx(n), idx(n + 1), v);
            raise.push(idx(-n), idx(-n - 1), v);
        }
        let mut anticommutator = Sparse::default();
        for op in [&lower, &raise] {
            anticommutator.entries.extend(op.gram().entries);
        }
        Generator {
            hamiltonian,
            anticommutator,
            jumps: vec![lower, raise],
        }
    }

    fn rhs(&self, rho: &DensityMatrix, out: &mut DensityMatrix) {
        out.fill(Complex64::default());
        let minus_i = Complex64::new(0.0, -1.0);
        let half = Complex64::new(-0.5, 0.0);
        self.hamiltonian.left_mul_add(rho, minus_i, out);
        self.hamiltonian.right_mul_add(rho, -minus_i, out);
        self.anticommutator.left_mul_add(rho, half, out);
        self.anticommutator.right_mul_add(rho, half, out);
        for op in &self.jumps {
            op.sandwich_add(rho, out);
        }
    }
}

/// Kick unitary in the momentum basis,
/// `U_mn = (1/N) sum_j exp(-i (m - n) x_j) exp(-i (K/tau) V(x_j))`.
pub fn kick_matrix(params: &ModelParams, spec: &HilbertSpec) -> DensityMatrix {
    let dim = spec.dim();
    let xs = spec.positions();
    let strength = params.quantum_kick();
    let n_max = spec.n_max();
    // Entries depend on m - n only.
    let band: Vec<Complex64> = (-2 * n_max..=2 * n_max)
        .map(|d| {
            xs.iter()
                .map(|x| Complex64::from_polar(1.0, -(d as f64) * x - strength * params.potential_shape(*x)))
                .sum::<Complex64>()
                / dim as f64
        })
        .collect();
    DMatrix::from_fn(dim, dim, |m, n| {
        band[(m as i64 - n as i64 + 2 * n_max) as usize]
    })
}

/// Checks that `rho` is a density matrix on `spec` within `1e-10`.
pub fn validate_density(rho: &DensityMatrix, spec: &HilbertSpec) -> Result<()> {
    let dim = spec.dim();
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::InvalidInput(format!(
            "density matrix is {}x{}, basis has dimension {dim}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let defect = hermiticity_defect(rho);
    if defect > INPUT_TOL {
        return Err(Error::InvalidInput(format!("density matrix is not Hermitian ({defect:e})")));
    }
    let trace = rho.trace();
    if (trace - Complex64::new(1.0, 0.0)).norm() > INPUT_TOL {
        return Err(Error::InvalidInput(format!("density matrix trace is {trace}")));
    }
    let hermitian = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let min_eig = hermitian
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min_eig < -INPUT_TOL {
        return Err(Error::InvalidInput(format!(
            "density matrix has negative eigenvalue {min_eig:e}"
        )));
    }
    Ok(())
}

/// Largest entry of `|rho - rho^dag|`.
pub fn hermiticity_defect(rho: &DensityMatrix) -> f64 {
    (rho - rho.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Evolves `rho0` through `periods` kick-plus-flight periods with RK4 step
/// `dt` (rounded down so that a whole number of steps spans unit time).
pub fn dense_lindblad_oracle(
    rho0: &DensityMatrix,
    params: &ModelParams,
    spec: &HilbertSpec,
    periods: u32,
    dt: f64,
) -> Result<DensityMatrix> {
    let mut rho = rho0.clone();
    let mut oracle = DenseOracle::new(params, spec, dt)?;
    validate_density(rho0, spec)?;
    for _ in 0..periods {
        oracle.period(&mut rho);
    }
    Ok(rho)
}

/// Stepper that can be driven one period at a time.
pub struct DenseOracle {
    generator: Generator,
    kick: DensityMatrix,
    steps: usize,
    k: [DensityMatrix; 4],
    stage: DensityMatrix,
}

impl DenseOracle {
    pub fn new(params: &ModelParams, spec: &HilbertSpec, dt: f64) -> Result<Self> {
        if spec.dim() > MAX_ORACLE_DIM {
            return Err(Error::param(
                "dim",
                format!("dense oracle supports at most {MAX_ORACLE_DIM} states, got {}", spec.dim()),
            ));
        }
        if !(dt > 0.0 && dt <= 1e-3) {
            return Err(Error::param("dt", format!("step {dt} must lie in (0, 1e-3]")));
        }
        if params.gamma() <= 0.0 {
            return Err(Error::param("gamma", "gamma = 0 is not supported"));
        }
        let dim = spec.dim();
        let zero = DMatrix::zeros(dim, dim);
        Ok(DenseOracle {
            generator: Generator::new(params, spec),
            kick: kick_matrix(params, spec),
            steps: (1.0 / dt).ceil() as usize,
            k: [zero.clone(), zero.clone(), zero.clone(), zero.clone()],
            stage: zero,
        })
    }

    pub fn period(&mut self, rho: &mut DensityMatrix) {
        *rho = &self.kick * &*rho * self.kick.adjoint();
        let h = 1.0 / self.steps as f64;
        for _ in 0..self.steps {
            self.rk4_step(rho, h);
        }
    }

    fn rk4_step(&mut self, rho: &mut DensityMatrix, h: f64) {
        let [k1, k2, k3, k4] = &mut self.k;
        let stage = &mut self.stage;
        let gen = &self.generator;

        gen.rhs(rho, k1);
        stage.copy_from(rho);
        add_scaled(stage, 0.5 * h, k1);
        gen.rhs(stage, k2);
        stage.copy_from(rho);
        add_scaled(stage, 0.5 * h, k2);
        gen.rhs(stage, k3);
        stage.copy_from(rho);
        add_scaled(stage, h, k3);
        gen.rhs(stage, k4);

        add_scaled(rho, h / 6.0, k1);
        add_scaled(rho, h / 3.0, k2);
        add_scaled(rho, h / 3.0, k3);
        add_scaled(rho, h / 6.0, k4);
    }
}

/// `y += a x`
fn add_scaled(y: &mut DensityMatrix, a: f64, x: &DensityMatrix) {
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi += xi * a;
    }
}

/// Real diagonal of `rho`.
pub fn diagonal(rho: &DensityMatrix) -> Vec<f64> {
    (0..rho.nrows()).map(|i| rho[(i, i)].re).collect()
}

/// `tr(rho n)` in units of the momentum index.
pub fn mean_index(rho: &DensityMatrix, spec: &HilbertSpec) -> f64 {
    diagonal(rho)
        .iter()
        .enumerate()
        .map(|(i, w)| spec.index_to_n(i) as f64 * w)
        .sum()
}

/// Purity `tr(rho^2)`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    (rho * rho).trace().re
}

/// Density matrix of a pure momentum eigenstate.
pub fn eigenstate_density(spec: &HilbertSpec, n: i64) -> Result<DensityMatrix> {
    let i = spec
        .n_to_index(n)
        .ok_or_else(|| Error::InvalidInput(format!("momentum {n} outside the basis")))?;
    let mut rho = DMatrix::zeros(spec.dim(), spec.dim());
    rho[(i, i)] = Complex64::new(1.0, 0.0);
    Ok(rho)
}

/// Uniform incoherent mixture over momenta in `[-pi, pi)`, the ensemble that
/// the trajectory initial-state sampler realizes.
pub fn initial_mixture(spec: &HilbertSpec) -> DensityMatrix {
    let range = spec.initial_indices();
    let weight = 1.0 / (range.end() - range.start() + 1) as f64;
    let mut rho = DMatrix::zeros(spec.dim(), spec.dim());
    for n in range {
        let i = spec.n_to_index(n).expect("initial indices lie inside the basis");
        rho[(i, i)] = Complex64::new(weight, 0.0);
    }
    rho
}
