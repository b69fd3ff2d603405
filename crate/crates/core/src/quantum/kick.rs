use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::space::HilbertSpec;
use super::state::QuantumState;
use crate::model::ModelParams;

/// Unitary kick `exp(-i (K/tau) [cos x + (a/2) cos(2x + phi)])`, applied on
/// the position grid between a pair of discrete Fourier transforms.
#[derive(Clone)]
pub struct KickOperator {
    phases: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex64>,
    scratch: Vec<Complex64>,
    n_max: usize,
}

impl KickOperator {
    pub fn new(params: &ModelParams, spec: &HilbertSpec) -> Self {
        let strength = params.quantum_kick();
        let phases = spec
            .positions()
            .into_iter()
            .map(|x| Complex64::from_polar(1.0, -strength * params.potential_shape(x)))
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(spec.dim());
        let inverse = planner.plan_fft_inverse(spec.dim());
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        KickOperator {
            phases,
            forward,
            inverse,
            buffer: vec![Complex64::default(); spec.dim()],
            scratch: vec![Complex64::default(); scratch_len],
            n_max: spec.n_max() as usize,
        }
    }

    pub fn apply(&mut self, state: &mut QuantumState) {
        let dim = self.buffer.len();
        let amps = state.amplitudes_mut();
        debug_assert_eq!(amps.len(), dim);

        // Momentum n sits at FFT bin n mod N.
        for (i, c) in amps.iter().enumerate() {
            self.buffer[(i + dim - self.n_max) % dim] = *c;
        }
        // psi(x_j) = sum_n c_n exp(i n x_j)
        self.inverse
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        for (psi, phase) in self.buffer.iter_mut().zip(&self.phases) {
            *psi *= phase;
        }
        self.forward
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        let scale = 1.0 / dim as f64;
        for (i, c) in amps.iter_mut().enumerate() {
            *c = self.buffer[(i + dim - self.n_max) % dim] * scale;
        }
    }
}

/// One-shot kick; builds a fresh [`KickOperator`].
pub fn apply_kick(state: &QuantumState, params: &ModelParams, spec: &HilbertSpec) -> QuantumState {
    let mut out = state.clone();
    KickOperator::new(params, spec).apply(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::space::build_space;
    use proptest::prelude::*;

    #[test]
    fn zero_kick_is_identity() {
        let spec = build_space(31, 0.3).unwrap();
        let params = ModelParams::new(0.0, 0.5, 0.3).unwrap();
        let amps: Vec<_> = (0..31)
            .map(|i| Complex64::new((i as f64).sin(), (2.0 * i as f64).cos()))
            .collect();
        let s = QuantumState::from_amplitudes(amps).unwrap();
        let out = apply_kick(&s, &params, &spec);
        for (a, b) in s.amplitudes().iter().zip(out.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn kick_from_eigenstate_matches_direct_sum() {
        // c'_m = (1/N) sum_j exp(-i m x_j) exp(-i k V(x_j)) exp(i n0 x_j)
        let spec = build_space(15, 0.5).unwrap();
        let params = ModelParams::new(1.7, 0.5, 0.5).unwrap();
        let n0 = 3;
        let s = QuantumState::eigenstate(&spec, n0).unwrap();
        let out = apply_kick(&s, &params, &spec);
        let xs = spec.positions();
        for m in spec.momentum_indices() {
            let direct: Complex64 = xs
                .iter()
                .map(|x| {
                    Complex64::from_polar(
                        1.0,
                        (n0 - m) as f64 * x - params.quantum_kick() * params.potential_shape(*x),
                    )
                })
                .sum::<Complex64>()
                / 15.0;
            assert!((direct - out.amplitude(&spec, m)).norm() < 1e-13);
        }
    }

    #[test]
    fn kick_pushes_momentum_along_the_force() {
        // The kick multiplies psi(x), so <n> shifts by exactly (K/tau) <F(x)>.
        let spec = build_space(255, 0.5).unwrap();
        let params = ModelParams::new(0.4, 0.5, 0.5).unwrap();
        let x0 = 1.2;
        let amps: Vec<_> = spec
            .momentum_indices()
            .map(|n| Complex64::from_polar((-(n * n) as f64 / 8.0).exp(), -(n as f64) * x0))
            .collect();
        let s = QuantumState::from_amplitudes(amps).unwrap();
        let out = apply_kick(&s, &params, &spec);
        let xs = spec.positions();
        let psi: Vec<Complex64> = xs
            .iter()
            .map(|x| {
                spec.momentum_indices()
                    .map(|n| s.amplitude(&spec, n) * Complex64::from_polar(1.0, n as f64 * x))
                    .sum()
            })
            .collect();
        let weight: f64 = psi.iter().map(|p| p.norm_sqr()).sum();
        let mean_force: f64 = psi
            .iter()
            .zip(&xs)
            .map(|(p, x)| p.norm_sqr() * params.force_shape(*x))
            .sum::<f64>()
            / weight;
        let shift = (out.mean_momentum(&spec) - s.mean_momentum(&spec)) / spec.tau();
        assert!(mean_force > 0.5, "{mean_force}");
        assert!((shift - params.quantum_kick() * mean_force).abs() < 1e-9, "{shift}");
    }

    proptest! {
        #[test]
        fn kick_preserves_norm(seed in 0u64..1000, kick in 0.0f64..20.0, tau in 0.05f64..1.0) {
            let spec = build_space(45, tau).unwrap();
            let params = ModelParams::new(kick, 0.5, tau).unwrap();
            let amps: Vec<_> = (0..45u64)
                .map(|i| {
                    let h = (seed * 7919 + i * 104729) as f64;
                    Complex64::new(h.sin(), (1.3 * h).cos())
                })
                .collect();
            let s = QuantumState::from_amplitudes(amps).unwrap();
            let out = apply_kick(&s, &params, &spec);
            prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }
}
