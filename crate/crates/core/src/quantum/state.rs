use num_complex::Complex64;
use rand::Rng;

use super::space::HilbertSpec;
use crate::error::{Error, Result};

/// Pure state over the truncated momentum basis, stored from `n = -n_max`
/// upwards.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    /// Normalizes `amplitudes`; rejects non-finite or zero vectors.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite amplitude".into()));
        }
        let mut s = QuantumState { amplitudes };
        if s.norm_sqr() == 0.0 {
            return Err(Error::InvalidInput("zero state vector".into()));
        }
        s.normalize();
        Ok(s)
    }

    /// Momentum eigenstate `|n>`.
    pub fn eigenstate(spec: &HilbertSpec, n: i64) -> Result<Self> {
        let idx = spec
            .n_to_index(n)
            .ok_or_else(|| Error::InvalidInput(format!("momentum {n} outside the basis")))?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); spec.dim()];
        amplitudes[idx] = Complex64::new(1.0, 0.0);
        Ok(QuantumState { amplitudes })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub(crate) fn normalize(&mut self) {
        let scale = 1.0 / self.norm();
        for c in &mut self.amplitudes {
            *c *= scale;
        }
    }

    /// Probabilities `|c_n|^2` in storage order.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Expectation of the rescaled momentum `tau n`.
    pub fn mean_momentum(&self, spec: &HilbertSpec) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, c)| spec.tau() * spec.index_to_n(i) as f64 * c.norm_sqr())
            .sum()
    }

    /// Amplitude on momentum `n`, zero outside the basis.
    pub fn amplitude(&self, spec: &HilbertSpec, n: i64) -> Complex64 {
        spec.n_to_index(n)
            .map(|i| self.amplitudes[i])
            .unwrap_or_default()
    }
}

/// Draws one momentum eigenstate `|n0>` with `n0` uniform over the indices
/// whose momentum lies in `[-pi, pi)`. Averaged over trajectories this is the
/// uniform incoherent mixture with zero mean momentum.
pub fn sample_initial_state<R: Rng + ?Sized>(spec: &HilbertSpec, rng: &mut R) -> QuantumState {
    let n0 = rng.random_range(spec.initial_indices());
    QuantumState::eigenstate(spec, n0).expect("initial indices lie inside the basis")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::space::build_space;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sampler_is_deterministic() {
        let spec = build_space(243, 0.411).unwrap();
        let a = sample_initial_state(&spec, &mut ChaCha8Rng::seed_from_u64(3));
        let b = sample_initial_state(&spec, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        let nonzero: Vec<_> = a.amplitudes().iter().filter(|c| c.norm() > 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(nonzero[0].norm(), 1.0);
    }

    #[test]
    fn sampler_is_uniform_on_admissible_set() {
        // Admissible set by enumeration: all n in the basis with tau n in [-pi, pi).
        let tau = 0.411;
        let spec = build_space(243, tau).unwrap();
        let admissible: Vec<i64> = spec
            .momentum_indices()
            .filter(|n| {
                let p = tau * *n as f64;
                (-std::f64::consts::PI..std::f64::consts::PI).contains(&p)
            })
            .collect();
        assert_eq!(admissible, (-7..=7).collect::<Vec<_>>());

        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let draws = 60_000;
        let mut counts = vec![0usize; spec.dim()];
        for _ in 0..draws {
            let s = sample_initial_state(&spec, &mut rng);
            let i = s.amplitudes().iter().position(|c| c.norm() > 0.0).unwrap();
            counts[i] += 1;
        }
        let expected = draws as f64 / admissible.len() as f64;
        let mut chi2 = 0.0;
        for (i, c) in counts.iter().enumerate() {
            let n = spec.index_to_n(i);
            if admissible.contains(&n) {
                chi2 += (*c as f64 - expected).powi(2) / expected;
            } else {
                assert_eq!(*c, 0, "drew inadmissible n={n}");
            }
        }
        // 14 degrees of freedom; the 0.999 quantile is 36.1
        assert!(chi2 < 36.1, "chi2 = {chi2}");
    }
}
