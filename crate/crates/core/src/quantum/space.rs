use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// Truncated momentum basis `n = -(N-1)/2 ..= (N-1)/2` and the matching
/// position grid `x_j = 2 pi j / N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HilbertSpec {
    dim: usize,
    tau: f64,
}

impl HilbertSpec {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Largest momentum index `(N-1)/2`.
    pub fn n_max(&self) -> i64 {
        (self.dim as i64 - 1) / 2
    }

    /// Momentum index of storage slot `i`.
    #[inline]
    pub fn index_to_n(&self, i: usize) -> i64 {
        i as i64 - self.n_max()
    }

    /// Storage slot of momentum index `n`, if it lies in the basis.
    #[inline]
    pub fn n_to_index(&self, n: i64) -> Option<usize> {
        let i = n + self.n_max();
        (0..self.dim as i64).contains(&i).then_some(i as usize)
    }

    pub fn momentum_indices(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.dim).map(|i| self.index_to_n(i))
    }

    /// Rescaled momenta `p = tau n`.
    pub fn momenta(&self) -> Vec<f64> {
        self.momentum_indices().map(|n| self.tau * n as f64).collect()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|j| TAU * j as f64 / self.dim as f64)
            .collect()
    }

    /// Momentum span `[-tau (N-1)/2, tau (N-1)/2]` covered by the basis.
    pub fn momentum_span(&self) -> (f64, f64) {
        let edge = self.tau * self.n_max() as f64;
        (-edge, edge)
    }

    /// Momentum indices with `tau n` in `[-pi, pi)`, restricted to the basis.
    pub fn initial_indices(&self) -> std::ops::RangeInclusive<i64> {
        let lo = (-PI / self.tau).ceil() as i64;
        let hi = (PI / self.tau).ceil() as i64 - 1;
        lo.max(-self.n_max())..=hi.min(self.n_max())
    }

    /// Number of cells on each side counted as the outer 10% of the basis.
    pub fn edge_cells(&self) -> usize {
        ((0.05 * self.dim as f64).round() as usize).max(1)
    }
}

pub fn build_space(dim: usize, tau: f64) -> Result<HilbertSpec> {
    if dim < 3 || dim % 2 == 0 {
        return Err(Error::param(
            "dim",
            format!("basis dimension must be odd and at least 3, got {dim}"),
        ));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::param("tau", format!("{tau} is not a finite value > 0")));
    }
    Ok(HilbertSpec { dim, tau })
}

/// Basis dimension used when none is configured: `3^6` at `tau = 0.137`, with
/// the covered span `N tau ~ 100` held fixed for the other values.
pub fn default_dim(tau: f64) -> usize {
    const TABLE: [(f64, usize); 3] = [(0.411, 243), (0.137, 729), (0.068, 1459)];
    if let Some((_, n)) = TABLE.iter().find(|(t, _)| (t - tau).abs() < 1e-12) {
        return *n;
    }
    let target = 100.0 / tau;
    let odd = 2.0 * ((target - 1.0) / 2.0).round() + 1.0;
    (odd as usize).max(3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_basis_spans_fifty_units() {
        let s = build_space(729, 0.137).unwrap();
        let (lo, hi) = s.momentum_span();
        assert!((hi - 49.868).abs() < 1e-9 && lo == -hi);
        assert!((hi - 49.9).abs() < 0.05);
    }

    #[test]
    fn small_ladder() {
        let s = build_space(3, 1.0).unwrap();
        assert_eq!(s.momentum_indices().collect::<Vec<_>>(), vec![-1, 0, 1]);
        assert_eq!(s.n_to_index(2), None);
        assert_eq!(s.n_to_index(-1), Some(0));
    }

    #[test]
    fn parity_rule() {
        assert!(build_space(4, 1.0).is_err());
        assert!(build_space(1, 1.0).is_err());
        assert!(build_space(5, 0.0).is_err());
    }

    #[test]
    fn initial_indices_cover_pi() {
        let s = build_space(243, 0.411).unwrap();
        assert_eq!(s.initial_indices(), -7..=7);
        // pi / tau is an integer here, so n = +4 lands on p = pi and is excluded
        let s = build_space(101, PI / 4.0).unwrap();
        assert_eq!(s.initial_indices(), -4..=3);
    }

    #[test]
    fn default_dims() {
        assert_eq!(default_dim(0.411), 243);
        assert_eq!(default_dim(0.137), 729);
        assert_eq!(default_dim(0.068), 1459);
        assert_eq!(default_dim(1.0), 101);
        assert_eq!(default_dim(0.2) % 2, 1);
    }
}
