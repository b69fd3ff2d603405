//! Ensembles of classical phase-space points under the dissipative map
//!
//! ```text
//! p' = gamma p + K [sin x + a sin(2x + phi)]
//! x' = x + p'
//! ```
//!
//! written in the rescaled momentum `p = tau n`, so only `(K, gamma)` enter.
//! Positions are kept unbounded; only the kick looks at `x` modulo `2 pi`.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distribution::MomentumDistribution;
use crate::error::{Error, Result};
use crate::model::{kick_force, wrap_angle, ModelParams};

/// Out-of-span mass above which binning logs a warning.
pub const OUT_OF_RANGE_WARN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalState {
    pub x: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalEnsemble {
    pub states: Vec<ClassicalState>,
    pub seed: u64,
    pub steps_done: u64,
}

/// Draws `count` points with `x` uniform on `[0, 2 pi)` and `p` uniform on
/// `[-pi, pi)`.
pub fn sample_initial(count: usize, seed: u64) -> Result<ClassicalEnsemble> {
    if count == 0 {
        return Err(Error::param("ensemble", "ensemble needs at least one point"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = (0..count)
        .map(|_| ClassicalState {
            x: rng.random_range(0.0..TAU),
            p: rng.random_range(-PI..PI),
        })
        .collect();
    Ok(ClassicalEnsemble {
        states,
        seed,
        steps_done: 0,
    })
}

#[inline]
pub fn map_step(s: ClassicalState, params: &ModelParams) -> ClassicalState {
    let p = params.gamma() * s.p + kick_force(s.x, params);
    ClassicalState { x: s.x + p, p }
}

pub fn evolve_ensemble(
    mut ensemble: ClassicalEnsemble,
    params: &ModelParams,
    steps: u64,
) -> ClassicalEnsemble {
    ensemble.states.par_iter_mut().for_each(|s| {
        let mut cur = *s;
        for _ in 0..steps {
            cur = map_step(cur, params);
        }
        *s = cur;
    });
    ensemble.steps_done += steps;
    ensemble
}

/// Mean momentum of the ensemble, summed in state order.
pub fn classical_current(ensemble: &ClassicalEnsemble) -> Result<f64> {
    if ensemble.states.is_empty() {
        return Err(Error::InvalidInput("empty ensemble".into()));
    }
    let sum: f64 = ensemble.states.iter().map(|s| s.p).sum();
    Ok(sum / ensemble.states.len() as f64)
}

/// Standard error of the ensemble mean momentum.
pub fn current_stderr(ensemble: &ClassicalEnsemble) -> Result<f64> {
    let mean = classical_current(ensemble)?;
    let n = ensemble.states.len() as f64;
    if n < 2.0 {
        return Ok(0.0);
    }
    let var: f64 = ensemble
        .states
        .iter()
        .map(|s| (s.p - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    Ok((var / n).sqrt())
}

/// A binned momentum distribution plus the fraction of points that fell
/// outside the binned span and were folded into the edge cells.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedMomentum {
    pub distribution: MomentumDistribution,
    pub out_of_range: f64,
}

/// Histograms `p` over `n_bins` equal cells covering `[-span/2, span/2)`.
pub fn discretize_momentum(
    ensemble: &ClassicalEnsemble,
    n_bins: usize,
    p_span: f64,
) -> Result<BinnedMomentum> {
    if n_bins < 2 {
        return Err(Error::param("eta_bins", "need at least two bins"));
    }
    if !(p_span.is_finite() && p_span > 0.0) {
        return Err(Error::param("eta_span", "span must be positive"));
    }
    if ensemble.states.is_empty() {
        return Err(Error::InvalidInput("empty ensemble".into()));
    }
    let width = p_span / n_bins as f64;
    let low = -0.5 * p_span;
    let mut counts = vec![0.0; n_bins];
    let mut outside = 0usize;
    for s in &ensemble.states {
        let pos = ((s.p - low) / width).floor();
        let idx = if pos < 0.0 {
            outside += 1;
            0
        } else if pos >= n_bins as f64 {
            outside += 1;
            n_bins - 1
        } else {
            pos as usize
        };
        counts[idx] += 1.0;
    }
    let out_of_range = outside as f64 / ensemble.states.len() as f64;
    if out_of_range > OUT_OF_RANGE_WARN {
        log::warn!(
            "{:.3}% of the ensemble lies outside the binned span of {p_span}",
            100.0 * out_of_range
        );
    }
    let centres = (0..n_bins)
        .map(|i| low + (i as f64 + 0.5) * width)
        .collect();
    Ok(BinnedMomentum {
        distribution: MomentumDistribution::from_weights(counts, centres)?,
        out_of_range,
    })
}

/// A period-1 orbit: the state returns to itself modulo `2 pi` in `x` after
/// one step, advancing by `winding` turns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub x: f64,
    pub p: f64,
    pub winding: i64,
}

/// Checks whether `s` sits on a period-1 orbit to within `tol`.
pub fn detect_period_one(s: ClassicalState, params: &ModelParams, tol: f64) -> Option<FixedPoint> {
    let next = map_step(s, params);
    let advance = next.x - s.x;
    let winding = (advance / TAU).round();
    let x_defect = (advance - winding * TAU).abs();
    if x_defect < tol && (next.p - s.p).abs() < tol {
        Some(FixedPoint {
            x: wrap_angle(next.x),
            p: next.p,
            winding: winding as i64,
        })
    } else {
        None
    }
}

/// Renders the ensemble as `x mod 2pi<TAB>p` rows.
pub fn point_cloud_table(ensemble: &ClassicalEnsemble) -> String {
    let mut out = String::from("x_mod_2pi\tp\n");
    for s in &ensemble.states {
        out.push_str(&format!("{}\t{}\n", wrap_angle(s.x), s.p));
    }
    out
}
