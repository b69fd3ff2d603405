//! Dissipative free flight between kicks, unravelled into pure-state
//! trajectories.
//!
//! The jump operators lower `|n|` by one on either side of the ladder:
//!
//! ```text
//! L1 = g sum_{n>=0} sqrt(n+1) |n><n+1|
//! L2 = g sum_{n>=0} sqrt(n+1) |-n><-n-1|
//! ```
//!
//! with `g^2 = -ln(gamma)`. Since `L1^dag L1 + L2^dag L2 = g^2 |n|` the no-jump
//! generator `tau n^2 / 2 - (i/2) g^2 |n|` is diagonal, so waiting times are
//! found exactly from the survival function and no time stepping is needed.

use num_complex::Complex64;
use rand::Rng;

use super::space::HilbertSpec;
use super::state::QuantumState;
use crate::error::{Error, Result};
use crate::model::ModelParams;

// Powers of exp(-rate s) are re-anchored with an exact exponential this often.
const ANCHOR_EVERY: usize = 16;

/// Solves `sum_n |c_n|^2 exp(-g^2 |n| s) = r` for the waiting time `s`.
///
/// Returns `None` when no jump happens before `horizon`, which includes the
/// dark state `|0>` and `g = 0`.
pub fn jump_waiting_time(state: &QuantumState, g: f64, horizon: f64, r: f64) -> Option<f64> {
    let survival = Survival::new(state, g * g);
    survival.waiting_time(horizon, r)
}

/// Survival probability of the no-jump evolution, grouped by `|n|`.
struct Survival {
    weights: Vec<f64>,
    rate: f64,
}

impl Survival {
    fn new(state: &QuantumState, rate: f64) -> Self {
        let amps = state.amplitudes();
        let n_max = (amps.len() - 1) / 2;
        let mut weights = vec![0.0; n_max + 1];
        for (i, c) in amps.iter().enumerate() {
            weights[i.abs_diff(n_max)] += c.norm_sqr();
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Survival { weights, rate }
    }

    /// Survival probability and its derivative at time `s`.
    fn eval(&self, s: f64) -> (f64, f64) {
        let q = (-self.rate * s).exp();
        let mut value = self.weights[0];
        let mut slope = 0.0;
        let mut power = 1.0;
        for (k, w) in self.weights.iter().enumerate().skip(1) {
            power = if k % ANCHOR_EVERY == 0 {
                (-self.rate * k as f64 * s).exp()
            } else {
                power * q
            };
            let term = w * power;
            value += term;
            slope -= self.rate * k as f64 * term;
        }
        (value, slope)
    }

    fn waiting_time(&self, horizon: f64, r: f64) -> Option<f64> {
        if self.rate == 0.0 || self.weights[0] >= r {
            return None;
        }
        let (at_horizon, _) = self.eval(horizon);
        if at_horizon > r {
            return None;
        }
        let mut lo = 0.0;
        let mut hi = horizon;
        let mean_k: f64 = self
            .weights
            .iter()
            .enumerate()
            .map(|(k, w)| k as f64 * w)
            .sum();
        let mut s = (-r.ln() / (self.rate * mean_k)).clamp(lo, hi);
        for _ in 0..200 {
            let (value, slope) = self.eval(s);
            let f = value - r;
            if f > 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let newton = s - f / slope;
            let next = if slope < 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            let step = (next - s).abs();
            s = next;
            if step <= 1e-13 * s || hi - lo <= 1e-13 * s {
                break;
            }
        }
        (s < horizon).then_some(s)
    }
}

/// Applies the no-jump evolution `exp(-(i tau n^2 / 2 + rate |n| / 2) s)`
/// without renormalizing.
pub(crate) fn propagate_no_jump(amps: &mut [Complex64], tau: f64, rate: f64, s: f64) {
    if s == 0.0 {
        return;
    }
    let n_max = (amps.len() - 1) / 2;
    // f_{n+1} = f_n * exp(-i tau s (2n+1)/2 - rate s / 2) for n >= 0, f_{-n} = f_n.
    let decay = Complex64::new(-0.5 * rate * s, 0.0);
    let step = Complex64::from_polar(1.0, -tau * s);
    let mut factor = Complex64::new(1.0, 0.0);
    let mut ratio = (decay + Complex64::new(0.0, -0.5 * tau * s)).exp();
    for k in 1..=n_max {
        if k % ANCHOR_EVERY == 0 {
            let kf = k as f64;
            factor = Complex64::new(-0.5 * rate * s * kf, -0.5 * tau * s * kf * kf).exp();
            ratio = (decay + Complex64::new(0.0, -0.5 * tau * s * (2.0 * kf + 1.0))).exp();
        } else {
            factor *= ratio;
            ratio *= step;
        }
        amps[n_max + k] *= factor;
        amps[n_max - k] *= factor;
    }
}

/// Applies one quantum jump, choosing `L1` or `L2` with probability
/// proportional to `||L_mu psi||^2`, and renormalizes.
pub fn apply_jump<R: Rng + ?Sized>(state: &QuantumState, rng: &mut R) -> Result<QuantumState> {
    let mut out = state.clone();
    jump_in_place(&mut out, rng)?;
    Ok(out)
}

pub(crate) fn jump_in_place<R: Rng + ?Sized>(state: &mut QuantumState, rng: &mut R) -> Result<()> {
    let amps = state.amplitudes_mut();
    let n_max = (amps.len() - 1) / 2;
    let mut up = 0.0;
    let mut down = 0.0;
    for k in 1..=n_max {
        up += k as f64 * amps[n_max + k].norm_sqr();
        down += k as f64 * amps[n_max - k].norm_sqr();
    }
    let total = up + down;
    if !(total > 0.0) {
        return Err(Error::InvalidInput("jump requested from a dark state".into()));
    }
    let lower_positive = rng.random::<f64>() * total < up;
    let zero = Complex64::default();
    if lower_positive {
        // c_m -> sqrt(m) c_m moved to m - 1, for m >= 1
        for k in 0..n_max {
            amps[n_max + k] = amps[n_max + k + 1] * ((k + 1) as f64).sqrt();
        }
        amps[2 * n_max] = zero;
        amps[..n_max].fill(zero);
    } else {
        for k in 0..n_max {
            amps[n_max - k] = amps[n_max - k - 1] * ((k + 1) as f64).sqrt();
        }
        amps[0] = zero;
        amps[n_max + 1..].fill(zero);
    }
    state.normalize();
    Ok(())
}

/// Evolves one trajectory through a unit-duration dissipative flight.
pub fn dissipative_flight<R: Rng + ?Sized>(
    state: &QuantumState,
    params: &ModelParams,
    spec: &HilbertSpec,
    rng: &mut R,
) -> Result<QuantumState> {
    let mut out = state.clone();
    flight_in_place(&mut out, params, spec, rng)?;
    Ok(out)
}

pub(crate) fn flight_in_place<R: Rng + ?Sized>(
    state: &mut QuantumState,
    params: &ModelParams,
    spec: &HilbertSpec,
    rng: &mut R,
) -> Result<()> {
    if params.gamma() <= 0.0 {
        return Err(Error::param(
            "gamma",
            "gamma = 0 (overdamped limit) is not supported by the quantum engine",
        ));
    }
    let rate = params.damping_rate();
    let g = rate.sqrt();
    let tau = spec.tau();
    let mut elapsed = 0.0;
    loop {
        let remaining = 1.0 - elapsed;
        let r = loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                break u;
            }
        };
        match jump_waiting_time(state, g, remaining, r) {
            Some(s) => {
                propagate_no_jump(state.amplitudes_mut(), tau, rate, s);
                state.normalize();
                jump_in_place(state, rng)?;
                elapsed += s;
            }
            None => {
                propagate_no_jump(state.amplitudes_mut(), tau, rate, remaining);
                state.normalize();
                return Ok(());
            }
        }
    }
}
