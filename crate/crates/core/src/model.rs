//! Model parameters and the biharmonic kick shared by the classical and
//! quantum engines.
//!
//! The sweep axis `kick` is the classical kick strength `K = tau * k`. The
//! classical map depends on `(K, gamma)` only, so a single classical result
//! underlies every value of the effective Planck constant. The quantum kick
//! phase strength is `K / tau`.

use std::f64::consts::{FRAC_PI_2, TAU};

use crate::error::{Error, Result};

pub const DEFAULT_ASYMMETRY: f64 = 0.5;
pub const DEFAULT_PHASE: f64 = FRAC_PI_2;
/// Effective Planck constant used when none is configured.
pub const DEFAULT_TAU: f64 = 0.411;

/// Validated, immutable model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    kick: f64,
    gamma: f64,
    a: f64,
    phi: f64,
    tau: f64,
}

impl ModelParams {
    /// Builds parameters with the default asymmetry `a = 0.5`, `phi = pi/2`.
    pub fn new(kick: f64, gamma: f64, tau: f64) -> Result<Self> {
        RawParams {
            kick: Some(kick),
            gamma: Some(gamma),
            tau: Some(tau),
            ..RawParams::default()
        }
        .validate()
    }

    /// Replaces the second-harmonic amplitude and phase.
    pub fn with_asymmetry(self, a: f64, phi: f64) -> Result<Self> {
        RawParams {
            a: Some(a),
            phi: Some(phi),
            ..RawParams::from(self)
        }
        .validate()
    }

    pub fn with_kick(self, kick: f64) -> Result<Self> {
        RawParams {
            kick: Some(kick),
            ..RawParams::from(self)
        }
        .validate()
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        RawParams {
            gamma: Some(gamma),
            ..RawParams::from(self)
        }
        .validate()
    }

    pub fn with_tau(self, tau: f64) -> Result<Self> {
        RawParams {
            tau: Some(tau),
            ..RawParams::from(self)
        }
        .validate()
    }

    /// Classical kick strength `K`.
    pub fn kick(&self) -> f64 {
        self.kick
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Effective Planck constant (the kick period).
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Phase strength of the quantum kick, `K / tau`.
    pub fn quantum_kick(&self) -> f64 {
        self.kick / self.tau
    }

    /// Jump-operator coupling `g` with `g^2 = -ln(gamma)`, so that one unit
    /// of dissipative evolution damps `<n>` by exactly `gamma`.
    pub fn coupling(&self) -> f64 {
        self.damping_rate().sqrt()
    }

    /// `g^2 = -ln(gamma)`; infinite for `gamma = 0`.
    pub fn damping_rate(&self) -> f64 {
        -self.gamma.ln()
    }

    /// Shape of the kick force with unit amplitude: `sin x + a sin(2x + phi)`.
    #[inline]
    pub fn force_shape(&self, x: f64) -> f64 {
        x.sin() + self.a * (2.0 * x + self.phi).sin()
    }

    /// Shape of the kick potential with unit amplitude:
    /// `cos x + (a/2) cos(2x + phi)`.
    #[inline]
    pub fn potential_shape(&self, x: f64) -> f64 {
        x.cos() + 0.5 * self.a * (2.0 * x + self.phi).cos()
    }
}

/// Momentum increment delivered by one kick at position `x`.
#[inline]
pub fn kick_force(x: f64, params: &ModelParams) -> f64 {
    params.kick * params.force_shape(x)
}

/// Kicked potential `K [cos x + (a/2) cos(2x + phi)]`; its negative
/// derivative is [`kick_force`]. The potential is the same for every kick.
pub fn potential(x: f64, _kick_index: u64, params: &ModelParams) -> f64 {
    params.kick * params.potential_shape(x)
}

/// Unvalidated parameter fields as read from a config file or flags.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RawParams {
    pub kick: Option<f64>,
    pub gamma: Option<f64>,
    pub a: Option<f64>,
    pub phi: Option<f64>,
    pub tau: Option<f64>,
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams {
            kick: Some(p.kick),
            gamma: Some(p.gamma),
            a: Some(p.a),
            phi: Some(p.phi),
            tau: Some(p.tau),
        }
    }
}

impl RawParams {
    /// Applies defaults and range checks. Diagnostics name the offending field.
    pub fn validate(self) -> Result<ModelParams> {
        let kick = self.kick.ok_or_else(|| Error::param("kick", "missing"))?;
        let gamma = self.gamma.ok_or_else(|| Error::param("gamma", "missing"))?;
        let a = self.a.unwrap_or(DEFAULT_ASYMMETRY);
        let phi = self.phi.unwrap_or(DEFAULT_PHASE);
        let tau = self.tau.unwrap_or(DEFAULT_TAU);

        if !kick.is_finite() || kick < 0.0 {
            return Err(Error::param("kick", format!("{kick} is not a finite value >= 0")));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::param("gamma", format!("{gamma} is outside [0, 1]")));
        }
        if !a.is_finite() {
            return Err(Error::param("a", format!("{a} is not finite")));
        }
        if !phi.is_finite() {
            return Err(Error::param("phi", format!("{phi} is not finite")));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::param("tau", format!("{tau} is not a finite value > 0")));
        }
        Ok(ModelParams {
            kick,
            gamma,
            a,
            phi,
            tau,
        })
    }
}

/// Uniform `(K, gamma)` grid including both endpoints of each axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub k_min: f64,
    pub k_max: f64,
    pub n_k: usize,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub n_gamma: usize,
    pub master_seed: u64,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        check_axis("k", self.k_min, self.k_max, self.n_k)?;
        check_axis("gamma", self.gamma_min, self.gamma_max, self.n_gamma)?;
        if self.k_min < 0.0 {
            return Err(Error::param("k", "kick range must be non-negative"));
        }
        if self.gamma_min < 0.0 || self.gamma_max > 1.0 {
            return Err(Error::param("gamma", "dissipation range must lie within [0, 1]"));
        }
        Ok(())
    }

    pub fn k_values(&self) -> Vec<f64> {
        axis(self.k_min, self.k_max, self.n_k)
    }

    pub fn gamma_values(&self) -> Vec<f64> {
        axis(self.gamma_min, self.gamma_max, self.n_gamma)
    }

    pub fn cell_count(&self) -> usize {
        self.n_k * self.n_gamma
    }
}

// A single-point axis may have min == max; otherwise the range must be proper.
fn check_axis(field: &'static str, min: f64, max: f64, count: usize) -> Result<()> {
    if count == 0 {
        return Err(Error::param(field, "grid needs at least one point"));
    }
    if !(min.is_finite() && max.is_finite()) {
        return Err(Error::param(field, "range bounds must be finite"));
    }
    if min > max || (count > 1 && min == max) {
        return Err(Error::param(field, format!("range {min}:{max} is empty")));
    }
    Ok(())
}

fn axis(min: f64, max: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![min];
    }
    let last = (count - 1) as f64;
    (0..count)
        .map(|i| {
            if i + 1 == count {
                max
            } else {
                min + (max - min) * (i as f64 / last)
            }
        })
        .collect()
}

/// Wraps an angle to `[0, 2 pi)`.
pub fn wrap_angle(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}
