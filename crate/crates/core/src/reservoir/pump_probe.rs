//! Probe response to a pump through the carrier memory kernel:
//!
//! `u_pr(t) = c0 + c1∫e^{−(t−ξ)/τ}u²(ξ)dξ + c2∫e^{−(t−ξ)/τ}u²(ξ)u_pr(ξ)dξ`

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpProbeCoeffs {
    pub c0: f64,
    /// Units of 1/s (per unit pump²).
    pub c1: f64,
    pub c2: f64,
    pub tau_fc: f64,
}

impl PumpProbeCoeffs {
    /// `c0 = 1`, `c1 = c2 = −1/τ`: a unit pump step drives the probe from
    /// 1 to 0 as `e^{−2t/τ}`.
    pub fn unit(tau_fc: f64) -> Self {
        Self {
            c0: 1.0,
            c1: -1.0 / tau_fc,
            c2: -1.0 / tau_fc,
            tau_fc,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_fc > 0.0) {
            return Err(Error::invalid("tau_fc must be positive"));
        }
        if ![self.c0, self.c1, self.c2].iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("pump-probe coefficients must be finite"));
        }
        Ok(())
    }
}

/// Probe trace for a pump held constant over each `dt` step; sample `n` is
/// the probe at the end of step `n`.
///
/// The pump term is integrated exactly. The probe inside the second
/// integral is interpolated linearly across the step, which makes the
/// update implicit in the new probe value.
pub fn pump_probe_response(u: &[f64], coeffs: &PumpProbeCoeffs, dt: f64) -> Result<Vec<f64>> {
    coeffs.validate()?;
    if !(dt > 0.0) {
        return Err(Error::invalid("dt must be positive"));
    }
    if dt > coeffs.tau_fc / 20.0 * (1.0 + 1e-9) {
        return Err(Error::invalid(format!(
            "dt = {dt:e} s must not exceed tau_fc / 20 = {:e} s",
            coeffs.tau_fc / 20.0
        )));
    }
    let tau = coeffs.tau_fc;
    let r = dt / tau;
    let decay = (-r).exp();
    // Kernel moments over one step: ∫e^{−(h−s)/τ}ds and the linear-ramp split.
    let full = tau * (1.0 - decay);
    let w1 = tau * (1.0 - (1.0 - decay) / r);
    let w0 = full - w1;

    let (mut s1, mut s2) = (0.0, 0.0);
    let mut prev = coeffs.c0;
    let mut out = Vec::with_capacity(u.len());
    for (n, &un) in u.iter().enumerate() {
        let p = un * un;
        s1 = decay * s1 + full * p;
        let partial = decay * s2 + w0 * p * prev;
        let denom = 1.0 - coeffs.c2 * w1 * p;
        let next = (coeffs.c0 + coeffs.c1 * s1 + coeffs.c2 * partial) / denom;
        if !next.is_finite() || denom <= 0.0 || next.abs() > 1e12 {
            return Err(Error::Divergence {
                time: (n + 1) as f64 * dt,
            });
        }
        s2 = partial + w1 * p * next;
        prev = next;
        out.push(next);
    }
    Ok(out)
}
