//! Coupled-mode integration of the ring: complex energy amplitude U (√J),
//! excess carrier density ΔN and temperature excess ΔT.
//!
//! ```text
//! dU/dt  = [i·2π(ν_res − ν_L) − κ_tot/2 − (a_TPA|U|² + a_FCA·ΔN)/2]·U − √(2γ_e)·(E_in + E_add)
//! dΔN/dt = −ΔN/τ_fc + g_TPA·|U|⁴
//! dΔT/dt = −ΔT/τ_th + g_TH·(f_abs/τ_i + a_TPA|U|² + a_FCA·ΔN)·|U|²
//! ν_res  = ν_cold·(1 − Δn/n0),  Δn = dn/dT·ΔT − dn/dN·ΔN
//! ```
//!
//! Ports follow the scattering relations
//! `E_th = t_r·E_in + √(2γ_e)·U`, `E_drop = √(2γ_e)·U + t_r·E_add` and, with
//! the external loop closed, `E_add(t) = √η_F·e^{−iφ_F}·E_th(t − τ_F)`.

use std::collections::VecDeque;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::params::MrrParams;
use crate::error::{Error, Result};
use crate::signal::SampledSignal;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MrrState {
    /// Energy amplitude, `|U|²` is the stored energy in J.
    pub u: Complex64,
    pub delta_n: f64,
    pub delta_t: f64,
}

impl MrrState {
    pub fn energy(&self) -> f64 {
        self.u.norm_sqr()
    }

    fn is_finite(&self) -> bool {
        self.u.re.is_finite()
            && self.u.im.is_finite()
            && self.delta_n.is_finite()
            && self.delta_t.is_finite()
    }
}

/// External Through→Add loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackParams {
    pub eta: f64,
    pub phase: f64,
    pub delay: f64,
    /// Field transmission Input→Through and Add→Drop; `None` means
    /// `√(1 − κ²)`.
    pub t_r: Option<f64>,
}

impl FeedbackParams {
    pub fn new(eta: f64, phase: f64, delay: f64) -> Result<Self> {
        let fb = Self {
            eta,
            phase,
            delay,
            t_r: None,
        };
        fb.validate()?;
        Ok(fb)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::invalid(format!(
                "eta_F must lie in [0, 1], got {}",
                self.eta
            )));
        }
        if !(self.delay >= 0.0 && self.delay.is_finite()) {
            return Err(Error::invalid("feedback delay must be non-negative"));
        }
        if !self.phase.is_finite() {
            return Err(Error::invalid("feedback phase must be finite"));
        }
        Ok(())
    }

    pub fn transmission(&self, params: &MrrParams) -> f64 {
        self.t_r
            .unwrap_or_else(|| (1.0 - params.coupling_k2).sqrt())
    }
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Classical fixed-step RK4; needs dt well below τ_ph.
    #[default]
    Rk4,
    /// Exponential integrator: the field equation is solved exactly with
    /// coefficients frozen at a midpoint predictor, carriers and temperature
    /// use exponential midpoint updates. Stable for dt above τ_ph, accurate
    /// while dt stays small against τ_fc and the input's variation.
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub scheme: Scheme,
    /// Solver step. Rounded so that each input sample holds an integer
    /// number of steps.
    pub dt: f64,
    /// Keep the state at each input sample.
    pub record_states: bool,
}

impl IntegrateOptions {
    pub fn rk4(dt: f64) -> Self {
        Self {
            scheme: Scheme::Rk4,
            dt,
            record_states: true,
        }
    }

    pub fn exponential(dt: f64) -> Self {
        Self {
            scheme: Scheme::Exponential,
            dt,
            record_states: true,
        }
    }
}

/// Output of a ring simulation, sampled at the input's sample times. Each
/// output sample is the left limit at the end of its input interval.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub through: SampledSignal,
    pub drop: SampledSignal,
    /// Empty unless `record_states` was set.
    pub states: Vec<MrrState>,
    pub final_state: MrrState,
    /// Solver step actually used.
    pub dt: f64,
    /// Feedback delay after snapping to the solver grid.
    pub feedback_delay: Option<f64>,
}

impl Trajectory {
    pub fn drop_power(&self) -> Vec<f64> {
        self.drop.powers()
    }

    pub fn through_power(&self) -> Vec<f64> {
        self.through.powers()
    }
}

/// Precomputed constants of the right-hand side.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Rhs {
    mu: f64,
    half_decay: f64,
    /// 2π(ν_cold − ν_L)
    cold_offset: f64,
    /// −2π·ν_cold/n0 multiplying Δn
    shift_per_index: f64,
    dn_dt: f64,
    dn_dn: f64,
    tpa_loss: f64,
    fca_loss: f64,
    tpa_gen: f64,
    heat: f64,
    lin_abs: f64,
    inv_tau_fc: f64,
    inv_tau_th: f64,
    tau_fc: f64,
    tau_th: f64,
}

impl Rhs {
    pub(crate) fn new(params: &MrrParams, detuning: f64) -> Self {
        Self {
            mu: params.coupling_rate().sqrt(),
            half_decay: 0.5 * params.loaded_decay_rate(),
            cold_offset: -2.0 * PI * detuning,
            shift_per_index: -2.0 * PI * params.cold_frequency() / params.n0,
            dn_dt: params.dn_dt,
            dn_dn: params.dn_dn,
            tpa_loss: params.tpa_loss_coeff,
            fca_loss: params.fca_loss_coeff,
            tpa_gen: params.tpa_gen_coeff,
            heat: params.thermal_heating_coeff,
            lin_abs: params.absorbed_fraction * params.intrinsic_decay_rate(),
            inv_tau_fc: 1.0 / params.tau_fc,
            inv_tau_th: 1.0 / params.tau_th,
            tau_fc: params.tau_fc,
            tau_th: params.tau_th,
        }
    }

    #[inline]
    fn field_coeff(&self, energy: f64, dn: f64, dtemp: f64) -> Complex64 {
        let index = self.dn_dt * dtemp - self.dn_dn * dn;
        Complex64::new(
            -(self.half_decay + 0.5 * (self.tpa_loss * energy + self.fca_loss * dn)),
            self.cold_offset + self.shift_per_index * index,
        )
    }

    #[inline]
    fn absorbed(&self, energy: f64, dn: f64) -> f64 {
        (self.lin_abs + self.tpa_loss * energy + self.fca_loss * dn) * energy
    }

    #[inline]
    fn deriv(&self, s: &MrrState, drive: Complex64) -> MrrState {
        let w = s.u.norm_sqr();
        MrrState {
            u: self.field_coeff(w, s.delta_n, s.delta_t) * s.u - self.mu * drive,
            delta_n: -s.delta_n * self.inv_tau_fc + self.tpa_gen * w * w,
            delta_t: -s.delta_t * self.inv_tau_th + self.heat * self.absorbed(w, s.delta_n),
        }
    }

    #[inline]
    fn rk4(&self, s: &MrrState, drive: Complex64, h: f64) -> MrrState {
        let axpy = |a: &MrrState, k: &MrrState, c: f64| MrrState {
            u: a.u + k.u * c,
            delta_n: a.delta_n + k.delta_n * c,
            delta_t: a.delta_t + k.delta_t * c,
        };
        let k1 = self.deriv(s, drive);
        let k2 = self.deriv(&axpy(s, &k1, 0.5 * h), drive);
        let k3 = self.deriv(&axpy(s, &k2, 0.5 * h), drive);
        let k4 = self.deriv(&axpy(s, &k3, h), drive);
        MrrState {
            u: s.u + (k1.u + (k2.u + k3.u) * 2.0 + k4.u) * (h / 6.0),
            delta_n: s.delta_n
                + (k1.delta_n + 2.0 * (k2.delta_n + k3.delta_n) + k4.delta_n) * (h / 6.0),
            delta_t: s.delta_t
                + (k1.delta_t + 2.0 * (k2.delta_t + k3.delta_t) + k4.delta_t) * (h / 6.0),
        }
    }

    /// Exact solution of `dU/dt = a·U + b` over `h` for constant `a`, `b`.
    #[inline]
    fn linear_flow(u: Complex64, a: Complex64, b: Complex64, h: f64) -> Complex64 {
        let z = a * h;
        let e = z.exp();
        // (e^{z} − 1)/a, with a series for tiny |z|.
        let phi = if z.norm() < 1e-6 {
            Complex64::new(h, 0.0) * (Complex64::new(1.0, 0.0) + z * 0.5)
        } else {
            (e - 1.0) / a
        };
        u * e + b * phi
    }

    /// `x' = −x/τ + src` over `h` with constant source.
    #[inline]
    fn relax(x: f64, src: f64, tau: f64, h: f64) -> f64 {
        let e = (-h / tau).exp();
        x * e + src * tau * (1.0 - e)
    }

    #[inline]
    fn exponential(&self, s: &MrrState, drive: Complex64, h: f64) -> MrrState {
        let b = -self.mu * drive;
        // Predictor to the midpoint.
        let w0 = s.u.norm_sqr();
        let a0 = self.field_coeff(w0, s.delta_n, s.delta_t);
        let u_half = Self::linear_flow(s.u, a0, b, 0.5 * h);
        let wh_pred = u_half.norm_sqr();
        let dn_half = Self::relax(s.delta_n, self.tpa_gen * w0 * w0, self.tau_fc, 0.5 * h);
        let dt_half = Self::relax(
            s.delta_t,
            self.heat * self.absorbed(w0, s.delta_n),
            self.tau_th,
            0.5 * h,
        );
        // Corrector with midpoint coefficients.
        let ah = self.field_coeff(wh_pred, dn_half, dt_half);
        let u = Self::linear_flow(s.u, ah, b, h);
        let wm = 0.5 * (wh_pred + 0.5 * (w0 + u.norm_sqr()));
        MrrState {
            u,
            delta_n: Self::relax(s.delta_n, self.tpa_gen * wm * wm, self.tau_fc, h),
            delta_t: Self::relax(
                s.delta_t,
                self.heat * self.absorbed(wm, dn_half),
                self.tau_th,
                h,
            ),
        }
    }

    #[inline]
    fn step(&self, scheme: Scheme, s: &MrrState, drive: Complex64, h: f64) -> MrrState {
        match scheme {
            Scheme::Rk4 => self.rk4(s, drive, h),
            Scheme::Exponential => self.exponential(s, drive, h),
        }
    }
}

/// Closed feedback loop resolved on the solver grid.
struct Loop {
    gain: Complex64,
    t_r: f64,
    delay_steps: usize,
    history: VecDeque<Complex64>,
}

fn substeps(e_in: &SampledSignal, dt: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid(format!(
            "solver step must be positive, got {dt}"
        )));
    }
    let ratio = e_in.dt() / dt;
    let n = ratio.round().max(1.0) as usize;
    Ok((n, e_in.dt() / n as f64))
}

fn run(
    params: &MrrParams,
    detuning: f64,
    state0: MrrState,
    e_in: &SampledSignal,
    opts: &IntegrateOptions,
    feedback: Option<&FeedbackParams>,
) -> Result<Trajectory> {
    params.validate()?;
    if !state0.is_finite() || state0.delta_n < 0.0 {
        return Err(Error::invalid(
            "initial state must be finite with delta_n >= 0",
        ));
    }
    let (nsub, h) = substeps(e_in, opts.dt)?;
    let rhs = Rhs::new(params, detuning);
    let mu = rhs.mu;

    let mut fb_loop = match feedback {
        Some(fb) => {
            fb.validate()?;
            let delay_steps = (fb.delay / h).round() as usize;
            Some(Loop {
                gain: Complex64::from_polar(fb.eta.sqrt(), -fb.phase),
                t_r: fb.transmission(params),
                delay_steps,
                history: VecDeque::from(vec![Complex64::new(0.0, 0.0); delay_steps]),
            })
        }
        None => None,
    };
    let t_r_direct = fb_loop.as_ref().map_or(1.0, |l| l.t_r);

    let n = e_in.len();
    let mut through = Vec::with_capacity(n);
    let mut drop = Vec::with_capacity(n);
    let mut states = if opts.record_states {
        Vec::with_capacity(n)
    } else {
        Vec::new()
    };
    let mut s = state0;
    let zero = Complex64::new(0.0, 0.0);

    for (k, &ein) in e_in.samples().iter().enumerate() {
        let mut e_add = zero;
        for _ in 0..nsub {
            if let Some(l) = fb_loop.as_mut() {
                let e_th = l.t_r * ein + mu * s.u;
                if l.delay_steps == 0 {
                    e_add = l.gain * e_th;
                } else {
                    let delayed = l.history.pop_front().unwrap_or(zero);
                    l.history.push_back(e_th);
                    e_add = l.gain * delayed;
                }
            }
            s = rhs.step(opts.scheme, &s, ein + e_add, h);
        }
        if !s.is_finite() {
            return Err(Error::Divergence {
                time: e_in.time(k) + e_in.dt(),
            });
        }
        let t_r_add = fb_loop.as_ref().map_or(0.0, |l| l.t_r);
        through.push(t_r_direct * ein + mu * s.u);
        drop.push(mu * s.u + t_r_add * e_add);
        if opts.record_states {
            states.push(s);
        }
    }
    let rate = e_in.sample_rate();
    let t0 = e_in.t_start() + e_in.dt();
    Ok(Trajectory {
        through: SampledSignal::new(through, rate, t0)?,
        drop: SampledSignal::new(drop, rate, t0)?,
        states,
        final_state: s,
        dt: h,
        feedback_delay: fb_loop.map(|l| l.delay_steps as f64 * h),
    })
}

/// Integrate the ring driven by `e_in` at laser detuning `detuning`
/// (`ν_laser − ν_cold`, Hz). Each input sample is held for its interval and
/// split into solver steps of about `opts.dt`.
pub fn integrate(
    params: &MrrParams,
    detuning: f64,
    state0: MrrState,
    e_in: &SampledSignal,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    run(params, detuning, state0, e_in, opts, None)
}

/// Integrate the ring with its Through port looped back into the Add port.
pub fn simulate_with_feedback(
    params: &MrrParams,
    fb: &FeedbackParams,
    detuning: f64,
    state0: MrrState,
    e_in: &SampledSignal,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    run(params, detuning, state0, e_in, opts, Some(fb))
}

/// Steady-state Lorentzian transmissions `(T_through, T_drop)` of the cold
/// ring at detuning `ν_laser − ν_cold`.
pub fn linear_transmission(params: &MrrParams, detuning: f64) -> (f64, f64) {
    let mu2 = params.coupling_rate();
    let a = Complex64::new(-0.5 * params.loaded_decay_rate(), -2.0 * PI * detuning);
    // U = μE/a, so E_th/E = 1 + μ²/a and E_drop/E = μ²/a.
    let drop = mu2 / a;
    let through = Complex64::new(1.0, 0.0) + drop;
    (through.norm_sqr(), drop.norm_sqr())
}
