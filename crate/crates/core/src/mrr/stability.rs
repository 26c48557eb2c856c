//! CW stability classification and self-pulsing frequency maps.

use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::dynamics::{integrate, IntegrateOptions, MrrState, Scheme};
use super::params::MrrParams;
use crate::error::{Error, Result};
use crate::signal::SampledSignal;

/// Peak-to-peak drop power below this fraction of its mean counts as stable.
pub const STABILITY_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum Stability {
    Stable,
    SelfPulsing { frequency: f64 },
}

impl Stability {
    pub fn is_self_pulsing(&self) -> bool {
        matches!(self, Stability::SelfPulsing { .. })
    }

    pub fn frequency(&self) -> f64 {
        match *self {
            Stability::Stable => 0.0,
            Stability::SelfPulsing { frequency } => frequency,
        }
    }
}

/// How a CW operating point is simulated and judged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityOptions {
    pub settle_time: f64,
    pub observe_time: f64,
    /// Interval between recorded drop samples.
    pub sample_interval: f64,
    pub scheme: Scheme,
    pub dt: f64,
}

impl StabilityOptions {
    /// Settle for 20·τ_th and observe for 40·(τ_fc + τ_th), sampling every
    /// 0.5 ns with the exponential scheme at dt = τ_ph.
    pub fn for_params(params: &MrrParams) -> Self {
        Self {
            settle_time: 20.0 * params.tau_th,
            observe_time: 40.0 * (params.tau_fc + params.tau_th),
            sample_interval: 0.5e-9,
            scheme: Scheme::Exponential,
            dt: params.photon_lifetime(),
        }
    }
}

/// Post-transient drop power of the ring under CW drive.
pub fn cw_drop_trace(
    params: &MrrParams,
    power: f64,
    detuning: f64,
    opts: &StabilityOptions,
) -> Result<Vec<f64>> {
    if !(opts.sample_interval > 0.0) || !(opts.observe_time > 0.0) || opts.settle_time < 0.0 {
        return Err(Error::invalid("stability timing must be positive"));
    }
    let rate = 1.0 / opts.sample_interval;
    let n_settle = (opts.settle_time * rate).round() as usize;
    let n_obs = ((opts.observe_time * rate).round() as usize).max(2);
    let input = SampledSignal::cw(power, n_settle + n_obs, rate)?;
    let traj = integrate(
        params,
        detuning,
        MrrState::default(),
        &input,
        &IntegrateOptions {
            scheme: opts.scheme,
            dt: opts.dt,
            record_states: false,
        },
    )?;
    let mut p = traj.drop_power();
    Ok(p.split_off(n_settle))
}

/// Trailing part of `trace` over which the oscillation amplitude has
/// stopped growing: the longest run of final eighths whose peak-to-peak
/// stays above half that of the last eighth, and at least the last quarter.
///
/// Close to the instability boundary the pulsing builds up slowly, and the
/// envelope of that build-up would otherwise dominate the spectrum.
pub fn settled_tail(trace: &[f64]) -> &[f64] {
    let n = trace.len();
    let w = n / 8;
    if w < 2 {
        return trace;
    }
    let p2p = |k: usize| {
        let end = if k == 7 { n } else { (k + 1) * w };
        let s = &trace[k * w..end];
        s.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - s.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let last = p2p(7);
    let mut start = 6;
    while start > 0 && p2p(start - 1) >= 0.5 * last {
        start -= 1;
    }
    &trace[start * w..]
}

/// Stable if the observed drop power's peak-to-peak stays under
/// [`STABILITY_TOLERANCE`] of its mean, otherwise self-pulsing at the
/// fundamental [`sp_frequency`] finds in the [`settled_tail`].
pub fn classify_trace(trace: &[f64], sample_rate: f64) -> Stability {
    let mean = trace.iter().sum::<f64>() / trace.len() as f64;
    let (lo, hi) = trace
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if !(mean > 0.0) || hi - lo < STABILITY_TOLERANCE * mean {
        return Stability::Stable;
    }
    let frequency = sp_frequency(settled_tail(trace), sample_rate);
    if frequency > 0.0 {
        Stability::SelfPulsing { frequency }
    } else {
        Stability::Stable
    }
}

pub fn classify_stability(
    params: &MrrParams,
    power: f64,
    detuning: f64,
    opts: &StabilityOptions,
) -> Result<Stability> {
    let trace = cw_drop_trace(params, power, detuning, opts)?;
    Ok(classify_trace(&trace, 1.0 / opts.sample_interval))
}

/// Fundamental frequency of a post-transient trace.
///
/// The mean is removed and a Hann window applied; the strongest bin is
/// refined by parabolic interpolation on log magnitude. If a sub-harmonic
/// `f/k` (k ≤ 6) carries at least a quarter of the peak magnitude, the
/// lowest such one is taken as the fundamental. Returns 0 when there is no
/// spectral content above the noise floor.
pub fn sp_frequency(trace: &[f64], sample_rate: f64) -> f64 {
    let n = trace.len();
    if n < 4 {
        return 0.0;
    }
    let mean = trace.iter().sum::<f64>() / n as f64;
    let scale = trace.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let var = trace.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if !(var.sqrt() > 1e-9 * scale.max(f64::MIN_POSITIVE)) {
        return 0.0;
    }
    let mut buf: Vec<Complex64> = trace
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos();
            Complex64::new((v - mean) * w, 0.0)
        })
        .collect();
    let fft: Arc<dyn rustfft::Fft<f64>> = FftPlanner::new().plan_fft_forward(n);
    fft.process(&mut buf);
    let mag: Vec<f64> = buf[..n / 2 + 1].iter().map(|z| z.norm()).collect();
    // Skip the bins the window leaks DC into.
    let first = 2.min(mag.len() - 1);
    let (k_peak, &peak) = mag[first..]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, v)| (i + first, v))
        .unwrap();
    if !(peak > 0.0) {
        return 0.0;
    }
    let mut k_fund = k_peak;
    for div in (2..=6).rev() {
        let target = k_peak as f64 / div as f64;
        if target < first as f64 {
            continue;
        }
        let lo = (target - 2.0).floor().max(first as f64) as usize;
        let hi = ((target + 2.0).ceil() as usize).min(mag.len() - 1);
        if let Some((k, &m)) = mag[lo..=hi]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
        {
            if m >= 0.25 * peak {
                k_fund = lo + k;
                break;
            }
        }
    }
    let refined = if k_fund > 0 && k_fund + 1 < mag.len() {
        let (a, b, c) = (
            mag[k_fund - 1].max(1e-300).ln(),
            mag[k_fund].max(1e-300).ln(),
            mag[k_fund + 1].max(1e-300).ln(),
        );
        let denom = a - 2.0 * b + c;
        let offset = if denom.abs() > 0.0 {
            0.5 * (a - c) / denom
        } else {
            0.0
        };
        k_fund as f64 + offset.clamp(-0.5, 0.5)
    } else {
        k_fund as f64
    };
    refined * sample_rate / n as f64
}

/// Resonance wavelength shift `λ0(t) − λ_cold` along recorded states.
pub fn resonance_shift(params: &MrrParams, states: &[MrrState]) -> Vec<f64> {
    states
        .iter()
        .map(|s| {
            params.resonance_wavelength(s.delta_n, s.delta_t) - params.cold_resonance_wavelength
        })
        .collect()
}

/// Number of downward excursions of `shift` more than `depth` below its
/// centred moving average over `window` samples. A contiguous excursion
/// counts once.
pub fn count_spikes(shift: &[f64], window: usize, depth: f64) -> usize {
    let n = shift.len();
    let half = window.max(1) / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in shift {
        prefix.push(prefix.last().unwrap() + v);
    }
    let mut count = 0;
    let mut inside = false;
    for (i, v) in shift.iter().enumerate() {
        let (lo, hi) = (i.saturating_sub(half), (i + half + 1).min(n));
        let avg = (prefix[hi] - prefix[lo]) / (hi - lo) as f64;
        let below = avg - v > depth;
        if below && !inside {
            count += 1;
        }
        inside = below;
    }
    count
}

/// Classification over a (power, detuning) grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityMap {
    pub powers: Vec<f64>,
    pub detunings: Vec<f64>,
    /// Row-major: index `ip * detunings.len() + id`.
    pub cells: Vec<Stability>,
}

fn strictly_increasing(xs: &[f64]) -> bool {
    !xs.is_empty() && xs.windows(2).all(|w| w[0] < w[1])
}

impl StabilityMap {
    pub fn compute(
        params: &MrrParams,
        powers: &[f64],
        detunings: &[f64],
        opts: &StabilityOptions,
    ) -> Result<Self> {
        if !strictly_increasing(powers) || !strictly_increasing(detunings) {
            return Err(Error::invalid(
                "grid axes must be non-empty and strictly increasing",
            ));
        }
        let jobs: Vec<(f64, f64)> = powers
            .iter()
            .flat_map(|&p| detunings.iter().map(move |&d| (p, d)))
            .collect();
        let cells = jobs
            .par_iter()
            .map(|&(p, d)| classify_stability(params, p, d, opts))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            powers: powers.to_vec(),
            detunings: detunings.to_vec(),
            cells,
        })
    }

    pub fn get(&self, ip: usize, id: usize) -> Stability {
        self.cells[ip * self.detunings.len() + id]
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "P,delta_nu,class,sp_freq_hz")?;
        for (ip, &p) in self.powers.iter().enumerate() {
            for (id, &d) in self.detunings.iter().enumerate() {
                let cell = self.get(ip, id);
                let class = if cell.is_self_pulsing() {
                    "self_pulsing"
                } else {
                    "stable"
                };
                writeln!(out, "{p:e},{d:e},{class},{:e}", cell.frequency())?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut rows = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            if n == 0 || line.trim().is_empty() {
                continue;
            }
            let err = || Error::Parse {
                line: n + 1,
                message: format!("expected `P,delta_nu,class,sp_freq_hz`, got `{line}`"),
            };
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 4 {
                return Err(err());
            }
            let p: f64 = cols[0].parse().map_err(|_| err())?;
            let d: f64 = cols[1].parse().map_err(|_| err())?;
            let f: f64 = cols[3].parse().map_err(|_| err())?;
            let cell = match cols[2] {
                "stable" => Stability::Stable,
                "self_pulsing" => Stability::SelfPulsing { frequency: f },
                _ => return Err(err()),
            };
            rows.push((p, d, cell));
        }
        let mut powers: Vec<f64> = Vec::new();
        let mut detunings: Vec<f64> = Vec::new();
        for &(p, d, _) in &rows {
            if !powers.contains(&p) {
                powers.push(p);
            }
            if !detunings.contains(&d) {
                detunings.push(d);
            }
        }
        if powers.len() * detunings.len() != rows.len() {
            return Err(Error::invalid("stability map CSV is not a full grid"));
        }
        Ok(Self {
            powers,
            detunings,
            cells: rows.into_iter().map(|r| r.2).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mrr::Preset;
    use approx::assert_relative_eq;

    #[test]
    fn sinusoid_frequency_within_one_bin() {
        let fs = 2e9;
        let n = 8000;
        let f0 = 500e3;
        let trace: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.3 * (2.0 * std::f64::consts::PI * f0 * i as f64 / fs).sin())
            .collect();
        let f = sp_frequency(&trace, fs);
        assert!((f - f0).abs() <= fs / n as f64, "{f}");
    }

    #[test]
    fn growing_onset_reports_the_oscillation_not_the_envelope() {
        let fs = 2e9;
        let n = 25_000;
        let f0 = 900e3;
        let trace: Vec<f64> = (0..n)
            .map(|i| {
                let amp = if i < 5 * n / 8 { 0.002 } else { 1.0 };
                2.0 + amp * (2.0 * std::f64::consts::PI * f0 * i as f64 / fs).sin()
            })
            .collect();
        assert_eq!(settled_tail(&trace).len(), n - 5 * (n / 8));
        let f = classify_trace(&trace, fs).frequency();
        assert_relative_eq!(f, f0, max_relative = 0.05);
    }

    #[test]
    fn constant_trace_has_no_frequency() {
        assert_eq!(sp_frequency(&[2.0; 100], 1e9), 0.0);
        assert_eq!(classify_trace(&[2.0; 100], 1e9), Stability::Stable);
        assert_eq!(classify_trace(&[0.0; 100], 1e9), Stability::Stable);
    }

    #[test]
    fn pulse_train_reports_fundamental() {
        // Narrow pulses: harmonics rival the fundamental.
        let fs = 1e9;
        let period = 1700.0;
        let trace: Vec<f64> = (0..20000)
            .map(|i| {
                let phase = (i as f64 % period) / period;
                0.1 + (-(phase - 0.5).powi(2) / 0.0005).exp()
            })
            .collect();
        let f = sp_frequency(&trace, fs);
        assert_relative_eq!(f, fs / period, max_relative = 0.02);
    }

    #[test]
    fn spikes_counted_once_per_excursion() {
        let mut x = vec![0.0; 200];
        for i in [50, 51, 52, 120] {
            x[i] = -1.0;
        }
        assert_eq!(count_spikes(&x, 21, 0.5), 2);
        assert_eq!(count_spikes(&x, 21, 2.0), 0);
        let ramp: Vec<f64> = (0..200).map(|i| i as f64 * 0.01).collect();
        assert_eq!(count_spikes(&ramp, 21, 0.05), 0);
    }

    #[test]
    fn low_power_is_stable() {
        let p = Preset::SelfPulsing.params();
        let opts = StabilityOptions {
            settle_time: 200e-9,
            observe_time: 400e-9,
            ..StabilityOptions::for_params(&p)
        };
        for frac in [-3.0, -1.0, 0.0, 1.0] {
            let s = classify_stability(&p, 1e-6, frac * p.linewidth(), &opts).unwrap();
            assert_eq!(s, Stability::Stable);
        }
    }

    #[test]
    fn linear_ring_is_stable_at_high_power() {
        let p = Preset::Linear.params();
        let opts = StabilityOptions {
            settle_time: 50e-9,
            observe_time: 100e-9,
            ..StabilityOptions::for_params(&p)
        };
        for frac in [-2.0, 0.0, 2.0] {
            let s = classify_stability(&p, 20e-3, frac * p.linewidth(), &opts).unwrap();
            assert_eq!(s, Stability::Stable);
        }
    }

    #[test]
    fn map_csv_roundtrip() {
        let map = StabilityMap {
            powers: vec![1e-3, 2e-3],
            detunings: vec![-1e9, 0.0, 1e9],
            cells: vec![
                Stability::Stable,
                Stability::SelfPulsing { frequency: 5e5 },
                Stability::Stable,
                Stability::Stable,
                Stability::Stable,
                Stability::SelfPulsing { frequency: 7.5e5 },
            ],
        };
        let mut buf = Vec::new();
        map.write_csv(&mut buf).unwrap();
        assert_eq!(StabilityMap::read_csv(&buf[..]).unwrap(), map);
        assert!(StabilityMap::compute(
            &Preset::Linear.params(),
            &[2.0, 1.0],
            &[0.0],
            &StabilityOptions::for_params(&Preset::Linear.params())
        )
        .is_err());
    }
}
