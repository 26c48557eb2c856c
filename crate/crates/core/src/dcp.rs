//! Delayed complex perceptron: split the field into `K` arms delayed by
//! multiples of `Δt`, phase-shift each, recombine and detect. Includes a
//! dispersion-only fiber channel and particle-swarm training.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mrr::SPEED_OF_LIGHT;
use crate::signal::{
    ber_slices, lowpass, nrz_modulate, optimal_threshold, prbs, threshold_decide, SampledSignal,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcpParams {
    /// Delay step between consecutive arms (s); arm `k` is delayed `k·Δt`.
    pub base_delay: f64,
    /// One phase per arm; the arm count is `phases.len()`.
    pub phases: Vec<f64>,
}

impl DcpParams {
    pub fn new(base_delay: f64, phases: Vec<f64>) -> Result<Self> {
        if phases.is_empty() {
            return Err(Error::invalid("DCP needs at least one arm"));
        }
        if !(base_delay >= 0.0) || phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("DCP delay must be >= 0 and phases finite"));
        }
        Ok(Self { base_delay, phases })
    }

    /// Four arms, 50 ps apart, zero phases.
    pub fn default_four() -> Self {
        Self {
            base_delay: 50e-12,
            phases: vec![0.0; 4],
        }
    }

    pub fn n_channels(&self) -> usize {
        self.phases.len()
    }

    /// Arm delay step in samples; must be a whole number.
    pub fn delay_samples(&self, sample_rate: f64) -> Result<usize> {
        let d = self.base_delay * sample_rate;
        let n = d.round();
        if (d - n).abs() > 1e-6 * d.max(1.0) {
            return Err(Error::invalid(format!(
                "delay {:e} s is {d} samples at {sample_rate:e} Sa/s, not a whole number",
                self.base_delay
            )));
        }
        Ok(n as usize)
    }
}

/// `y(t) = |Σ_k u(t − kΔt)·e^{iφ_k} / K|²` (a `1/√K` amplitude at both the
/// splitter and the combiner) on the window where every arm has data:
/// element `i` belongs to input sample `i + (K − 1)·d`.
pub fn dcp_apply(signal: &SampledSignal, params: &DcpParams) -> Result<Vec<f64>> {
    let d = params.delay_samples(signal.sample_rate())?;
    let span = (params.n_channels() - 1) * d;
    let u = signal.samples();
    if u.len() <= span {
        return Err(Error::invalid(format!(
            "signal of {} samples is shorter than the {span}-sample delay span",
            u.len()
        )));
    }
    let norm = 1.0 / params.n_channels() as f64;
    let taps: Vec<Complex64> = params
        .phases
        .iter()
        .map(|&p| Complex64::from_polar(norm, p))
        .collect();
    Ok((span..u.len())
        .map(|n| {
            taps.iter()
                .enumerate()
                .map(|(k, t)| u[n - k * d] * t)
                .sum::<Complex64>()
                .norm_sqr()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberChannel {
    pub length: f64,
    /// Dispersion parameter D in s/m² (17 ps/nm/km = 1.7e-5 s/m²).
    pub dispersion: f64,
    pub center_wavelength: f64,
}

impl FiberChannel {
    /// Standard single-mode fiber, 17 ps/(nm·km) at 1550 nm.
    pub fn smf(length: f64) -> Self {
        Self {
            length,
            dispersion: 17e-6,
            center_wavelength: 1.55e-6,
        }
    }

    /// Group-velocity dispersion `β₂ = −Dλ²/(2πc)` in s²/m.
    pub fn beta2(&self) -> f64 {
        -self.dispersion * self.center_wavelength.powi(2) / (2.0 * PI * SPEED_OF_LIGHT)
    }
}

/// All-pass `H(ω) = exp(iβ₂ω²L/2)` applied over one period of the signal.
pub fn dispersion_channel(signal: &SampledSignal, ch: &FiberChannel) -> Result<SampledSignal> {
    if ch.length < 0.0 {
        return Err(Error::invalid("fiber length must be >= 0"));
    }
    let phase_coeff = 0.5 * ch.beta2() * ch.length;
    if phase_coeff == 0.0 {
        return Ok(signal.clone());
    }
    let n = signal.len();
    let mut buf = signal.samples().to_vec();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let df = signal.sample_rate() / n as f64;
    for (k, z) in buf.iter_mut().enumerate() {
        let f = if k <= n / 2 {
            k as f64
        } else {
            k as f64 - n as f64
        } * df;
        let w = 2.0 * PI * f;
        *z *= Complex64::from_polar(1.0 / n as f64, phase_coeff * w * w);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    SampledSignal::new(buf, signal.sample_rate(), signal.t_start())
}

/// `−(min₁ − max₀)/|mean₁ − mean₀|`: negative when the classes are
/// separated, lower is better.
pub fn separation_loss(detected: &[f64], target: &[u8]) -> Result<f64> {
    if detected.len() != target.len() {
        return Err(Error::invalid("detected and target lengths differ"));
    }
    let (mut min1, mut max0) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut s0, mut s1, mut n0, mut n1) = (0.0, 0.0, 0usize, 0usize);
    for (&v, &t) in detected.iter().zip(target) {
        if t == 1 {
            min1 = min1.min(v);
            s1 += v;
            n1 += 1;
        } else {
            max0 = max0.max(v);
            s0 += v;
            n0 += 1;
        }
    }
    if n0 == 0 || n1 == 0 {
        return Err(Error::invalid(
            "separation loss needs samples of both classes",
        ));
    }
    let gap = (s1 / n1 as f64 - s0 / n0 as f64)
        .abs()
        .max(f64::MIN_POSITIVE);
    Ok(-(min1 - max0) / gap)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// `(lower, upper)` per dimension.
    pub bounds: Vec<(f64, f64)>,
    pub max_iterations: usize,
    pub seed: u64,
}

impl PsoConfig {
    /// Constriction-style coefficients (0.729, 1.49445, 1.49445).
    pub fn new(bounds: Vec<(f64, f64)>, seed: u64) -> Self {
        Self {
            swarm_size: 24,
            inertia: 0.729,
            cognitive: 1.49445,
            social: 1.49445,
            bounds,
            max_iterations: 100,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.swarm_size == 0 || self.bounds.is_empty() {
            return Err(Error::invalid(
                "PSO needs a non-empty swarm and at least one dimension",
            ));
        }
        if let Some(i) = self.bounds.iter().position(|(lo, hi)| !(lo < hi)) {
            return Err(Error::invalid(format!(
                "bounds of dimension {i} are not increasing"
            )));
        }
        if [self.inertia, self.cognitive, self.social]
            .iter()
            .any(|c| !(*c >= 0.0))
        {
            return Err(Error::invalid("PSO coefficients must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoResult {
    pub best_position: Vec<f64>,
    pub best_loss: f64,
    /// Global best after initialization and after every iteration.
    pub trace: Vec<f64>,
}

/// Global-best particle swarm minimization. Objective values within one
/// iteration are evaluated in parallel; all random draws come from one
/// seeded stream in a fixed order.
pub fn pso_train<F>(objective: F, cfg: &PsoConfig) -> Result<PsoResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let dim = cfg.bounds.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vmax: Vec<f64> = cfg.bounds.iter().map(|(lo, hi)| hi - lo).collect();
    let mut pos: Vec<Vec<f64>> = (0..cfg.swarm_size)
        .map(|_| {
            cfg.bounds
                .iter()
                .map(|&(lo, hi)| rng.gen_range(lo..hi))
                .collect()
        })
        .collect();
    let mut vel: Vec<Vec<f64>> = (0..cfg.swarm_size)
        .map(|_| vmax.iter().map(|&v| rng.gen_range(-v..v) * 0.1).collect())
        .collect();

    let evaluate = |pos: &[Vec<f64>]| -> Result<Vec<f64>> {
        let vals: Vec<f64> = pos.par_iter().map(|p| objective(p)).collect();
        if let Some(i) = vals.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteObjective {
                position: pos[i].clone(),
                value: vals[i],
            });
        }
        Ok(vals)
    };

    let mut pbest = pos.clone();
    let mut pbest_val = evaluate(&pos)?;
    let mut g = 0;
    for i in 1..cfg.swarm_size {
        if pbest_val[i] < pbest_val[g] {
            g = i;
        }
    }
    let mut gbest = pbest[g].clone();
    let mut gbest_val = pbest_val[g];
    let mut trace = vec![gbest_val];

    for _ in 0..cfg.max_iterations {
        for i in 0..cfg.swarm_size {
            for d in 0..dim {
                let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
                let v = cfg.inertia * vel[i][d]
                    + cfg.cognitive * r1 * (pbest[i][d] - pos[i][d])
                    + cfg.social * r2 * (gbest[d] - pos[i][d]);
                vel[i][d] = v.clamp(-vmax[d], vmax[d]);
                let (lo, hi) = cfg.bounds[d];
                pos[i][d] = (pos[i][d] + vel[i][d]).clamp(lo, hi);
            }
        }
        let vals = evaluate(&pos)?;
        for i in 0..cfg.swarm_size {
            if vals[i] < pbest_val[i] {
                pbest_val[i] = vals[i];
                pbest[i].clone_from(&pos[i]);
                if vals[i] < gbest_val {
                    gbest_val = vals[i];
                    gbest.clone_from(&pos[i]);
                }
            }
        }
        trace.push(gbest_val);
    }
    Ok(PsoResult {
        best_position: gbest,
        best_loss: gbest_val,
        trace,
    })
}

/// Settings of the PRBS-over-fiber equalization experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualizerConfig {
    pub bitrate: f64,
    pub prbs_order: u32,
    pub samples_per_bit: usize,
    pub p_high: f64,
    pub p_low: f64,
    pub fiber: FiberChannel,
    pub base_delay: f64,
    pub n_channels: usize,
    /// Photodiode bandwidth (single pole).
    pub detector_bandwidth: f64,
    pub histogram_bins: usize,
    pub swarm_size: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for EqualizerConfig {
    /// 10 Gb/s PRBS-10 NRZ through 125 km of standard fiber, four arms
    /// 50 ps apart.
    fn default() -> Self {
        Self {
            bitrate: 10e9,
            prbs_order: 10,
            samples_per_bit: 16,
            p_high: 1e-3,
            p_low: 0.0,
            fiber: FiberChannel::smf(125e3),
            base_delay: 50e-12,
            n_channels: 4,
            detector_bandwidth: 20e9,
            histogram_bins: 40,
            swarm_size: 24,
            iterations: 60,
            seed: 1,
        }
    }
}

/// Counts of decision samples per class over shared bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassHistogram {
    pub edges: Vec<f64>,
    pub zeros: Vec<usize>,
    pub ones: Vec<usize>,
}

impl ClassHistogram {
    pub fn new(samples: &[f64], target: &[u8], bins: usize) -> Self {
        let bins = bins.max(1);
        let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let width = if hi > lo {
            (hi - lo) / bins as f64
        } else {
            1.0
        };
        let edges = (0..=bins).map(|k| lo + k as f64 * width).collect();
        let (mut zeros, mut ones) = (vec![0; bins], vec![0; bins]);
        for (&v, &t) in samples.iter().zip(target) {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            if t == 1 {
                ones[b] += 1;
            } else {
                zeros[b] += 1;
            }
        }
        Self { edges, zeros, ones }
    }

    /// No bin holds samples of both classes and every one sits above every
    /// zero.
    pub fn disjoint(&self) -> bool {
        let last_zero = self.zeros.iter().rposition(|&c| c > 0);
        let first_one = self.ones.iter().position(|&c| c > 0);
        match (last_zero, first_one) {
            (Some(z), Some(o)) => z < o,
            _ => true,
        }
    }
}

/// Decision samples and their BER at the best threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub ber: f64,
    pub threshold: f64,
    pub loss: f64,
    pub histogram: ClassHistogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualizerReport {
    pub config: EqualizerConfig,
    pub ber_uncompensated: f64,
    pub ber_compensated: f64,
    pub phases: Vec<f64>,
    pub loss_trace: Vec<f64>,
    pub uncompensated: Decision,
    pub compensated: Decision,
}

impl EqualizerReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Received waveform and reference bits of an equalization run.
#[derive(Debug, Clone)]
pub struct EqualizerLink {
    pub cfg: EqualizerConfig,
    pub bits: Vec<u8>,
    pub received: SampledSignal,
}

impl EqualizerLink {
    pub fn new(cfg: &EqualizerConfig) -> Result<Self> {
        let bits = prbs(cfg.prbs_order, 1)?.with_bitrate(cfg.bitrate)?;
        let tx = nrz_modulate(&bits, cfg.samples_per_bit, cfg.p_high, cfg.p_low)?;
        let received = dispersion_channel(&tx, &cfg.fiber)?;
        Ok(Self {
            cfg: cfg.clone(),
            bits: bits.bits().to_vec(),
            received,
        })
    }

    fn dcp(&self, phases: &[f64]) -> Result<DcpParams> {
        DcpParams::new(self.cfg.base_delay, phases.to_vec())
    }

    /// Detected power over one full period after the DCP, aligned so that
    /// sample `n` sits at transmitted time `n/fs` plus the mean arm delay.
    /// The period wraps, so every bit gets a decision.
    pub fn detected(&self, phases: &[f64]) -> Result<Vec<f64>> {
        let params = self.dcp(phases)?;
        let fs = self.received.sample_rate();
        let d = params.delay_samples(fs)?;
        let span = (params.n_channels() - 1) * d;
        let n = self.received.len();
        // Prepend the tail so the periodic signal covers the delay span.
        let mut ext = self.received.samples()[n - span..].to_vec();
        ext.extend_from_slice(self.received.samples());
        let y = dcp_apply(&SampledSignal::new(ext, fs, 0.0)?, &params)?;
        let mut y = lowpass_periodic(&y, self.cfg.detector_bandwidth, fs);
        // Shift by half the delay span so the decision instant follows the
        // centroid of the arm delays.
        y.rotate_left(span / 2);
        Ok(y)
    }

    /// Detected power at the centre of each bit slot.
    pub fn decision_samples(&self, phases: &[f64]) -> Result<Vec<f64>> {
        let y = self.detected(phases)?;
        let spb = self.cfg.samples_per_bit;
        Ok((0..self.bits.len()).map(|j| y[j * spb + spb / 2]).collect())
    }

    pub fn decide(&self, phases: &[f64]) -> Result<Decision> {
        let s = self.decision_samples(phases)?;
        let (threshold, errors) = optimal_threshold(&s, &self.bits)?;
        let decided = threshold_decide(&s, threshold);
        let ber = ber_slices(&decided, &self.bits)?;
        debug_assert_eq!(errors as f64 / s.len() as f64, ber);
        Ok(Decision {
            ber,
            threshold,
            loss: separation_loss(&s, &self.bits)?,
            histogram: ClassHistogram::new(&s, &self.bits, self.cfg.histogram_bins),
        })
    }

    /// `(bit phase in [0, 1), power)` pairs over the whole period.
    pub fn write_eye_csv<W: Write>(&self, phases: &[f64], mut out: W) -> Result<()> {
        let y = self.detected(phases)?;
        let spb = self.cfg.samples_per_bit;
        writeln!(out, "bit_phase,power")?;
        for (n, v) in y.iter().enumerate() {
            writeln!(out, "{},{v:e}", (n % spb) as f64 / spb as f64)?;
        }
        Ok(())
    }
}

/// Single-pole low-pass run over two periods so the output is the
/// periodic steady state.
fn lowpass_periodic(x: &[f64], bandwidth: f64, fs: f64) -> Vec<f64> {
    let mut twice = x.to_vec();
    twice.extend_from_slice(x);
    let y = lowpass(&twice, bandwidth, fs);
    y[x.len()..].to_vec()
}

/// Train the arm phases by PSO on the separation loss and compare the
/// decisions with the plain detected signal (all phases zero and arms
/// collapsed to one).
pub fn equalize_experiment(cfg: &EqualizerConfig) -> Result<EqualizerReport> {
    if cfg.n_channels == 0 {
        return Err(Error::invalid("n_channels must be >= 1"));
    }
    let link = EqualizerLink::new(cfg)?;
    let uncompensated = link.decide(&[0.0])?;
    // The first arm is the phase reference.
    let objective = |p: &[f64]| {
        let mut phases = vec![0.0];
        phases.extend_from_slice(p);
        link.decision_samples(&phases)
            .and_then(|s| separation_loss(&s, &link.bits))
            .unwrap_or(f64::NAN)
    };
    let (phases, loss_trace) = if cfg.n_channels == 1 {
        (vec![0.0], vec![uncompensated.loss])
    } else {
        let mut pso = PsoConfig::new(vec![(0.0, 2.0 * PI); cfg.n_channels - 1], cfg.seed);
        pso.swarm_size = cfg.swarm_size;
        pso.max_iterations = cfg.iterations;
        let res = pso_train(objective, &pso)?;
        let mut phases = vec![0.0];
        phases.extend(res.best_position);
        (phases, res.trace)
    };
    let compensated = link.decide(&phases)?;
    Ok(EqualizerReport {
        config: cfg.clone(),
        ber_uncompensated: uncompensated.ber,
        ber_compensated: compensated.ber,
        phases,
        loss_trace,
        uncompensated,
        compensated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::{prop_assert, proptest};

    fn cw(len: usize) -> SampledSignal {
        SampledSignal::cw(2e-3, len, 1e12).unwrap()
    }

    #[test]
    fn single_arm_is_square_law() {
        let s = SampledSignal::from_powers(&[1.0, 4.0, 0.5], 1e12, 0.0).unwrap();
        let y = dcp_apply(&s, &DcpParams::new(50e-12, vec![1.3]).unwrap()).unwrap();
        for (a, b) in y.iter().zip(s.powers()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn two_arm_interference() {
        let s = cw(200);
        let y = dcp_apply(&s, &DcpParams::new(50e-12, vec![0.0, PI]).unwrap()).unwrap();
        assert_eq!(y.len(), 150);
        assert!(y.iter().all(|&v| v.abs() < 1e-18));
        let y = dcp_apply(&s, &DcpParams::new(50e-12, vec![0.0, 0.0]).unwrap()).unwrap();
        assert!(y.iter().all(|&v| (v - 2e-3).abs() < 1e-15));
        assert!(dcp_apply(&cw(50), &DcpParams::new(50e-12, vec![0.0, 0.0]).unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn global_phase_invariance(seed in 0u64..500, shift in -10.0f64..10.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples: Vec<Complex64> = (0..300).map(|_| Complex64::new(rng.gen(), rng.gen())).collect();
            let s = SampledSignal::new(samples, 1e12, 0.0).unwrap();
            let phases: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
            let shifted: Vec<f64> = phases.iter().map(|p| p + shift).collect();
            let a = dcp_apply(&s, &DcpParams::new(20e-12, phases).unwrap()).unwrap();
            let b = dcp_apply(&s, &DcpParams::new(20e-12, shifted).unwrap()).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
        }
    }

    fn test_signal() -> SampledSignal {
        let bits = prbs(7, 3).unwrap().with_bitrate(10e9).unwrap();
        nrz_modulate(&bits, 16, 1e-3, 1e-4).unwrap()
    }

    #[test]
    fn zero_length_is_identity() {
        let s = test_signal();
        assert_eq!(dispersion_channel(&s, &FiberChannel::smf(0.0)).unwrap(), s);
    }

    #[test]
    fn single_tone_keeps_magnitude() {
        let n = 256;
        let f = 5.0 * 1e12 / n as f64;
        let samples = (0..n)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * f * k as f64 / 1e12))
            .collect();
        let s = SampledSignal::new(samples, 1e12, 0.0).unwrap();
        let out = dispersion_channel(&s, &FiberChannel::smf(50e3)).unwrap();
        assert!(out.samples().iter().all(|z| (z.norm() - 1.0).abs() < 1e-9));
    }

    #[test]
    fn gaussian_pulse_broadening() {
        let fs = 2e12;
        let n = 1 << 14;
        let t0 = 20e-12;
        let mid = n as f64 / 2.0;
        let samples = (0..n)
            .map(|k| {
                let t = (k as f64 - mid) / fs;
                Complex64::new((-t * t / (2.0 * t0 * t0)).exp(), 0.0)
            })
            .collect();
        let s = SampledSignal::new(samples, fs, 0.0).unwrap();
        let ch = FiberChannel::smf(10e3);
        let out = dispersion_channel(&s, &ch).unwrap();
        // RMS width of |E|² is T/√2 for amplitude exp(−t²/2T²).
        let rms = |sig: &SampledSignal| {
            let p = sig.powers();
            let tot: f64 = p.iter().sum();
            let m: f64 = p.iter().enumerate().map(|(k, v)| k as f64 * v).sum::<f64>() / tot;
            (p.iter()
                .enumerate()
                .map(|(k, v)| (k as f64 - m).powi(2) * v)
                .sum::<f64>()
                / tot)
                .sqrt()
                / fs
        };
        let t1 = t0 * (1.0 + (ch.beta2() * ch.length / (t0 * t0)).powi(2)).sqrt();
        let want = t1 / 2f64.sqrt();
        assert!(
            (rms(&out) - want).abs() < 0.01 * want,
            "{} vs {want}",
            rms(&out)
        );
    }

    #[test]
    fn energy_and_cascade() {
        let s = test_signal();
        let a = dispersion_channel(&s, &FiberChannel::smf(30e3)).unwrap();
        assert!((a.energy() - s.energy()).abs() < 1e-9 * s.energy());
        let ab = dispersion_channel(&a, &FiberChannel::smf(45e3)).unwrap();
        let direct = dispersion_channel(&s, &FiberChannel::smf(75e3)).unwrap();
        let scale = s.samples().iter().fold(0.0f64, |m, z| m.max(z.norm()));
        for (x, y) in ab.samples().iter().zip(direct.samples()) {
            assert!((x - y).norm() < 1e-9 * scale);
        }
    }

    #[test]
    fn separation_loss_examples() {
        let sep = separation_loss(&[0.0, 0.1, 0.9, 1.0], &[0, 0, 1, 1]).unwrap();
        assert!(sep < -0.5);
        let same = separation_loss(&[0.3, 0.5, 0.3, 0.5], &[0, 0, 1, 1]).unwrap();
        assert!(same >= 0.0);
        assert!(separation_loss(&[0.1, 0.2], &[1, 1]).is_err());
    }

    #[test]
    fn pso_sphere() {
        let cfg = PsoConfig {
            max_iterations: 200,
            ..PsoConfig::new(vec![(-5.0, 5.0); 4], 7)
        };
        let res = pso_train(|x| x.iter().map(|v| v * v).sum(), &cfg).unwrap();
        assert!(res.best_loss < 1e-3, "{}", res.best_loss);
        assert!(res.trace.windows(2).all(|w| w[1] <= w[0]));
        let again = pso_train(|x| x.iter().map(|v| v * v).sum(), &cfg).unwrap();
        assert_eq!(res, again);
    }

    #[test]
    fn pso_constant_objective() {
        let cfg = PsoConfig::new(vec![(0.0, 1.0), (-2.0, 2.0)], 1);
        let res = pso_train(|_| 3.5, &cfg).unwrap();
        assert_eq!(res.best_loss, 3.5);
        assert!(res
            .best_position
            .iter()
            .zip(&cfg.bounds)
            .all(|(x, (lo, hi))| lo <= x && x <= hi));
    }

    #[test]
    fn pso_reports_non_finite() {
        let cfg = PsoConfig::new(vec![(0.0, 1.0)], 1);
        let err = pso_train(|x| if x[0] > 0.5 { f64::NAN } else { x[0] }, &cfg).unwrap_err();
        assert!(matches!(err, Error::NonFiniteObjective { .. }));
    }

    #[test]
    fn clean_channel_needs_no_compensation() {
        let cfg = EqualizerConfig {
            fiber: FiberChannel::smf(0.0),
            prbs_order: 7,
            iterations: 5,
            ..Default::default()
        };
        let r = equalize_experiment(&cfg).unwrap();
        assert_eq!(r.ber_uncompensated, 0.0);
        assert_eq!(r.ber_compensated, 0.0);
    }

    #[test]
    fn histogram_disjointness() {
        let h = ClassHistogram::new(&[0.0, 0.1, 0.9, 1.0], &[0, 0, 1, 1], 10);
        assert!(h.disjoint());
        let h = ClassHistogram::new(&[0.0, 0.6, 0.5, 1.0], &[0, 0, 1, 1], 10);
        assert!(!h.disjoint());
    }
}
