//! Waveforms, bit sequences, modulation, square-law detection and error
//! metrics shared by the rest of the crate.
//!
//! Optical fields are stored as complex envelopes in units of √W so that
//! `|E|²` is the instantaneous optical power.

use std::io::{BufRead, Read, Write};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Complex field envelope on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    samples: Vec<Complex64>,
    sample_rate: f64,
    t_start: f64,
}

impl SampledSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64, t_start: f64) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::invalid("signal must hold at least one sample"));
        }
        if let Some(i) = samples
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        if !t_start.is_finite() {
            return Err(Error::invalid("t_start must be finite"));
        }
        Ok(Self {
            samples,
            sample_rate,
            t_start,
        })
    }

    /// Constant field of amplitude `√power` and zero phase.
    pub fn cw(power: f64, len: usize, sample_rate: f64) -> Result<Self> {
        if power < 0.0 {
            return Err(Error::invalid("CW power must be non-negative"));
        }
        Self::new(
            vec![Complex64::new(power.sqrt(), 0.0); len],
            sample_rate,
            0.0,
        )
    }

    /// Field whose power follows `powers` (zero phase).
    pub fn from_powers(powers: &[f64], sample_rate: f64, t_start: f64) -> Result<Self> {
        if let Some(i) = powers.iter().position(|&p| p < 0.0) {
            return Err(Error::invalid(format!("power sample {i} is negative")));
        }
        Self::new(
            powers
                .iter()
                .map(|&p| Complex64::new(p.sqrt(), 0.0))
                .collect(),
            sample_rate,
            t_start,
        )
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time spanned by the samples, `len / sample_rate`.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn time(&self, index: usize) -> f64 {
        self.t_start + index as f64 / self.sample_rate
    }

    pub fn powers(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Total energy, `Σ|E|²·dt`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.sample_rate
    }

    /// Repeat each sample `factor` times (zero-order hold upsampling).
    pub fn upsample_hold(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::invalid("upsampling factor must be >= 1"));
        }
        let samples = self
            .samples
            .iter()
            .flat_map(|&z| std::iter::repeat(z).take(factor))
            .collect();
        Self::new(samples, self.sample_rate * factor as f64, self.t_start)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,re,im")?;
        for (i, z) in self.samples.iter().enumerate() {
            writeln!(out, "{:e},{:e},{:e}", self.time(i), z.re, z.im)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut t = Vec::new();
        let mut samples = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if n == 0 || line.is_empty() {
                continue;
            }
            let parse = |s: Option<&str>| -> Result<f64> {
                s.and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| Error::Parse {
                        line: n + 1,
                        message: format!("expected `t,re,im`, got `{line}`"),
                    })
            };
            let mut cols = line.split(',');
            t.push(parse(cols.next())?);
            let re = parse(cols.next())?;
            let im = parse(cols.next())?;
            samples.push(Complex64::new(re, im));
        }
        if t.len() < 2 {
            return Err(Error::invalid(
                "CSV waveform needs at least two rows to infer the sample rate",
            ));
        }
        let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
        Self::new(samples, 1.0 / dt, t[0])
    }

    /// Binary container: 8-byte magic, a header triple
    /// `(sample_rate, t_start, len)`, then one `(t, re, im)` triple per
    /// sample, all little-endian f64.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(SIGNAL_MAGIC)?;
        for v in [self.sample_rate, self.t_start, self.samples.len() as f64] {
            out.write_all(&v.to_le_bytes())?;
        }
        for (i, z) in self.samples.iter().enumerate() {
            for v in [self.time(i), z.re, z.im] {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != SIGNAL_MAGIC {
            return Err(Error::invalid("not a waveform container (bad magic)"));
        }
        let mut read_f64 = || -> Result<f64> {
            let mut buf = [0u8; 8];
            input.read_exact(&mut buf)?;
            Ok(f64::from_le_bytes(buf))
        };
        let sample_rate = read_f64()?;
        let t_start = read_f64()?;
        let len = read_f64()?;
        if !(len >= 1.0 && len.fract() == 0.0) {
            return Err(Error::invalid("corrupt waveform header"));
        }
        let mut samples = Vec::with_capacity(len as usize);
        for _ in 0..len as usize {
            let _t = read_f64()?;
            let re = read_f64()?;
            let im = read_f64()?;
            samples.push(Complex64::new(re, im));
        }
        Self::new(samples, sample_rate, t_start)
    }
}

pub const SIGNAL_MAGIC: &[u8; 8] = b"RRSIG\0\0\x01";

/// Binary sequence clocked at `bitrate`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSequence {
    bits: Vec<u8>,
    bitrate_bits: u64,
}

impl BitSequence {
    pub fn new(bits: Vec<u8>, bitrate: f64) -> Result<Self> {
        if !(bitrate > 0.0 && bitrate.is_finite()) {
            return Err(Error::invalid(format!(
                "bitrate must be positive, got {bitrate}"
            )));
        }
        if let Some(i) = bits.iter().position(|&b| b > 1) {
            return Err(Error::invalid(format!("entry {i} is not a bit")));
        }
        Ok(Self {
            bits,
            bitrate_bits: bitrate.to_bits(),
        })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn bitrate(&self) -> f64 {
        f64::from_bits(self.bitrate_bits)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.bits.len() as f64 / self.bitrate()
    }

    pub fn with_bitrate(&self, bitrate: f64) -> Result<Self> {
        Self::new(self.bits.clone(), bitrate)
    }

    /// Concatenate `times` copies of the sequence.
    pub fn repeat(&self, times: usize) -> Self {
        Self {
            bits: self.bits.repeat(times),
            bitrate_bits: self.bitrate_bits,
        }
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| b as f64).collect()
    }
}

/// Primitive feedback taps (Fibonacci form, 1-indexed) for orders 2 to 31.
const PRBS_TAPS: [&[u32]; 30] = [
    &[2, 1],
    &[3, 2],
    &[4, 3],
    &[5, 3],
    &[6, 5],
    &[7, 6],
    &[8, 6, 5, 4],
    &[9, 5],
    &[10, 7],
    &[11, 9],
    &[12, 11, 10, 4],
    &[13, 12, 11, 8],
    &[14, 13, 12, 2],
    &[15, 14],
    &[16, 15, 13, 4],
    &[17, 14],
    &[18, 11],
    &[19, 18, 17, 14],
    &[20, 17],
    &[21, 19],
    &[22, 21],
    &[23, 18],
    &[24, 23, 22, 17],
    &[25, 22],
    &[26, 25, 24, 20],
    &[27, 26, 25, 22],
    &[28, 25],
    &[29, 27],
    &[30, 29, 28, 7],
    &[31, 28],
];

/// One full period (`2^order − 1` bits) of a maximal-length LFSR sequence.
///
/// The returned sequence has a placeholder bitrate of 1 b/s; use
/// [`BitSequence::with_bitrate`] to clock it.
pub fn prbs(order: u32, seed: u32) -> Result<BitSequence> {
    if !(2..=31).contains(&order) {
        return Err(Error::invalid(format!(
            "PRBS order must be in 2..=31, got {order}"
        )));
    }
    let mask = (1u32 << order) - 1;
    let mut state = seed & mask;
    if state == 0 {
        return Err(Error::invalid(
            "PRBS seed must have a nonzero register value",
        ));
    }
    let taps = PRBS_TAPS[(order - 2) as usize];
    let tap_mask = taps.iter().fold(0u32, |m, &t| m | 1 << (order - t));
    let period = (1usize << order) - 1;
    let mut bits = Vec::with_capacity(period);
    for _ in 0..period {
        bits.push((state & 1) as u8);
        let feedback = (state & tap_mask).count_ones() & 1;
        state = (state >> 1) | (feedback << (order - 1));
    }
    BitSequence::new(bits, 1.0)
}

/// Non-return-to-zero on-off keying with zero optical phase.
pub fn nrz_modulate(
    bits: &BitSequence,
    samples_per_bit: usize,
    p_high: f64,
    p_low: f64,
) -> Result<SampledSignal> {
    if samples_per_bit == 0 {
        return Err(Error::invalid("samples_per_bit must be >= 1"));
    }
    if p_low < 0.0 {
        return Err(Error::invalid("p_low must be non-negative"));
    }
    if p_high <= p_low {
        return Err(Error::invalid(format!(
            "p_high ({p_high}) must exceed p_low ({p_low})"
        )));
    }
    if bits.is_empty() {
        return Err(Error::invalid("cannot modulate an empty bit sequence"));
    }
    let (hi, lo) = (p_high.sqrt(), p_low.sqrt());
    let samples = bits
        .bits()
        .iter()
        .flat_map(|&b| {
            let a = if b == 1 { hi } else { lo };
            std::iter::repeat(Complex64::new(a, 0.0)).take(samples_per_bit)
        })
        .collect();
    SampledSignal::new(samples, bits.bitrate() * samples_per_bit as f64, 0.0)
}

/// Photodiode with a single-pole electrical response and additive
/// Gaussian noise on the detected power.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DetectorModel {
    pub bandwidth: f64,
    pub noise_std: f64,
    pub noise_enabled: bool,
}

impl DetectorModel {
    pub fn new(bandwidth: f64, noise_std: f64, noise_enabled: bool) -> Result<Self> {
        if !(bandwidth > 0.0) {
            return Err(Error::invalid("detector bandwidth must be positive"));
        }
        if !(noise_std >= 0.0) {
            return Err(Error::invalid("detector noise_std must be non-negative"));
        }
        Ok(Self {
            bandwidth,
            noise_std,
            noise_enabled,
        })
    }

    /// Noiseless receiver of the given bandwidth.
    pub fn ideal(bandwidth: f64) -> Self {
        Self {
            bandwidth,
            noise_std: 0.0,
            noise_enabled: false,
        }
    }
}

/// Square-law detection followed by the detector's low-pass and noise.
pub fn detect(signal: &SampledSignal, det: &DetectorModel, rng_seed: u64) -> Vec<f64> {
    let powers = signal.powers();
    let mut out = lowpass(&powers, det.bandwidth, signal.sample_rate());
    if det.noise_enabled && det.noise_std > 0.0 {
        add_gaussian_noise(&mut out, det.noise_std, rng_seed);
    }
    out
}

/// Single-pole low-pass, exact for a zero-order-held input. The filter
/// starts in steady state with the first sample.
pub fn lowpass(x: &[f64], bandwidth: f64, sample_rate: f64) -> Vec<f64> {
    let alpha = 1.0 - (-2.0 * std::f64::consts::PI * bandwidth / sample_rate).exp();
    let mut y = x.first().copied().unwrap_or(0.0);
    x.iter()
        .map(|&v| {
            y += alpha * (v - y);
            y
        })
        .collect()
}

pub fn add_gaussian_noise(x: &mut [f64], std: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, std).expect("finite, non-negative std");
    for v in x.iter_mut() {
        *v += normal.sample(&mut rng);
    }
}

/// Fraction of positions where the two sequences differ.
pub fn ber(predicted: &BitSequence, target: &BitSequence) -> Result<f64> {
    ber_slices(predicted.bits(), target.bits())
}

pub fn ber_slices(predicted: &[u8], target: &[u8]) -> Result<f64> {
    if predicted.len() != target.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} vs {}",
            predicted.len(),
            target.len()
        )));
    }
    if target.is_empty() {
        return Err(Error::invalid("cannot compute BER of empty sequences"));
    }
    let errors = predicted.iter().zip(target).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / target.len() as f64)
}

/// 1 where `value > threshold`, else 0.
pub fn threshold_decide(analog: &[f64], threshold: f64) -> Vec<u8> {
    analog.iter().map(|&v| u8::from(v > threshold)).collect()
}

/// Threshold minimizing the number of decision errors against `target`.
///
/// Candidates are midpoints between consecutive distinct sorted values plus
/// one below the minimum and one above the maximum; the sweep is O(n log n).
/// Ties keep the lowest candidate. Returns `(threshold, errors)`.
pub fn optimal_threshold(analog: &[f64], target: &[u8]) -> Result<(f64, usize)> {
    if analog.len() != target.len() || analog.is_empty() {
        return Err(Error::invalid(
            "analog and target must be non-empty and equal length",
        ));
    }
    let mut idx: Vec<usize> = (0..analog.len()).collect();
    idx.sort_by(|&a, &b| analog[a].total_cmp(&analog[b]));
    // Threshold below everything: every sample decides 1.
    let mut errors = target.iter().filter(|&&t| t == 0).count();
    let mut best = (analog[idx[0]] - 1.0, errors);
    let mut k = 0;
    while k < idx.len() {
        let v = analog[idx[k]];
        while k < idx.len() && analog[idx[k]] == v {
            // This sample now decides 0.
            if target[idx[k]] == 1 {
                errors += 1;
            } else {
                errors -= 1;
            }
            k += 1;
        }
        let thr = if k < idx.len() {
            0.5 * (v + analog[idx[k]])
        } else {
            v + 1.0
        };
        if errors < best.1 {
            best = (thr, errors);
        }
    }
    Ok(best)
}

/// Mean squared error normalized by the (population) variance of `target`.
pub fn nmse(predicted: &[f64], target: &[f64]) -> Result<f64> {
    if predicted.len() != target.len() {
        return Err(Error::invalid("predicted and target lengths differ"));
    }
    if target.len() < 2 {
        return Err(Error::invalid("NMSE needs at least two samples"));
    }
    let n = target.len() as f64;
    let mean = target.iter().sum::<f64>() / n;
    let var = target.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::invalid("target has zero variance"));
    }
    let mse = predicted
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t).powi(2))
        .sum::<f64>()
        / n;
    Ok(mse / var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn prbs_lengths() {
        assert_eq!(prbs(8, 1).unwrap().len(), 255);
        assert_eq!(prbs(10, 0x3ff).unwrap().len(), 1023);
        assert!(prbs(10, 0).is_err());
        assert!(prbs(1, 1).is_err());
        assert!(prbs(32, 1).is_err());
        // Seed bits above the register width do not count.
        assert!(prbs(4, 0x10).is_err());
    }

    /// Step the register through every state and count the period.
    fn lfsr_period(order: u32) -> usize {
        let taps = PRBS_TAPS[(order - 2) as usize];
        let tap_mask = taps.iter().fold(0u32, |m, &t| m | 1 << (order - t));
        let start = 1u32;
        let mut state = start;
        let mut n = 0;
        loop {
            let fb = (state & tap_mask).count_ones() & 1;
            state = (state >> 1) | (fb << (order - 1));
            n += 1;
            if state == start || n > (1 << order) {
                return n;
            }
        }
    }

    #[test]
    fn prbs_taps_are_maximal_up_to_order_20() {
        for order in 2..=20 {
            assert_eq!(lfsr_period(order), (1usize << order) - 1, "order {order}");
        }
    }

    #[test]
    fn prbs_balance() {
        for order in 2..=12 {
            let seq = prbs(order, 1).unwrap();
            assert_eq!(seq.ones(), 1 << (order - 1), "order {order}");
        }
    }

    #[test]
    fn nrz_examples() {
        let one = BitSequence::new(vec![1], 1e9).unwrap();
        let s = nrz_modulate(&one, 3, 1e-3, 0.0).unwrap();
        assert!(s.powers().iter().all(|&p| (p - 1e-3).abs() < 1e-18));

        let b = BitSequence::new(vec![0, 1, 0], 1e9).unwrap();
        let s = nrz_modulate(&b, 4, 2e-3, 0.0).unwrap();
        let p = s.powers();
        assert_eq!(p.len(), 12);
        assert!(p[..4].iter().all(|&v| v == 0.0));
        assert!(p[4..8].iter().all(|&v| (v - 2e-3).abs() < 1e-18));
        assert!(p[8..].iter().all(|&v| v == 0.0));

        let prbs10 = prbs(10, 1).unwrap().with_bitrate(10e9).unwrap();
        let s = nrz_modulate(&prbs10, 8, 1e-3, 0.0).unwrap();
        assert_relative_eq!(s.duration(), 1023.0 / 1e10, max_relative = 1e-12);

        assert!(nrz_modulate(&b, 4, 1e-3, 2e-3).is_err());
        assert!(nrz_modulate(&b, 0, 1e-3, 0.0).is_err());
    }

    #[test]
    fn detect_cw_and_zero() {
        let det = DetectorModel::ideal(1e12);
        let cw = SampledSignal::cw(2e-3, 100, 1e11).unwrap();
        assert!(detect(&cw, &det, 0)
            .iter()
            .all(|&p| (p - 2e-3).abs() < 1e-15));
        let zero = SampledSignal::cw(0.0, 50, 1e11).unwrap();
        assert!(detect(&zero, &det, 0).iter().all(|&p| p == 0.0));
    }

    #[test]
    fn detect_step_response_matches_single_pole() {
        let fs = 1e12;
        let bw = 5e9;
        let mut powers = vec![0.0; 10];
        powers.extend(std::iter::repeat(1.0).take(2000));
        let s = SampledSignal::from_powers(&powers, fs, 0.0).unwrap();
        let y = detect(&s, &DetectorModel::ideal(bw), 0);
        let tau = 1.0 / (2.0 * std::f64::consts::PI * bw);
        for k in [5usize, 20, 32, 100, 300] {
            // Sample 10 + k has integrated the step for (k + 1) samples.
            let t = (k + 1) as f64 / fs;
            let expected = 1.0 - (-t / tau).exp();
            assert!((y[10 + k] - expected).abs() <= 0.02 * expected, "k={k}");
        }
    }

    #[test]
    fn detect_noise_is_seeded() {
        let det = DetectorModel::new(1e10, 1e-4, true).unwrap();
        let s = SampledSignal::cw(1e-3, 64, 1e11).unwrap();
        assert_eq!(detect(&s, &det, 7), detect(&s, &det, 7));
        assert_ne!(detect(&s, &det, 7), detect(&s, &det, 8));
    }

    #[test]
    fn ber_examples() {
        let a = BitSequence::new(vec![0, 1, 1, 0], 1.0).unwrap();
        let c = BitSequence::new(vec![1, 0, 0, 1], 1.0).unwrap();
        let h = BitSequence::new(vec![1, 0, 1, 0], 1.0).unwrap();
        assert_eq!(ber(&a, &a).unwrap(), 0.0);
        assert_eq!(ber(&a, &c).unwrap(), 1.0);
        assert_eq!(ber(&a, &h).unwrap(), 0.5);
        let short = BitSequence::new(vec![0], 1.0).unwrap();
        assert!(ber(&a, &short).is_err());
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(threshold_decide(&[0.2, 0.8], 0.5), vec![0, 1]);
        assert_eq!(threshold_decide(&[0.1, 0.3], 0.5), vec![0, 0]);
    }

    fn brute_force_threshold(analog: &[f64], target: &[u8]) -> usize {
        let mut cands: Vec<f64> = analog.to_vec();
        cands.push(f64::NEG_INFINITY);
        cands
            .iter()
            .map(|&thr| {
                threshold_decide(analog, thr)
                    .iter()
                    .zip(target)
                    .filter(|(a, b)| a != b)
                    .count()
            })
            .min()
            .unwrap()
    }

    proptest! {
        #[test]
        fn optimal_threshold_matches_brute_force(
            data in proptest::collection::vec((-2.0f64..2.0, 0u8..2), 1..60)
        ) {
            let analog: Vec<f64> = data.iter().map(|d| (d.0 * 8.0).round() / 8.0).collect();
            let target: Vec<u8> = data.iter().map(|d| d.1).collect();
            let (thr, errs) = optimal_threshold(&analog, &target).unwrap();
            prop_assert_eq!(errs, brute_force_threshold(&analog, &target));
            let decided = threshold_decide(&analog, thr);
            let actual = decided.iter().zip(&target).filter(|(a, b)| a != b).count();
            prop_assert_eq!(actual, errs);
        }

        #[test]
        fn ber_is_symmetric(a in proptest::collection::vec(0u8..2, 1..50), seed in 0u64..1000) {
            use rand::Rng;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b: Vec<u8> = a.iter().map(|_| rng.gen_range(0..2)).collect();
            prop_assert_eq!(ber_slices(&a, &b).unwrap(), ber_slices(&b, &a).unwrap());
        }

        #[test]
        fn detection_is_monotone_in_power(
            base in proptest::collection::vec(0.0f64..1.0, 2..100),
            extra in proptest::collection::vec(0.0f64..1.0, 100),
        ) {
            let bigger: Vec<f64> = base.iter().zip(&extra).map(|(b, e)| b + e).collect();
            let det = DetectorModel::ideal(3e9);
            let y0 = detect(&SampledSignal::from_powers(&base, 1e11, 0.0).unwrap(), &det, 0);
            let y1 = detect(&SampledSignal::from_powers(&bigger, 1e11, 0.0).unwrap(), &det, 0);
            for (a, b) in y0.iter().zip(&y1) {
                prop_assert!(b + 1e-15 >= *a);
            }
        }

        #[test]
        fn waveform_binary_roundtrip(
            vals in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..40),
            fs in 1e6f64..1e12,
            t0 in -1e-6f64..1e-6,
        ) {
            let s = SampledSignal::new(
                vals.iter().map(|&(a, b)| Complex64::new(a, b)).collect(), fs, t0).unwrap();
            let mut buf = Vec::new();
            s.write_binary(&mut buf).unwrap();
            prop_assert_eq!(&buf[..8], SIGNAL_MAGIC);
            prop_assert_eq!(buf.len(), 8 + 24 * (vals.len() + 1));
            prop_assert_eq!(SampledSignal::read_binary(&buf[..]).unwrap(), s);
        }
    }

    #[test]
    fn nmse_examples() {
        let t = [1.0, 2.0, 3.0, 6.0];
        assert_eq!(nmse(&t, &t).unwrap(), 0.0);
        let mean = [3.0; 4];
        assert_relative_eq!(nmse(&mean, &t).unwrap(), 1.0, max_relative = 1e-12);
        assert!(nmse(&[1.0, 1.0], &[2.0, 2.0]).is_err());
        assert!(nmse(&[1.0], &[2.0]).is_err());
    }

    #[test]
    fn nmse_matches_two_pass_oracle() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t: Vec<f64> = (0..500).map(|_| rng.gen::<f64>()).collect();
        let p: Vec<f64> = t.iter().map(|v| v + 0.1 * rng.gen::<f64>()).collect();
        // Oracle: Welford variance and a separate error accumulator.
        let (mut mean, mut m2) = (0.0, 0.0);
        for (k, &v) in t.iter().enumerate() {
            let d = v - mean;
            mean += d / (k + 1) as f64;
            m2 += d * (v - mean);
        }
        let var = m2 / t.len() as f64;
        let mse: f64 = p
            .iter()
            .zip(&t)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / t.len() as f64;
        assert_relative_eq!(nmse(&p, &t).unwrap(), mse / var, max_relative = 1e-12);
    }

    #[test]
    fn nmse_is_not_shift_invariant_in_target_alone() {
        let t = [0.0, 1.0, 0.0, 1.0];
        let p = [0.1, 0.9, 0.2, 0.7];
        let shifted: Vec<f64> = t.iter().map(|v| v + 1.0).collect();
        assert!(nmse(&p, &shifted).unwrap() > nmse(&p, &t).unwrap());
    }

    #[test]
    fn csv_roundtrip() {
        let s = SampledSignal::new(
            vec![
                Complex64::new(0.5, -0.25),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 2.0),
            ],
            1e10,
            1e-9,
        )
        .unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = SampledSignal::read_csv(&buf[..]).unwrap();
        assert_eq!(back.samples(), s.samples());
        assert_relative_eq!(back.sample_rate(), 1e10, max_relative = 1e-9);
        let err = SampledSignal::read_csv("t,re,im\n0,1,2\n1,x,3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn invalid_signals_rejected() {
        assert!(SampledSignal::new(vec![], 1.0, 0.0).is_err());
        assert!(SampledSignal::new(vec![Complex64::new(1.0, 0.0)], 0.0, 0.0).is_err());
        assert!(SampledSignal::new(vec![Complex64::new(f64::NAN, 0.0)], 1.0, 0.0).is_err());
        assert!(DetectorModel::new(0.0, 0.0, false).is_err());
        assert!(DetectorModel::new(1.0, -1.0, false).is_err());
    }
}
