//! One grid cell of each experiment kind.
//!
//! Input data (bits, masks, datasets) derive from the global seed so that
//! every cell of a map sees the same sequence; detector noise derives from
//! the cell seed.

use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{
    ExperimentConfig, FeedbackSettings, IrisSettings, LogicSettings, ReadoutSettings, Settings,
    StabilitySettings, XorSettings,
};
use super::result::Metric;
use super::sub_seed;
use crate::dcp::{equalize_experiment, EqualizerConfig, EqualizerLink};
use crate::error::{Error, Result};
use crate::mrr::{
    classify_trace, count_spikes, cw_drop_trace, integrate, resonance_shift,
    simulate_with_feedback, FeedbackParams, IntegrateOptions, MrrParams, MrrState, Stability,
};
use crate::reservoir::{
    augment_rbits, encode, mask_encode, memory_capacity, pump_probe_response, ridge_cv,
    sample_virtual_nodes, winner_takes_all, EncodingConfig, Mask, MemoryOptions, PumpProbeCoeffs,
    RidgeReadout, StateMatrix,
};
use crate::signal::{
    add_gaussian_noise, lowpass, nmse, nrz_modulate, optimal_threshold, threshold_decide,
    BitSequence,
};
use crate::tasks::{
    delayed_logic_target, iris_load, iris_parse, one_bit_delayed_xor_target, Dataset, IrisData,
    LogicTaskSpec, MackeyGlassParams,
};

/// Uniformly sampled time series with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub dt: f64,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl Trace {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let names: Vec<&str> = self.columns.iter().map(|(n, _)| n.as_str()).collect();
        writeln!(out, "t,{}", names.join(","))?;
        let len = self.columns.iter().map(|(_, c)| c.len()).min().unwrap_or(0);
        for i in 0..len {
            write!(out, "{:e}", i as f64 * self.dt)?;
            for (_, c) in &self.columns {
                write!(out, ",{:e}", c[i])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// A named file produced by a cell (readout weights, reports, eye data).
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellOutput {
    pub metrics: Vec<Metric>,
    /// The same BER metrics from a readout trained on the unprocessed input.
    pub baseline: Option<Vec<Metric>>,
    pub trace: Option<Trace>,
    pub artifacts: Vec<Artifact>,
}

/// Metric columns of a run, in cell order.
pub fn metric_names(cfg: &ExperimentConfig) -> Vec<String> {
    let v = |names: &[&str]| names.iter().map(|s| s.to_string()).collect();
    match &cfg.settings {
        Settings::Stability(_) => v(&["self_pulsing", "sp_freq_hz"]),
        Settings::Logic(s) => s.n1.iter().map(|n| format!("ber_n{n}")).collect(),
        Settings::Xor(_) => v(&["ber"]),
        Settings::Feedback(_) => {
            let head = match cfg.kind {
                super::ExperimentKind::MemoryCapacity => "mc",
                _ => "nmse",
            };
            v(&[head, "spikes", "self_pulsing"])
        }
        Settings::Dcp(_) => v(&["ber", "ber_uncompensated", "separated"]),
        Settings::Iris(_) => v(&["accuracy", "accuracy_train", "accuracy_linear"]),
    }
}

/// Metric columns of the input-only baseline map, if the kind has one.
pub fn baseline_names(cfg: &ExperimentConfig) -> Option<Vec<String>> {
    match &cfg.settings {
        Settings::Logic(_) | Settings::Xor(_) => Some(metric_names(cfg)),
        Settings::Dcp(_) => Some(vec!["ber".into()]),
        _ => None,
    }
}

/// Settings of cell `index` with the axis values applied.
pub fn cell_settings(cfg: &ExperimentConfig, index: usize) -> Settings {
    let mut s = cfg.settings.clone();
    for (axis, v) in cfg.axes.iter().zip(cfg.cell_point(index)) {
        let det = if axis.name == "wavelength_offset" {
            cfg.device.detuning_from_wavelength(v)
        } else {
            v
        };
        match (&mut s, axis.name.as_str()) {
            (Settings::Stability(s), "power") => s.power = v,
            (Settings::Stability(s), _) => s.detuning = det,
            (Settings::Logic(s), "power") => s.power = v,
            (Settings::Logic(s), "bitrate") => s.bitrate = v,
            (Settings::Logic(s), _) => s.detuning = det,
            (Settings::Xor(s), _) => s.bitrate = v,
            (Settings::Feedback(s), "eta") => s.eta = v,
            (Settings::Feedback(s), "phase") => s.phase = v,
            (Settings::Feedback(s), "power") => s.power = v,
            (Settings::Feedback(s), _) => s.detuning = det,
            (Settings::Dcp(s), _) => s.fiber.length = v,
            (Settings::Iris(s), _) => s.n_virtual = v as usize,
        }
    }
    s
}

/// Evaluate cell `index` under `seed`. With `detail`, the cell also returns
/// its time trace and readout weights.
pub fn evaluate_cell(
    cfg: &ExperimentConfig,
    index: usize,
    seed: u64,
    detail: bool,
) -> Result<CellOutput> {
    let dev = &cfg.device;
    let data_seed = cfg.seed;
    match cell_settings(cfg, index) {
        Settings::Stability(s) => stability_cell(dev, &s, detail),
        Settings::Logic(s) => {
            let r = logic_task(dev, &s, data_seed, seed)?;
            let mut artifacts = Vec::new();
            if detail {
                for (n1, ro) in s.n1.iter().zip(&r.readouts) {
                    artifacts.push(Artifact {
                        name: format!("readout_n{n1}.json"),
                        contents: ro.to_json()?,
                    });
                }
            }
            Ok(CellOutput {
                metrics: r.ber,
                baseline: Some(r.ber_input),
                trace: detail.then_some(r.trace),
                artifacts,
            })
        }
        Settings::Xor(s) => {
            let r = xor_task(&s, data_seed, seed)?;
            Ok(CellOutput {
                metrics: vec![r.ber],
                baseline: Some(vec![r.ber_input]),
                artifacts: if detail {
                    vec![Artifact {
                        name: "readout.json".into(),
                        contents: r.readout.to_json()?,
                    }]
                } else {
                    Vec::new()
                },
                trace: detail.then_some(r.trace),
            })
        }
        Settings::Feedback(s) => {
            let r = match cfg.kind {
                super::ExperimentKind::MemoryCapacity => memory_task(dev, &s, data_seed)?,
                super::ExperimentKind::Narma10 => narma_task(dev, &s, data_seed)?,
                _ => mackey_glass_task(dev, &s)?,
            };
            let mut artifacts = Vec::new();
            if let (true, Some(ro)) = (detail, &r.readout) {
                artifacts.push(Artifact {
                    name: "readout.json".into(),
                    contents: ro.to_json()?,
                });
            }
            Ok(CellOutput {
                metrics: vec![
                    Metric::plain(r.score),
                    Metric::plain(r.spikes as f64),
                    Metric::plain(f64::from(u8::from(r.self_pulsing))),
                ],
                baseline: None,
                trace: detail.then_some(r.trace),
                artifacts,
            })
        }
        Settings::Dcp(s) => dcp_cell(&s),
        Settings::Iris(s) => {
            let data = match &s.data {
                Some(p) => iris_load(p)?,
                None => iris_bundled(),
            };
            let r = iris_task(&data, &s, data_seed)?;
            Ok(CellOutput {
                metrics: vec![
                    Metric::plain(r.accuracy),
                    Metric::plain(r.accuracy_train),
                    Metric::plain(r.accuracy_linear),
                ],
                baseline: None,
                trace: None,
                artifacts: vec![Artifact {
                    name: "readout.json".into(),
                    contents: r.readout.to_json()?,
                }],
            })
        }
    }
}

fn stability_cell(dev: &MrrParams, s: &StabilitySettings, detail: bool) -> Result<CellOutput> {
    let opts = s.options();
    let trace = cw_drop_trace(dev, s.power, s.detuning, &opts)?;
    let class = classify_trace(&trace, 1.0 / opts.sample_interval);
    Ok(CellOutput {
        metrics: vec![
            Metric::plain(f64::from(u8::from(class.is_self_pulsing()))),
            Metric::plain(class.frequency()),
        ],
        baseline: None,
        trace: detail.then(|| Trace {
            dt: opts.sample_interval,
            columns: vec![("drop_power".into(), trace)],
        }),
        artifacts: Vec::new(),
    })
}

/// Stability class encoded in a `self_pulsing`/`sp_freq_hz` metric pair.
pub fn stability_from_metrics(self_pulsing: f64, frequency: f64) -> Stability {
    if self_pulsing > 0.5 {
        Stability::SelfPulsing { frequency }
    } else {
        Stability::Stable
    }
}

/// Uniform random bits from `seed`.
pub fn random_bits(n: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(0..2u8)).collect()
}

/// Train a thresholded ridge readout on the training window and score the
/// test window. Features are standardized with training statistics and the
/// threshold is the error-minimizing one on the training outputs.
pub fn classify(
    states: &StateMatrix,
    target: &[u8],
    r: &ReadoutSettings,
) -> Result<(Metric, RidgeReadout)> {
    check_len(states.n_samples(), target.len(), r)?;
    let (tr, te) = split(states, r);
    let y = DMatrix::from_fn(1, r.train, |_, j| f64::from(target[r.washout + j]));
    let readout = ridge_cv(tr.features(), &y, &r.lambdas, r.folds, true)?;
    let out_tr = readout.predict(tr.features())?;
    let (thr, _) = optimal_threshold(out_tr.as_slice(), &target[r.washout..r.washout + r.train])?;
    let out_te = readout.predict(te.features())?;
    let decided = threshold_decide(out_te.as_slice(), thr);
    let truth = &target[r.washout + r.train..r.len()];
    let errors = decided.iter().zip(truth).filter(|(a, b)| a != b).count();
    Ok((Metric::ber(errors, r.test), readout))
}

/// Ridge regression on the training window; NMSE on the test window.
pub fn regress(states: &StateMatrix, target: &[f64], r: &ReadoutSettings) -> Result<(f64, RidgeReadout)> {
    check_len(states.n_samples(), target.len(), r)?;
    let (tr, te) = split(states, r);
    let y = DMatrix::from_row_slice(1, r.train, &target[r.washout..r.washout + r.train]);
    let readout = ridge_cv(tr.features(), &y, &r.lambdas, r.folds, true)?;
    let out = readout.predict(te.features())?;
    Ok((nmse(out.as_slice(), &target[r.washout + r.train..r.len()])?, readout))
}

fn check_len(samples: usize, targets: usize, r: &ReadoutSettings) -> Result<()> {
    if samples < r.len() || targets < r.len() {
        return Err(Error::invalid(format!(
            "{samples} samples and {targets} targets for a readout window of {}",
            r.len()
        )));
    }
    Ok(())
}

fn split(states: &StateMatrix, r: &ReadoutSettings) -> (StateMatrix, StateMatrix) {
    let tr = states.columns(r.washout, r.train);
    let (mean, scale) = tr.row_stats();
    let te = states.columns(r.washout + r.train, r.test).normalized(&mean, &scale);
    (tr.normalized(&mean, &scale), te)
}

fn add_noise_to_states(st: &StateMatrix, std: f64, seed: u64) -> Result<StateMatrix> {
    let mut f = st.features().clone();
    add_gaussian_noise(f.as_mut_slice(), std, seed);
    StateMatrix::new(f, st.labels().to_vec())
}

#[derive(Debug, Clone)]
pub struct LogicOutcome {
    /// One BER per delay in `n1`, from the ring output.
    pub ber: Vec<Metric>,
    /// Same, from the detected input sequence.
    pub ber_input: Vec<Metric>,
    pub readouts: Vec<RidgeReadout>,
    /// Input and normalized detected drop power at the acquisition rate.
    pub trace: Trace,
}

/// Delayed logic on the ring's drop port: random NRZ bits at `s.bitrate`
/// and on-level `s.power`, acquired at `s.sample_rate` through a
/// single-pole detector, normalized to unit mean, with relative Gaussian
/// noise.
pub fn logic_task(
    dev: &MrrParams,
    s: &LogicSettings,
    data_seed: u64,
    noise_seed: u64,
) -> Result<LogicOutcome> {
    let per_bit = s.sample_rate / s.bitrate;
    let spb = per_bit.round() as usize;
    if spb == 0 || (per_bit - spb as f64).abs() > 1e-6 * per_bit {
        return Err(Error::invalid(format!(
            "sample rate {} is not a whole multiple of bitrate {}",
            s.sample_rate, s.bitrate
        )));
    }
    let bits = BitSequence::new(random_bits(s.readout.len(), data_seed), s.bitrate)?;
    let input = nrz_modulate(&bits, spb, s.power, 0.0)?;
    let opts = IntegrateOptions {
        record_states: false,
        ..IntegrateOptions::exponential(s.solver_dt)
    };
    let traj = integrate(dev, s.detuning, MrrState::default(), &input, &opts)?;
    let detected = |p: &[f64], seed: u64| -> Result<Vec<f64>> {
        let mut d = lowpass(p, s.detector_bandwidth, s.sample_rate);
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(Error::Divergence { time: f64::NAN });
        }
        d.iter_mut().for_each(|v| *v /= mean);
        add_gaussian_noise(&mut d, s.noise, seed);
        Ok(d)
    };
    let drop = detected(&traj.drop_power(), sub_seed(noise_seed, 1))?;
    let inp = detected(&input.powers(), sub_seed(noise_seed, 2))?;
    let out_states = augment_rbits(&sample_virtual_nodes(&drop, s.bitrate, s.n_virtual, s.sample_rate)?, s.n2)?;
    let in_states = augment_rbits(&sample_virtual_nodes(&inp, s.bitrate, s.n_virtual, s.sample_rate)?, s.n2)?;
    let (mut ber, mut ber_input, mut readouts) = (Vec::new(), Vec::new(), Vec::new());
    for &n1 in &s.n1 {
        let spec = LogicTaskSpec::new(s.op, n1, s.n2)?;
        let target = delayed_logic_target(&bits, &spec);
        let (b, ro) = classify(&out_states, target.bits(), &s.readout)?;
        ber.push(b);
        readouts.push(ro);
        ber_input.push(classify(&in_states, target.bits(), &s.readout)?.0);
    }
    Ok(LogicOutcome {
        ber,
        ber_input,
        readouts,
        trace: Trace {
            dt: 1.0 / s.sample_rate,
            columns: vec![("input_power".into(), input.powers()), ("drop".into(), drop)],
        },
    })
}

#[derive(Debug, Clone)]
pub struct XorOutcome {
    pub ber: Metric,
    pub ber_input: Metric,
    pub readout: RidgeReadout,
    /// Pump and probe waveforms.
    pub trace: Trace,
}

/// One-bit delayed XOR through the pump-probe carrier kernel with the
/// input replicated on every virtual node. Both the probe nodes and the
/// baseline input nodes carry the same absolute detection noise.
pub fn xor_task(s: &XorSettings, data_seed: u64, noise_seed: u64) -> Result<XorOutcome> {
    let n = s.readout.len();
    let bits = random_bits(n, data_seed);
    let seq = BitSequence::new(bits.clone(), s.bitrate)?;
    let target = one_bit_delayed_xor_target(&seq);
    let x = DMatrix::from_fn(1, n, |_, j| f64::from(bits[j]));
    let spacing = 1.0 / (s.bitrate * s.n_virtual as f64);
    let spn = ((20.0 * spacing / s.tau_fc).ceil() as usize).max(4);
    let enc = EncodingConfig::replicated(s.n_virtual, s.alpha, s.u0, spacing)?;
    let pump = encode(&x, &enc, spn)?;
    let coeffs = PumpProbeCoeffs {
        c0: s.c0,
        c1: s.c1,
        c2: s.c2,
        tau_fc: s.tau_fc,
    };
    let dt = spacing / spn as f64;
    let probe = pump_probe_response(&pump, &coeffs, dt)?;
    if probe.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence { time: f64::NAN });
    }
    let rate = spn as f64 / spacing;
    let out = add_noise_to_states(
        &sample_virtual_nodes(&probe, s.bitrate, s.n_virtual, rate)?,
        s.noise,
        sub_seed(noise_seed, 1),
    )?;
    let inp = add_noise_to_states(
        &StateMatrix::from_nodes(enc.node_values(&x)?)?,
        s.noise,
        sub_seed(noise_seed, 2),
    )?;
    let (ber, readout) = classify(&out, target.bits(), &s.readout)?;
    let (ber_input, _) = classify(&inp, target.bits(), &s.readout)?;
    Ok(XorOutcome {
        ber,
        ber_input,
        readout,
        trace: Trace {
            dt,
            columns: vec![("pump".into(), pump), ("probe".into(), probe)],
        },
    })
}

/// Drop-port node states of the feedback reservoir for input `x`.
#[derive(Debug, Clone)]
pub struct FeedbackRun {
    /// `n_virtual × len(x)` drop powers, one column per input.
    pub states: StateMatrix,
    pub input_power: Vec<f64>,
    pub drop_power: Vec<f64>,
    /// Resonance wavelength minus the cold resonance, per node.
    pub shift: Vec<f64>,
    pub node_duration: f64,
}

/// Mask-encode `x` (values in `[0, 1]`) at peak power `s.power` and
/// integrate the ring with its through port fed back to the add port.
pub fn feedback_reservoir(dev: &MrrParams, s: &FeedbackSettings, x: &[f64]) -> Result<FeedbackRun> {
    let nv = s.n_virtual;
    let mask = Mask::random(nv, s.mask_seed)?;
    let sig = mask_encode(x, &mask, s.bit_width, s.power, 1)?;
    let fb = FeedbackParams::new(s.eta, s.phase, s.feedback_delay)?;
    let traj = simulate_with_feedback(
        dev,
        &fb,
        s.detuning,
        MrrState::default(),
        &sig,
        &IntegrateOptions::exponential(s.solver_dt),
    )?;
    let drop = traj.drop_power();
    let states = StateMatrix::from_nodes(DMatrix::from_fn(nv, x.len(), |j, i| drop[i * nv + j]))?;
    Ok(FeedbackRun {
        states,
        input_power: sig.powers(),
        shift: resonance_shift(dev, &traj.states),
        drop_power: drop,
        node_duration: s.bit_width / nv as f64,
    })
}

impl FeedbackRun {
    /// Spike count after the washout and whether it marks self-pulsing.
    pub fn spikes(&self, dev: &MrrParams, s: &FeedbackSettings) -> (usize, bool) {
        let nv = s.n_virtual;
        let from = (s.readout.washout * nv).min(self.shift.len());
        let count = count_spikes(
            &self.shift[from..],
            s.spike_window_bits * nv,
            s.spike_depth * dev.linewidth_wavelength(),
        );
        let n_bits = (self.shift.len() - from) / nv;
        (count, count as f64 >= s.spike_rate * n_bits as f64 && count > 0)
    }

    fn trace(&self) -> Trace {
        Trace {
            dt: self.node_duration,
            columns: vec![
                ("input_power".into(), self.input_power.clone()),
                ("drop_power".into(), self.drop_power.clone()),
                ("resonance_shift".into(), self.shift.clone()),
            ],
        }
    }
}

#[derive(Debug, Clone)]
pub struct FeedbackOutcome {
    /// NMSE, or the memory capacity.
    pub score: f64,
    pub spikes: usize,
    pub self_pulsing: bool,
    pub readout: Option<RidgeReadout>,
    pub trace: Trace,
}

fn outcome(dev: &MrrParams, s: &FeedbackSettings, run: FeedbackRun, score: f64, ro: Option<RidgeReadout>) -> FeedbackOutcome {
    let (spikes, self_pulsing) = run.spikes(dev, s);
    FeedbackOutcome {
        score,
        spikes,
        self_pulsing,
        readout: ro,
        trace: run.trace(),
    }
}

/// NARMA-10 one-step prediction; the `[0, 0.5]` inputs are doubled to
/// fill the mask's `[0, 1]` range.
pub fn narma_task(dev: &MrrParams, s: &FeedbackSettings, data_seed: u64) -> Result<FeedbackOutcome> {
    let d = Dataset::narma10(s.readout.len(), data_seed)?;
    let x: Vec<f64> = d.input.iter().map(|u| 2.0 * u).collect();
    let run = feedback_reservoir(dev, s, &x)?;
    let (e, ro) = regress(&run.states, &d.target, &s.readout)?;
    Ok(outcome(dev, s, run, e, Some(ro)))
}

/// Mackey-Glass dataset used by [`mackey_glass_task`]: input min-max
/// scaled to `[0, 1]`, target left in natural units.
pub fn mackey_glass_data(s: &FeedbackSettings) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = Dataset::mackey_glass(&MackeyGlassParams::default(), s.readout.len(), s.stride)?;
    let (lo, hi) = d
        .input
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let x = d.input.iter().map(|v| (v - lo) / (hi - lo)).collect();
    Ok((x, d.target))
}

pub fn mackey_glass_task(dev: &MrrParams, s: &FeedbackSettings) -> Result<FeedbackOutcome> {
    let (x, y) = mackey_glass_data(s)?;
    let run = feedback_reservoir(dev, s, &x)?;
    let (e, ro) = regress(&run.states, &y, &s.readout)?;
    Ok(outcome(dev, s, run, e, Some(ro)))
}

/// Linear memory capacity with i.i.d. uniform inputs.
pub fn memory_task(dev: &MrrParams, s: &FeedbackSettings, data_seed: u64) -> Result<FeedbackOutcome> {
    let r = &s.readout;
    let opts = MemoryOptions {
        n_samples: r.len(),
        washout: r.washout,
        train_fraction: r.train as f64 / (r.train + r.test) as f64,
        lambda: s.lambda,
        l_max: s.l_max,
    };
    let mut kept = None;
    let mc = memory_capacity(
        |x| {
            let run = feedback_reservoir(dev, s, x)?;
            let st = run.states.clone();
            kept = Some(run);
            Ok(st)
        },
        &opts,
        data_seed,
    )?;
    let run = kept.expect("reservoir was evaluated");
    Ok(outcome(dev, s, run, mc.total, None))
}

fn dcp_cell(cfg: &EqualizerConfig) -> Result<CellOutput> {
    let report = equalize_experiment(cfg)?;
    let link = EqualizerLink::new(cfg)?;
    let n = link.bits.len();
    let ber = |b: f64| Metric::ber((b * n as f64).round() as usize, n);
    let mut eye = Vec::new();
    link.write_eye_csv(&report.phases, &mut eye)?;
    let mut eye_raw = Vec::new();
    link.write_eye_csv(&[0.0], &mut eye_raw)?;
    let utf8 = |b: Vec<u8>| String::from_utf8(b).expect("csv is ascii");
    Ok(CellOutput {
        metrics: vec![
            ber(report.ber_compensated),
            ber(report.ber_uncompensated),
            Metric::plain(f64::from(u8::from(report.compensated.histogram.disjoint()))),
        ],
        baseline: Some(vec![ber(report.ber_uncompensated)]),
        trace: None,
        artifacts: vec![
            Artifact {
                name: "equalizer.json".into(),
                contents: report.to_json()?,
            },
            Artifact {
                name: "eye.csv".into(),
                contents: utf8(eye),
            },
            Artifact {
                name: "eye_uncompensated.csv".into(),
                contents: utf8(eye_raw),
            },
        ],
    })
}

/// The 150-sample Iris set shipped with the crate.
pub fn iris_bundled() -> IrisData {
    iris_parse(include_str!("../../data/iris.csv").as_bytes()).expect("bundled iris data parses")
}

#[derive(Debug, Clone)]
pub struct IrisOutcome {
    pub accuracy: f64,
    pub accuracy_train: f64,
    /// Test accuracy of the same readout on the raw features.
    pub accuracy_linear: f64,
    pub readout: RidgeReadout,
}

/// Iris classification through the pump-probe kernel with a random input
/// connectivity. Samples are presented in a seeded random order so the
/// carrier memory cannot leak class labels between neighbours.
pub fn iris_task(data: &IrisData, s: &IrisSettings, seed: u64) -> Result<IrisOutcome> {
    let m = data.n_samples();
    let mut order: Vec<usize> = (0..m).collect();
    {
        use rand::seq::SliceRandom;
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(sub_seed(seed, 7)));
    }
    let x = data.features.select_columns(&order);
    let enc = EncodingConfig::random(s.n_virtual, x.nrows(), s.alpha, s.u0, s.node_spacing, seed)?;
    let spn = ((20.0 * s.node_spacing / s.tau_fc).ceil() as usize).max(4);
    let pump = encode(&x, &enc, spn)?;
    let probe = pump_probe_response(&pump, &PumpProbeCoeffs::unit(s.tau_fc), s.node_spacing / spn as f64)?;
    let rate = spn as f64 / s.node_spacing;
    let shuffled = sample_virtual_nodes(&probe, rate / (spn * s.n_virtual) as f64, s.n_virtual, rate)?;
    // Undo the presentation order.
    let mut inverse = vec![0; m];
    for (k, &j) in order.iter().enumerate() {
        inverse[j] = k;
    }
    let states = shuffled.features().select_columns(&inverse);
    let (mut train, test) = data.stratified_split(seed);
    // Cross-validation folds are contiguous; mix the classes first.
    {
        use rand::seq::SliceRandom;
        train.shuffle(&mut ChaCha8Rng::seed_from_u64(sub_seed(seed, 8)));
    }
    let score = |f: &DMatrix<f64>| -> Result<(f64, f64, RidgeReadout)> {
        let st = StateMatrix::from_nodes(f.clone())?;
        let tr = StateMatrix::from_nodes(f.select_columns(&train))?;
        let (mean, scale) = tr.row_stats();
        let tr = tr.normalized(&mean, &scale);
        let te = StateMatrix::from_nodes(st.features().select_columns(&test))?.normalized(&mean, &scale);
        let y = data.one_hot().select_columns(&train);
        let ro = ridge_cv(tr.features(), &y, &s.lambdas, s.folds, true)?;
        let acc = |feat: &DMatrix<f64>, idx: &[usize]| -> Result<f64> {
            let pred = winner_takes_all(&ro.predict(feat)?);
            let hits = pred.iter().zip(idx).filter(|(p, &j)| **p == data.labels[j]).count();
            Ok(hits as f64 / idx.len() as f64)
        };
        Ok((acc(te.features(), &test)?, acc(tr.features(), &train)?, ro))
    };
    let (accuracy, accuracy_train, readout) = score(&states)?;
    let (accuracy_linear, _, _) = score(&data.features)?;
    Ok(IrisOutcome {
        accuracy,
        accuracy_train,
        accuracy_linear,
        readout,
    })
}
