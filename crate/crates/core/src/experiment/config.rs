//! Declarative experiment configs (TOML with unit-suffixed scalars).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dcp::{EqualizerConfig, FiberChannel};
use crate::error::{Error, Result};
use crate::mrr::{MrrParams, Preset, StabilityOptions};
use crate::reservoir::log_grid;
use crate::tasks::LogicOp;
use crate::units::{parse_quantity, Dimension};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    StabilityMap,
    LogicTask,
    XorRc,
    Narma10,
    MackeyGlass,
    MemoryCapacity,
    DcpEqualize,
    Iris,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::StabilityMap,
        ExperimentKind::LogicTask,
        ExperimentKind::XorRc,
        ExperimentKind::Narma10,
        ExperimentKind::MackeyGlass,
        ExperimentKind::MemoryCapacity,
        ExperimentKind::DcpEqualize,
        ExperimentKind::Iris,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::StabilityMap => "stability_map",
            ExperimentKind::LogicTask => "logic_task",
            ExperimentKind::XorRc => "xor_rc",
            ExperimentKind::Narma10 => "narma10",
            ExperimentKind::MackeyGlass => "mackey_glass",
            ExperimentKind::MemoryCapacity => "memory_capacity",
            ExperimentKind::DcpEqualize => "dcp_equalize",
            ExperimentKind::Iris => "iris",
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    fn default_preset(self) -> Preset {
        match self {
            ExperimentKind::StabilityMap => Preset::SelfPulsing,
            ExperimentKind::LogicTask | ExperimentKind::XorRc | ExperimentKind::Iris => {
                Preset::Logic
            }
            _ => Preset::Feedback,
        }
    }

    /// Axes a sweep of this kind may run over.
    pub fn allowed_axes(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::StabilityMap => &["power", "detuning", "wavelength_offset"],
            ExperimentKind::LogicTask => &["power", "detuning", "wavelength_offset", "bitrate"],
            ExperimentKind::XorRc => &["bitrate"],
            ExperimentKind::Narma10 | ExperimentKind::MackeyGlass | ExperimentKind::MemoryCapacity => {
                &["eta", "phase", "power", "detuning", "wavelength_offset"]
            }
            ExperimentKind::DcpEqualize => &["fiber_length"],
            ExperimentKind::Iris => &["n_virtual"],
        }
    }
}

/// Dimension and SI unit of a named sweep axis.
pub fn axis_unit(name: &str) -> Option<(Dimension, &'static str)> {
    Some(match name {
        "power" => (Dimension::Power, "W"),
        "detuning" => (Dimension::Frequency, "Hz"),
        "wavelength_offset" => (Dimension::Length, "m"),
        "bitrate" => (Dimension::Bitrate, "bps"),
        "eta" => (Dimension::Dimensionless, ""),
        "phase" => (Dimension::Angle, "rad"),
        "fiber_length" => (Dimension::Length, "m"),
        "n_virtual" => (Dimension::Dimensionless, ""),
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: &str, values: Vec<f64>) -> Result<Self> {
        let (_, unit) =
            axis_unit(name).ok_or_else(|| Error::invalid(format!("unknown axis `{name}`")))?;
        if values.is_empty() {
            return Err(Error::invalid(format!("axis `{name}` has no values")));
        }
        Ok(Self {
            name: name.to_string(),
            unit: unit.to_string(),
            values,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilitySettings {
    pub power: f64,
    pub detuning: f64,
    pub settle_time: f64,
    pub observe_time: f64,
    pub sample_interval: f64,
    pub solver_dt: f64,
}

impl StabilitySettings {
    pub fn options(&self) -> StabilityOptions {
        StabilityOptions {
            settle_time: self.settle_time,
            observe_time: self.observe_time,
            sample_interval: self.sample_interval,
            scheme: crate::mrr::Scheme::Exponential,
            dt: self.solver_dt,
        }
    }
}

/// Ridge readout shared by the classification and regression tasks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReadoutSettings {
    pub lambdas: Vec<f64>,
    pub folds: usize,
    pub washout: usize,
    pub train: usize,
    pub test: usize,
}

impl ReadoutSettings {
    pub fn len(&self) -> usize {
        self.washout + self.train + self.test
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogicSettings {
    pub op: LogicOp,
    pub n1: Vec<usize>,
    pub n2: usize,
    pub n_virtual: usize,
    /// Rate at which the detected drop power is acquired.
    pub sample_rate: f64,
    pub detector_bandwidth: f64,
    /// Detector noise standard deviation relative to the mean detected power.
    pub noise: f64,
    pub power: f64,
    pub detuning: f64,
    pub bitrate: f64,
    pub solver_dt: f64,
    pub readout: ReadoutSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XorSettings {
    pub n_virtual: usize,
    pub tau_fc: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub alpha: f64,
    pub u0: f64,
    /// Probe detection noise, absolute in probe units.
    pub noise: f64,
    pub bitrate: f64,
    pub readout: ReadoutSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeedbackSettings {
    pub n_virtual: usize,
    pub bit_width: f64,
    pub feedback_delay: f64,
    pub power: f64,
    pub detuning: f64,
    pub eta: f64,
    pub phase: f64,
    pub mask_seed: u64,
    pub solver_dt: f64,
    /// Ridge penalty for memory capacity; task readouts use `readout`.
    pub lambda: f64,
    pub l_max: usize,
    pub readout: ReadoutSettings,
    /// Mackey-Glass integration steps between consecutive inputs.
    pub stride: usize,
    /// Spike depth as a fraction of the loaded linewidth.
    pub spike_depth: f64,
    pub spike_window_bits: usize,
    /// Spikes per input above which a cell counts as self-pulsing.
    pub spike_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IrisSettings {
    pub data: Option<PathBuf>,
    pub n_virtual: usize,
    pub tau_fc: f64,
    pub node_spacing: f64,
    pub alpha: f64,
    pub u0: f64,
    pub lambdas: Vec<f64>,
    pub folds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Settings {
    Stability(StabilitySettings),
    Logic(LogicSettings),
    Xor(XorSettings),
    Feedback(FeedbackSettings),
    Dcp(EqualizerConfig),
    Iris(IrisSettings),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub preset: String,
    /// Ring parameters after applying `[device]` overrides.
    pub device: MrrParams,
    pub seed: u64,
    pub output: PathBuf,
    pub axes: Vec<Axis>,
    pub settings: Settings,
    /// SHA-256 of the config text.
    #[serde(skip)]
    pub source_hash: String,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        if let Some(dir) = path.parent() {
            if cfg.output.is_relative() {
                cfg.output = dir.join(&cfg.output);
            }
            if let Settings::Iris(IrisSettings { data: Some(p), .. }) = &mut cfg.settings {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    /// Parse and validate a config document. All field problems are
    /// reported together.
    pub fn parse(text: &str) -> Result<Self> {
        let doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(vec![format!("<document>: {e}")]))?;
        let mut errors = Vec::new();
        let mut top = Fields::new(&doc, "", &mut errors);

        let kind_name = top.string("kind", None);
        let kind = match kind_name.as_deref().map(|n| (n, ExperimentKind::by_name(n))) {
            Some((_, Some(k))) => Some(k),
            Some((n, None)) => {
                let names: Vec<_> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
                top.fail("kind", format!("unknown kind `{n}`; expected one of {names:?}"));
                None
            }
            None => None,
        };
        let seed = top.seed("seed");
        let output = top
            .string("output", Some(kind.map_or("out", |k| k.name())))
            .unwrap_or_default();
        let preset_name = top.string("preset", kind.map(|k| k.default_preset().name()));
        let preset = preset_name.as_deref().and_then(|n| match Preset::by_name(n) {
            Some(p) => Some(p),
            None => {
                let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                top.fail("preset", format!("unknown preset `{n}`; expected one of {names:?}"));
                None
            }
        });
        let device_table = top.table("device");
        let axis_tables = top.table_array("axis");
        let settings_table = top.table("settings");
        top.finish();

        let mut device = preset.map(|p| p.params());
        if let (Some(dev), Some(table)) = (device.as_mut(), device_table.as_ref()) {
            if let Err(e) = dev.apply_toml(table) {
                errors.push(format!("device.{}", strip_field_prefix(&e)));
            }
        }

        let mut axes = Vec::new();
        for (i, t) in axis_tables.iter().enumerate() {
            if let Some(a) = parse_axis(t, i, kind, &mut errors) {
                if axes.iter().any(|b: &Axis| b.name == a.name) {
                    errors.push(format!("axis[{i}].name: axis `{}` appears twice", a.name));
                } else {
                    axes.push(a);
                }
            }
        }
        if axes.iter().any(|a| a.name == "detuning")
            && axes.iter().any(|a| a.name == "wavelength_offset")
        {
            errors.push("axis: give either `detuning` or `wavelength_offset`, not both".into());
        }

        let empty = toml::Table::new();
        let settings = match (kind, device.as_ref(), seed) {
            (Some(k), Some(dev), Some(seed)) => {
                let table = settings_table.as_ref().unwrap_or(&empty);
                let mut f = Fields::new(table, "settings.", &mut errors);
                let s = parse_settings(k, dev, seed, &mut f);
                f.finish();
                Some(s)
            }
            _ => None,
        };

        if !errors.is_empty() {
            return Err(Error::InvalidConfig(errors));
        }
        Ok(Self {
            kind: kind.unwrap(),
            preset: preset.unwrap().name().to_string(),
            device: device.unwrap(),
            seed: seed.unwrap(),
            output: PathBuf::from(output),
            axes,
            settings: settings.unwrap(),
            source_hash: hex_digest(text.as_bytes()),
        })
    }

    pub fn n_cells(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    /// Axis values of cell `index`; the last axis varies fastest.
    pub fn cell_point(&self, index: usize) -> Vec<f64> {
        let mut rest = index;
        let mut point = vec![0.0; self.axes.len()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            let n = axis.values.len();
            point[k] = axis.values[rest % n];
            rest /= n;
        }
        point
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn strip_field_prefix(e: &Error) -> String {
    match e {
        Error::Config { field, message } => format!("{field}: {message}"),
        other => format!("<params>: {other}"),
    }
}

fn parse_axis(
    t: &toml::Table,
    i: usize,
    kind: Option<ExperimentKind>,
    errors: &mut Vec<String>,
) -> Option<Axis> {
    let section = format!("axis[{i}].");
    let mut f = Fields::new(t, &section, errors);
    let name = f.string("name", None)?;
    let Some((dim, _)) = axis_unit(&name) else {
        f.fail("name", format!("unknown axis `{name}`"));
        return None;
    };
    if let Some(k) = kind {
        if !k.allowed_axes().contains(&name.as_str()) {
            f.fail(
                "name",
                format!("axis `{name}` does not apply to {}; allowed: {:?}", k.name(), k.allowed_axes()),
            );
            return None;
        }
    }
    let values = if t.contains_key("values") {
        f.quantities("values", dim, None)
    } else {
        let lo = f.quantity("min", dim, None);
        let hi = f.quantity("max", dim, None);
        let steps = f.count("steps", None);
        let scale = f.string("scale", Some("linear")).unwrap_or_default();
        match (lo, hi, steps) {
            (Some(lo), Some(hi), Some(n)) => match scale.as_str() {
                "linear" => Some(linear_grid(lo, hi, n)),
                "log" if lo > 0.0 && hi > 0.0 => Some(log_grid(lo, hi, n)),
                "log" => {
                    f.fail("scale", "log spacing needs positive min and max");
                    None
                }
                other => {
                    f.fail("scale", format!("expected `linear` or `log`, got `{other}`"));
                    None
                }
            },
            _ => None,
        }
    };
    f.finish();
    let values = values?;
    if name == "n_virtual" && values.iter().any(|v| !(v.fract() == 0.0 && *v >= 1.0)) {
        errors.push(format!("{section}values: n_virtual values must be positive integers"));
        return None;
    }
    if values.iter().any(|v| !v.is_finite()) {
        errors.push(format!("{section}values: values must be finite"));
        return None;
    }
    Axis::new(&name, values).ok()
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn default_lambdas() -> Vec<f64> {
    log_grid(1e-6, 1e2, 9)
}

fn parse_readout(f: &mut Fields, washout: usize, train: usize, test: usize) -> ReadoutSettings {
    let r = ReadoutSettings {
        lambdas: f.positive_list("lambdas", default_lambdas()),
        folds: f.count("folds", Some(5)).unwrap_or(5),
        washout: f.count_or_zero("washout", washout),
        train: f.count("train", Some(train)).unwrap_or(train),
        test: f.count("test", Some(test)).unwrap_or(test),
    };
    if r.folds < 2 {
        f.fail("folds", "need at least 2 folds");
    } else if r.train < r.folds {
        f.fail("train", "fewer training samples than folds");
    }
    r
}

fn parse_settings(kind: ExperimentKind, dev: &MrrParams, seed: u64, f: &mut Fields) -> Settings {
    match kind {
        ExperimentKind::StabilityMap => {
            let d = StabilityOptions::for_params(dev);
            Settings::Stability(StabilitySettings {
                power: f.quantity("power", Dimension::Power, Some(10e-3)).unwrap_or(0.0),
                detuning: f.detuning(dev, 0.0),
                settle_time: f.positive("settle_time", Dimension::Time, d.settle_time),
                observe_time: f.positive("observe_time", Dimension::Time, d.observe_time),
                sample_interval: f.positive("sample_interval", Dimension::Time, d.sample_interval),
                solver_dt: f.positive("solver_dt", Dimension::Time, d.dt),
            })
        }
        ExperimentKind::LogicTask => {
            let op = f.string("op", Some("and")).unwrap_or_default();
            let op = op.parse::<LogicOp>().unwrap_or_else(|e| {
                f.fail("op", e.to_string());
                LogicOp::And
            });
            let s = LogicSettings {
                op,
                n1: f.count_list("n1", vec![1]),
                n2: f.count("n2", Some(1)).unwrap_or(1),
                n_virtual: f.count("n_virtual", Some(5)).unwrap_or(1),
                sample_rate: f.positive("sample_rate", Dimension::Frequency, 20e9),
                detector_bandwidth: f.positive("detector_bandwidth", Dimension::Frequency, 20e9),
                noise: f.non_negative("noise", 0.01),
                power: f.positive("power", Dimension::Power, 10e-3),
                detuning: f.detuning(dev, 0.0),
                bitrate: f.positive("bitrate", Dimension::Bitrate, 100e6),
                solver_dt: f.positive("solver_dt", Dimension::Time, dev.photon_lifetime()),
                readout: parse_readout(f, 20, 500, 500),
            };
            Settings::Logic(s)
        }
        ExperimentKind::XorRc => {
            let tau = f.positive("tau_fc", Dimension::Time, dev.tau_fc);
            Settings::Xor(XorSettings {
                n_virtual: f.count("n_virtual", Some(3)).unwrap_or(1),
                tau_fc: tau,
                c0: f.number("c0", 1.0),
                c1: f.number("c1", -1.0 / tau),
                c2: f.number("c2", -1.0 / tau),
                alpha: f.positive("alpha", Dimension::Dimensionless, 1.0),
                u0: f.number("u0", 0.0),
                noise: f.non_negative("noise", 0.002),
                bitrate: f.positive("bitrate", Dimension::Bitrate, 1.0 / (2.0 * tau)),
                readout: parse_readout(f, 50, 1000, 1000),
            })
        }
        ExperimentKind::Narma10 | ExperimentKind::MackeyGlass | ExperimentKind::MemoryCapacity => {
            let (power, offset, train, test) = match kind {
                ExperimentKind::MackeyGlass => (5e-3, -30e-12, 2000, 1000),
                ExperimentKind::MemoryCapacity => (1e-4, -10e-12, 1450, 1450),
                _ => (1e-4, -10e-12, 2000, 1000),
            };
            let s = FeedbackSettings {
                n_virtual: f.count("n_virtual", Some(25)).unwrap_or(1),
                bit_width: f.positive("bit_width", Dimension::Time, 1e-9),
                feedback_delay: f.non_negative_q("feedback_delay", Dimension::Time, 1e-9),
                power: f.positive("power", Dimension::Power, power),
                detuning: f.detuning(dev, dev.detuning_from_wavelength(offset)),
                eta: f.non_negative("eta", 0.0),
                phase: f.quantity("phase", Dimension::Angle, Some(0.0)).unwrap_or(0.0),
                mask_seed: f.seed_or("mask_seed", seed),
                solver_dt: f.positive("solver_dt", Dimension::Time, 5e-12),
                lambda: f.non_negative("lambda", 1e-4),
                l_max: f.count("l_max", Some(19)).unwrap_or(1),
                readout: parse_readout(f, 100, train, test),
                stride: f.count("stride", Some(10)).unwrap_or(1),
                spike_depth: f.positive("spike_depth", Dimension::Dimensionless, 0.25),
                spike_window_bits: f.count("spike_window_bits", Some(5)).unwrap_or(1),
                spike_rate: f.non_negative("spike_rate", 0.002),
            };
            if s.eta > 1.0 {
                f.fail("eta", "must lie in [0, 1]");
            }
            Settings::Feedback(s)
        }
        ExperimentKind::DcpEqualize => {
            let d = EqualizerConfig::default();
            let length = f.non_negative_q("fiber_length", Dimension::Length, d.fiber.length);
            let dispersion = f.quantity("dispersion", Dimension::Dispersion, Some(d.fiber.dispersion));
            let wavelength = f.positive("center_wavelength", Dimension::Length, d.fiber.center_wavelength);
            let cfg = EqualizerConfig {
                bitrate: f.positive("bitrate", Dimension::Bitrate, d.bitrate),
                prbs_order: f.count("prbs_order", Some(d.prbs_order as usize)).unwrap_or(10) as u32,
                samples_per_bit: f.count("samples_per_bit", Some(d.samples_per_bit)).unwrap_or(1),
                p_high: f.positive("p_high", Dimension::Power, d.p_high),
                p_low: f.non_negative_q("p_low", Dimension::Power, d.p_low),
                fiber: FiberChannel {
                    length,
                    dispersion: dispersion.unwrap_or(d.fiber.dispersion),
                    center_wavelength: wavelength,
                },
                base_delay: f.positive("base_delay", Dimension::Time, d.base_delay),
                n_channels: f.count("n_channels", Some(d.n_channels)).unwrap_or(1),
                detector_bandwidth: f.positive("detector_bandwidth", Dimension::Frequency, d.detector_bandwidth),
                histogram_bins: f.count("histogram_bins", Some(d.histogram_bins)).unwrap_or(1),
                swarm_size: f.count("swarm_size", Some(d.swarm_size)).unwrap_or(1),
                iterations: f.count("iterations", Some(d.iterations)).unwrap_or(1),
                seed,
            };
            if !(2..=31).contains(&cfg.prbs_order) {
                f.fail("prbs_order", "must lie in 2..=31");
            }
            Settings::Dcp(cfg)
        }
        ExperimentKind::Iris => {
            let tau = f.positive("tau_fc", Dimension::Time, dev.tau_fc);
            Settings::Iris(IrisSettings {
                data: f.opt_string("data").map(PathBuf::from),
                n_virtual: f.count("n_virtual", Some(30)).unwrap_or(1),
                tau_fc: tau,
                node_spacing: f.positive("node_spacing", Dimension::Time, tau),
                alpha: f.positive("alpha", Dimension::Dimensionless, 1.0),
                u0: f.number("u0", 0.0),
                lambdas: f.positive_list("lambdas", default_lambdas()),
                folds: f.count("folds", Some(5)).unwrap_or(5),
            })
        }
    }
}

/// Typed access to one TOML table; problems are appended to `errors`
/// with the table's prefix and unread keys are reported by `finish`.
struct Fields<'a> {
    table: &'a toml::Table,
    prefix: String,
    used: BTreeSet<String>,
    errors: &'a mut Vec<String>,
}

impl<'a> Fields<'a> {
    fn new(table: &'a toml::Table, prefix: &str, errors: &'a mut Vec<String>) -> Self {
        Self {
            table,
            prefix: prefix.to_string(),
            used: BTreeSet::new(),
            errors,
        }
    }

    fn fail(&mut self, key: &str, msg: impl std::fmt::Display) {
        self.errors.push(format!("{}{key}: {msg}", self.prefix));
    }

    fn get(&mut self, key: &str) -> Option<&'a toml::Value> {
        self.used.insert(key.to_string());
        self.table.get(key)
    }

    fn finish(self) {
        for key in self.table.keys() {
            if !self.used.contains(key) {
                self.errors.push(format!("{}{key}: unknown field", self.prefix));
            }
        }
    }

    fn string(&mut self, key: &str, default: Option<&str>) -> Option<String> {
        match self.get(key) {
            Some(toml::Value::String(s)) => Some(s.clone()),
            Some(_) => {
                self.fail(key, "expected a string");
                None
            }
            None if default.is_none() => {
                self.fail(key, "missing required field");
                None
            }
            None => default.map(str::to_string),
        }
    }

    fn opt_string(&mut self, key: &str) -> Option<String> {
        match self.get(key) {
            Some(toml::Value::String(s)) => Some(s.clone()),
            Some(_) => {
                self.fail(key, "expected a string");
                None
            }
            None => None,
        }
    }

    fn table(&mut self, key: &str) -> Option<toml::Table> {
        match self.get(key) {
            Some(toml::Value::Table(t)) => Some(t.clone()),
            Some(_) => {
                self.fail(key, "expected a table");
                None
            }
            None => None,
        }
    }

    fn table_array(&mut self, key: &str) -> Vec<toml::Table> {
        match self.get(key) {
            Some(toml::Value::Array(items)) => {
                let mut out = Vec::new();
                for (i, v) in items.iter().enumerate() {
                    match v {
                        toml::Value::Table(t) => out.push(t.clone()),
                        _ => self.fail(&format!("{key}[{i}]"), "expected a table"),
                    }
                }
                out
            }
            Some(_) => {
                self.fail(key, "expected an array of tables ([[axis]])");
                Vec::new()
            }
            None => Vec::new(),
        }
    }

    fn value_to_f64(&mut self, key: &str, v: &toml::Value, dim: Dimension) -> Option<f64> {
        let r = match v {
            toml::Value::Float(x) => Ok(*x),
            toml::Value::Integer(i) => Ok(*i as f64),
            toml::Value::String(s) => parse_quantity(s, dim).map_err(|e| e.to_string()),
            _ => Err("expected a number or unit-suffixed string".to_string()),
        };
        match r {
            Ok(x) if x.is_finite() => Some(x),
            Ok(_) => {
                self.fail(key, "value must be finite");
                None
            }
            Err(e) => {
                self.fail(key, e);
                None
            }
        }
    }

    fn quantity(&mut self, key: &str, dim: Dimension, default: Option<f64>) -> Option<f64> {
        match self.get(key) {
            Some(v) => self.value_to_f64(key, v, dim),
            None if default.is_none() => {
                self.fail(key, "missing required field");
                None
            }
            None => default,
        }
    }

    fn number(&mut self, key: &str, default: f64) -> f64 {
        self.quantity(key, Dimension::Dimensionless, Some(default)).unwrap_or(default)
    }

    fn positive(&mut self, key: &str, dim: Dimension, default: f64) -> f64 {
        match self.quantity(key, dim, Some(default)) {
            Some(v) if v > 0.0 => v,
            Some(v) => {
                self.fail(key, format!("must be positive, got {v}"));
                default
            }
            None => default,
        }
    }

    fn non_negative_q(&mut self, key: &str, dim: Dimension, default: f64) -> f64 {
        match self.quantity(key, dim, Some(default)) {
            Some(v) if v >= 0.0 => v,
            Some(v) => {
                self.fail(key, format!("must be non-negative, got {v}"));
                default
            }
            None => default,
        }
    }

    fn non_negative(&mut self, key: &str, default: f64) -> f64 {
        self.non_negative_q(key, Dimension::Dimensionless, default)
    }

    fn quantities(&mut self, key: &str, dim: Dimension, default: Option<Vec<f64>>) -> Option<Vec<f64>> {
        match self.get(key) {
            Some(toml::Value::Array(items)) if !items.is_empty() => {
                let vals: Vec<Option<f64>> = items
                    .iter()
                    .enumerate()
                    .map(|(i, v)| self.value_to_f64(&format!("{key}[{i}]"), v, dim))
                    .collect();
                vals.into_iter().collect()
            }
            Some(toml::Value::Array(_)) => {
                self.fail(key, "list is empty");
                None
            }
            Some(v) => self.value_to_f64(key, v, dim).map(|x| vec![x]),
            None if default.is_none() => {
                self.fail(key, "missing required field");
                None
            }
            None => default,
        }
    }

    fn positive_list(&mut self, key: &str, default: Vec<f64>) -> Vec<f64> {
        let v = self
            .quantities(key, Dimension::Dimensionless, Some(default.clone()))
            .unwrap_or(default.clone());
        if v.iter().any(|x| !(*x >= 0.0)) {
            self.fail(key, "values must be non-negative");
            return default;
        }
        v
    }

    fn integer(&mut self, key: &str, v: &toml::Value, min: i64) -> Option<usize> {
        match v {
            toml::Value::Integer(i) if *i >= min => Some(*i as usize),
            _ => {
                self.fail(key, format!("expected an integer >= {min}"));
                None
            }
        }
    }

    fn count(&mut self, key: &str, default: Option<usize>) -> Option<usize> {
        match self.get(key) {
            Some(v) => self.integer(key, v, 1),
            None if default.is_none() => {
                self.fail(key, "missing required field");
                None
            }
            None => default,
        }
    }

    fn count_or_zero(&mut self, key: &str, default: usize) -> usize {
        match self.get(key) {
            Some(v) => self.integer(key, v, 0).unwrap_or(default),
            None => default,
        }
    }

    fn count_list(&mut self, key: &str, default: Vec<usize>) -> Vec<usize> {
        match self.get(key) {
            Some(toml::Value::Array(items)) if !items.is_empty() => {
                let vals: Vec<Option<usize>> = items
                    .iter()
                    .enumerate()
                    .map(|(i, v)| self.integer(&format!("{key}[{i}]"), v, 0))
                    .collect();
                vals.into_iter().collect::<Option<Vec<_>>>().unwrap_or(default)
            }
            Some(v) => self.integer(key, v, 0).map_or(default, |n| vec![n]),
            None => default,
        }
    }

    fn seed(&mut self, key: &str) -> Option<u64> {
        match self.get(key) {
            Some(toml::Value::Integer(i)) if *i >= 0 => Some(*i as u64),
            Some(_) => {
                self.fail(key, "expected a non-negative integer");
                None
            }
            None => {
                self.fail(key, "missing required field (runs must be seeded)");
                None
            }
        }
    }

    fn seed_or(&mut self, key: &str, default: u64) -> u64 {
        if self.table.contains_key(key) {
            self.seed(key).unwrap_or(default)
        } else {
            self.used.insert(key.to_string());
            default
        }
    }

    /// Fixed laser detuning from `detuning` (Hz) or `wavelength_offset`.
    fn detuning(&mut self, dev: &MrrParams, default: f64) -> f64 {
        let hz = self.quantity("detuning", Dimension::Frequency, Some(f64::NAN));
        let dl = self.quantity("wavelength_offset", Dimension::Length, Some(f64::NAN));
        match (hz, dl) {
            (Some(h), Some(l)) if !h.is_nan() && !l.is_nan() => {
                self.fail("detuning", "give either detuning or wavelength_offset, not both");
                default
            }
            (Some(h), _) if !h.is_nan() => h,
            (_, Some(l)) if !l.is_nan() => dev.detuning_from_wavelength(l),
            _ => default,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LOGIC: &str = r#"
kind = "logic_task"
preset = "logic"
seed = 3
output = "out"

[device]
tau_fc = "4.5ns"

[[axis]]
name = "power"
min = "1mW"
max = "10mW"
steps = 3
scale = "log"

[[axis]]
name = "detuning"
values = ["-20GHz", "0GHz", "20GHz"]

[settings]
op = "and"
n1 = [1, 2]
noise = 0.01
"#;

    #[test]
    fn parses_units_and_grids() {
        let cfg = ExperimentConfig::parse(LOGIC).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::LogicTask);
        assert_eq!(cfg.n_cells(), 9);
        assert!((cfg.axes[0].values[1] - 10f64.powf(-2.5)).abs() < 1e-15);
        assert_eq!(cfg.axes[1].values, vec![-20e9, 0.0, 20e9]);
        assert_eq!(cfg.device.tau_fc, 4.5e-9);
        let Settings::Logic(s) = &cfg.settings else { panic!() };
        assert_eq!(s.n1, vec![1, 2]);
        assert_eq!(cfg.cell_point(5), vec![cfg.axes[0].values[1], 20e9]);
    }

    #[test]
    fn collects_every_field_error() {
        let text = r#"
kind = "logic_task"
preset = "nonexistent"
[[axis]]
name = "eta"
values = [0.5]
[settings]
bogus = 1
"#;
        let Err(Error::InvalidConfig(errs)) = ExperimentConfig::parse(text) else {
            panic!("expected config errors")
        };
        let joined = errs.join("\n");
        assert!(joined.contains("seed: missing"), "{joined}");
        assert!(joined.contains("preset: unknown preset"), "{joined}");
        assert!(joined.contains("axis[0].name"), "{joined}");
    }

    #[test]
    fn unknown_setting_is_named() {
        let text = "kind = \"narma10\"\nseed = 1\n[settings]\nbit_widht = \"1ns\"\n";
        let err = ExperimentConfig::parse(text).unwrap_err().to_string();
        assert!(err.contains("settings.bit_widht: unknown field"), "{err}");
    }

    #[test]
    fn wrong_unit_is_reported() {
        let text = "kind = \"stability_map\"\nseed = 1\n[[axis]]\nname = \"power\"\nvalues = [\"3ns\"]\n";
        let err = ExperimentConfig::parse(text).unwrap_err().to_string();
        assert!(err.contains("axis[0].values[0]"), "{err}");
    }

    #[test]
    fn wavelength_offset_becomes_detuning() {
        let text = "kind = \"narma10\"\nseed = 1\n[settings]\nwavelength_offset = \"-10pm\"\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        let Settings::Feedback(s) = &cfg.settings else { panic!() };
        assert!((s.detuning - cfg.device.detuning_from_wavelength(-10e-12)).abs() < 1.0);
        assert!(s.detuning > 0.0);
    }

    #[test]
    fn no_axes_means_one_cell() {
        let cfg = ExperimentConfig::parse("kind = \"iris\"\nseed = 0\n").unwrap();
        assert_eq!(cfg.n_cells(), 1);
        assert!(cfg.cell_point(0).is_empty());
    }

    #[test]
    fn hash_tracks_text() {
        let a = ExperimentConfig::parse(LOGIC).unwrap();
        let b = ExperimentConfig::parse(&LOGIC.replace("seed = 3", "seed = 4")).unwrap();
        assert_ne!(a.source_hash, b.source_hash);
        assert_eq!(a.source_hash.len(), 64);
    }
}
