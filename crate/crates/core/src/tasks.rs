//! Benchmark targets and datasets: delayed logic, NARMA-10, Mackey-Glass
//! and Iris.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::BitSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogicOp {
    And,
    Or,
    Xor,
}

impl LogicOp {
    pub fn apply(self, a: u8, b: u8) -> u8 {
        match self {
            LogicOp::And => a & b,
            LogicOp::Or => a | b,
            LogicOp::Xor => a ^ b,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LogicOp::And => "and",
            LogicOp::Or => "or",
            LogicOp::Xor => "xor",
        }
    }
}

impl std::str::FromStr for LogicOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "and" => Ok(LogicOp::And),
            "or" => Ok(LogicOp::Or),
            "xor" => Ok(LogicOp::Xor),
            _ => Err(Error::invalid(format!("unknown logic operation `{s}`"))),
        }
    }
}

/// Logic operation between the current bit and the bit `n1` places back;
/// the readout sees `n2` bits of virtual nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicTaskSpec {
    pub op: LogicOp,
    pub n1: usize,
    pub n2: usize,
}

impl LogicTaskSpec {
    pub fn new(op: LogicOp, n1: usize, n2: usize) -> Result<Self> {
        if n2 == 0 {
            return Err(Error::invalid("n2 must be >= 1"));
        }
        Ok(Self { op, n1, n2 })
    }
}

/// `target[j] = op(x[j], x[j − n1])`, wrapping around the periodic input.
pub fn delayed_logic_target(bits: &BitSequence, spec: &LogicTaskSpec) -> BitSequence {
    let x = bits.bits();
    let m = x.len();
    let out = (0..m)
        .map(|j| spec.op.apply(x[j], x[(j + m - spec.n1 % m) % m]))
        .collect();
    BitSequence::new(out, bits.bitrate()).expect("logic of valid bits is valid")
}

pub fn one_bit_delayed_xor_target(bits: &BitSequence) -> BitSequence {
    delayed_logic_target(
        bits,
        &LogicTaskSpec {
            op: LogicOp::Xor,
            n1: 1,
            n2: 1,
        },
    )
}

/// Uniform `[0, 0.5)` inputs for NARMA-10.
pub fn narma10_inputs(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| 0.5 * rng.gen::<f64>()).collect()
}

/// Tenth-order NARMA from zero history; element `n` of the result is
/// `y(n + 1)`.
pub fn narma10(u: &[f64]) -> Result<Vec<f64>> {
    let mut y = vec![0.0; u.len() + 1];
    for n in 0..u.len() {
        let window: f64 = (0..10).filter(|&i| i <= n).map(|i| y[n - i]).sum();
        let delayed = if n >= 9 { u[n - 9] } else { 0.0 };
        let next = 0.3 * y[n] + 0.05 * y[n] * window + 1.5 * delayed * u[n] + 0.1;
        if !(next.abs() <= 10.0) {
            return Err(Error::Divergence {
                time: (n + 1) as f64,
            });
        }
        y[n + 1] = next;
    }
    y.remove(0);
    Ok(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MackeyGlassParams {
    pub beta: f64,
    pub gamma: f64,
    pub n_exp: f64,
    pub tau_delay: f64,
    pub dt: f64,
    pub x0: f64,
}

impl Default for MackeyGlassParams {
    /// The weakly chaotic τ = 17 regime.
    fn default() -> Self {
        Self {
            beta: 0.2,
            gamma: 0.1,
            n_exp: 10.0,
            tau_delay: 17.0,
            dt: 0.1,
            x0: 1.2,
        }
    }
}

/// `length` samples, spaced `dt`, of `dx/dt = βx(t−τ)/(1 + x(t−τ)^n) − γx`
/// with `x(t) = x0` for `t ≤ 0`. Sample 0 is `x0`.
///
/// RK4; the delayed value at half steps is taken from a cubic Hermite
/// interpolant of the stored history, keeping fourth-order accuracy.
pub fn mackey_glass(p: &MackeyGlassParams, length: usize) -> Result<Vec<f64>> {
    if !(p.dt > 0.0) || !(p.x0 > 0.0) || p.tau_delay < 0.0 {
        return Err(Error::invalid("need dt > 0, x0 > 0 and tau >= 0"));
    }
    let lag_f = p.tau_delay / p.dt;
    let lag = lag_f.round() as usize;
    if (lag_f - lag as f64).abs() > 1e-9 * lag_f.max(1.0) {
        return Err(Error::invalid(format!(
            "tau = {} is not a multiple of dt = {}",
            p.tau_delay, p.dt
        )));
    }
    let feed = |xd: f64| p.beta * xd / (1.0 + xd.powf(p.n_exp));
    let h = p.dt;
    let mut x = Vec::with_capacity(length);
    // Derivative of x at each stored sample, for the interpolant.
    let mut dx = Vec::with_capacity(length);
    let mut cur = p.x0;
    for k in 0..length {
        x.push(cur);
        if k + 1 == length {
            break;
        }
        let hist = |i: isize| -> (f64, f64) {
            if i < 0 {
                (p.x0, 0.0)
            } else {
                (x[i as usize], dx[i as usize])
            }
        };
        let i0 = k as isize - lag as isize;
        if lag == 0 {
            // Undelayed: the feedback follows the current stage value.
            let f = |v: f64| feed(v) - p.gamma * v;
            let k1 = f(cur);
            dx.push(k1);
            let k2 = f(cur + 0.5 * h * k1);
            let k3 = f(cur + 0.5 * h * k2);
            let k4 = f(cur + h * k3);
            cur += h / 6.0 * (k1 + 2.0 * (k2 + k3) + k4);
        } else {
            let (a, fa) = hist(i0);
            let (b, fb) = if i0 + 1 == k as isize {
                (cur, feed(a) - p.gamma * cur)
            } else {
                hist(i0 + 1)
            };
            let mid = 0.5 * (a + b) + h * (fa - fb) / 8.0;
            let f = |v: f64, xd: f64| feed(xd) - p.gamma * v;
            let k1 = f(cur, a);
            dx.push(k1);
            let k2 = f(cur + 0.5 * h * k1, mid);
            let k3 = f(cur + 0.5 * h * k2, mid);
            let k4 = f(cur + h * k3, b);
            cur += h / 6.0 * (k1 + 2.0 * (k2 + k3) + k4);
        }
        if !cur.is_finite() {
            return Err(Error::Divergence {
                time: (k + 1) as f64 * h,
            });
        }
    }
    Ok(x)
}

/// Input/target pairs of a one-dimensional task.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

impl Dataset {
    pub fn new(input: Vec<f64>, target: Vec<f64>) -> Result<Self> {
        if input.len() != target.len() {
            return Err(Error::invalid("input and target lengths differ"));
        }
        Ok(Self { input, target })
    }

    /// NARMA-10 on seeded uniform inputs.
    pub fn narma10(len: usize, seed: u64) -> Result<Self> {
        let u = narma10_inputs(len, seed);
        let y = narma10(&u)?;
        Self::new(u, y)
    }

    /// One-step-ahead prediction of a Mackey-Glass series sampled every
    /// `stride` integration steps.
    pub fn mackey_glass(p: &MackeyGlassParams, len: usize, stride: usize) -> Result<Self> {
        let stride = stride.max(1);
        let raw = mackey_glass(p, (len + 1) * stride)?;
        let s: Vec<f64> = raw.iter().step_by(stride).copied().collect();
        Self::new(s[..len].to_vec(), s[1..=len].to_vec())
    }

    pub fn len(&self) -> usize {
        self.input.len()
    }

    pub fn is_empty(&self) -> bool {
        self.input.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,input,target")?;
        for (n, (u, y)) in self.input.iter().zip(&self.target).enumerate() {
            writeln!(out, "{n},{u:e},{y:e}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let (mut u, mut y) = (Vec::new(), Vec::new());
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let parse_err = |m: String| Error::Parse {
                line: i + 1,
                message: m,
            };
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 3 {
                return Err(parse_err(format!(
                    "expected 3 columns, found {}",
                    cols.len()
                )));
            }
            u.push(
                cols[1]
                    .parse::<f64>()
                    .map_err(|e| parse_err(e.to_string()))?,
            );
            y.push(
                cols[2]
                    .parse::<f64>()
                    .map_err(|e| parse_err(e.to_string()))?,
            );
        }
        Self::new(u, y)
    }
}

/// Min-max scaled features (4 × M), class indices and class names.
#[derive(Debug, Clone, PartialEq)]
pub struct IrisData {
    pub features: DMatrix<f64>,
    pub labels: Vec<usize>,
    pub classes: Vec<String>,
}

impl IrisData {
    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn one_hot(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.classes.len(), self.labels.len(), |c, j| {
            (self.labels[j] == c) as u8 as f64
        })
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.classes.len()];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }

    /// Per-class shuffle with `seed`, first half of each class to training.
    pub fn stratified_split(&self, seed: u64) -> (Vec<usize>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for c in 0..self.classes.len() {
            let mut idx: Vec<usize> = (0..self.labels.len())
                .filter(|&j| self.labels[j] == c)
                .collect();
            idx.shuffle(&mut rng);
            let half = idx.len() / 2;
            train.extend_from_slice(&idx[..half]);
            test.extend_from_slice(&idx[half..]);
        }
        train.sort_unstable();
        test.sort_unstable();
        (train, test)
    }
}

pub fn iris_load(path: impl AsRef<Path>) -> Result<IrisData> {
    let file = std::fs::File::open(path)?;
    iris_parse(std::io::BufReader::new(file))
}

/// Four numeric columns and a class name per line; blank lines skipped.
/// Class indices follow sorted class names.
pub fn iris_parse<R: BufRead>(input: R) -> Result<IrisData> {
    let mut rows: Vec<([f64; 4], String)> = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let err = |m: String| Error::Parse {
            line: i + 1,
            message: m,
        };
        if cols.len() != 5 {
            return Err(err(format!("expected 5 columns, found {}", cols.len())));
        }
        let mut f = [0.0; 4];
        for k in 0..4 {
            f[k] = cols[k]
                .parse::<f64>()
                .map_err(|e| err(format!("column {}: {e}", k + 1)))?;
            if !f[k].is_finite() {
                return Err(err(format!("column {} is not finite", k + 1)));
            }
        }
        if cols[4].is_empty() {
            return Err(err("missing class label".into()));
        }
        rows.push((f, cols[4].to_string()));
    }
    if rows.is_empty() {
        return Err(Error::invalid("no samples in Iris file"));
    }
    let mut names: BTreeMap<String, usize> = rows.iter().map(|(_, c)| (c.clone(), 0)).collect();
    for (i, v) in names.values_mut().enumerate() {
        *v = i;
    }
    let m = rows.len();
    let mut features = DMatrix::from_fn(4, m, |k, j| rows[j].0[k]);
    for mut r in features.row_iter_mut() {
        let lo = r.min();
        let hi = r.max();
        let span = if hi > lo { hi - lo } else { 1.0 };
        r.apply(|v| *v = (*v - lo) / span);
    }
    Ok(IrisData {
        features,
        labels: rows.iter().map(|(_, c)| names[c]).collect(),
        classes: names.into_keys().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::prbs;
    use proptest::prelude::*;

    fn seq(bits: &[u8]) -> BitSequence {
        BitSequence::new(bits.to_vec(), 1e9).unwrap()
    }

    #[test]
    fn logic_examples() {
        let x = seq(&[0, 1, 1, 0]);
        let spec = LogicTaskSpec::new(LogicOp::Xor, 1, 1).unwrap();
        assert_eq!(delayed_logic_target(&x, &spec).bits(), &[0, 1, 0, 1]);
        let and0 = LogicTaskSpec::new(LogicOp::And, 0, 1).unwrap();
        assert_eq!(delayed_logic_target(&x, &and0).bits(), x.bits());
        assert_eq!(
            one_bit_delayed_xor_target(&seq(&[0, 1, 0, 1, 0, 1])).ones(),
            6
        );
        assert_eq!(one_bit_delayed_xor_target(&seq(&[1; 7])).ones(), 0);
    }

    #[test]
    fn xor2_matches_bitwise_oracle() {
        let p = prbs(8, 0x5a).unwrap();
        let t = delayed_logic_target(&p, &LogicTaskSpec::new(LogicOp::Xor, 2, 1).unwrap());
        let b = p.bits();
        for j in 0..255 {
            assert_eq!(t.bits()[j], b[j] ^ b[(j + 253) % 255]);
        }
        let p10 = prbs(10, 1).unwrap();
        let t = one_bit_delayed_xor_target(&p10);
        for j in 1..1023 {
            assert_eq!(t.bits()[j], p10.bits()[j] ^ p10.bits()[j - 1]);
        }
    }

    proptest! {
        #[test]
        fn target_commutes_with_rotation(bits in proptest::collection::vec(0u8..2, 2..64), k in 0usize..64, n1 in 0usize..5) {
            let m = bits.len();
            let k = k % m;
            let mut rot = bits.clone();
            rot.rotate_right(k);
            for op in [LogicOp::And, LogicOp::Or, LogicOp::Xor] {
                let spec = LogicTaskSpec::new(op, n1, 1).unwrap();
                let mut a = delayed_logic_target(&seq(&bits), &spec).bits().to_vec();
                a.rotate_right(k);
                let b = delayed_logic_target(&seq(&rot), &spec);
                prop_assert_eq!(a.as_slice(), b.bits());
            }
        }
    }

    #[test]
    fn narma_zero_input() {
        let y = narma10(&vec![0.0; 2000]).unwrap();
        assert_eq!(y[0], 0.1);
        let fixed = 0.7 - 0.29f64.sqrt();
        assert!((y[1999] - fixed).abs() < 1e-6);
    }

    /// Direct transcription with explicit history buffers.
    fn narma_oracle(u: &[f64]) -> Vec<f64> {
        let mut hist = [0.0f64; 10];
        let mut uh = [0.0f64; 10];
        let mut out = Vec::new();
        for &un in u {
            uh.rotate_right(1);
            uh[0] = un;
            let s: f64 = hist.iter().sum();
            let next = 0.3 * hist[0] + 0.05 * hist[0] * s + 1.5 * uh[9] * uh[0] + 0.1;
            hist.rotate_right(1);
            hist[0] = next;
            out.push(next);
        }
        out
    }

    #[test]
    fn narma_matches_oracle() {
        let u = narma10_inputs(3000, 9);
        assert_eq!(narma10(&u).unwrap(), narma_oracle(&u));
    }

    #[test]
    fn narma_diverges_on_large_input() {
        assert!(matches!(
            narma10(&vec![2.0; 100]),
            Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn narma_order_is_ten() {
        // Pin y and perturb u(n − 11): y(n + 1) must not move.
        let mut u = narma10_inputs(40, 1);
        let y = narma10(&u).unwrap();
        let n = 30;
        u[n - 11] += 0.2;
        let mut hist: Vec<f64> = y[n - 10..n].to_vec();
        hist.reverse();
        let s: f64 = hist.iter().sum();
        let replay = 0.3 * hist[0] + 0.05 * hist[0] * s + 1.5 * u[n - 9] * u[n] + 0.1;
        assert_eq!(replay, y[n]);
    }

    #[test]
    fn mackey_glass_fixed_point() {
        let p = MackeyGlassParams {
            x0: 1.0,
            ..Default::default()
        };
        for tau in [0.0, 5.0, 17.0] {
            let x = mackey_glass(
                &MackeyGlassParams {
                    tau_delay: tau,
                    ..p
                },
                3000,
            )
            .unwrap();
            assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-12), "tau {tau}");
        }
    }

    #[test]
    fn mackey_glass_undelayed_equilibrium() {
        let p = MackeyGlassParams {
            tau_delay: 0.0,
            x0: 0.3,
            ..Default::default()
        };
        let x = mackey_glass(&p, 5000).unwrap();
        assert!((x[4999] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn mackey_glass_weak_chaos_is_bounded() {
        let x = mackey_glass(&MackeyGlassParams::default(), 50_000).unwrap();
        let tail = &x[5000..];
        let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo > 0.2 && hi < 1.5, "{lo} {hi}");
        assert!(hi - lo > 0.3);
    }

    #[test]
    fn mackey_glass_step_refinement() {
        let p = MackeyGlassParams::default();
        let a = mackey_glass(&p, 1001).unwrap();
        let b = mackey_glass(&MackeyGlassParams { dt: 0.05, ..p }, 2001).unwrap();
        for k in 0..1001 {
            assert!((a[k] - b[2 * k]).abs() < 1e-4 * b[2 * k].abs(), "{k}");
        }
        assert!(mackey_glass(
            &MackeyGlassParams {
                tau_delay: 17.05,
                ..p
            },
            10
        )
        .is_err());
    }

    #[test]
    fn dataset_csv_round_trip() {
        let d = Dataset::narma10(200, 4).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert_eq!(Dataset::read_csv(buf.as_slice()).unwrap(), d);
    }

    const IRIS: &str = include_str!("../data/iris.csv");

    #[test]
    fn iris_counts_and_scaling() {
        let d = iris_parse(IRIS.as_bytes()).unwrap();
        assert_eq!(d.n_samples(), 150);
        assert_eq!(d.class_counts(), vec![50, 50, 50]);
        for r in d.features.row_iter() {
            assert_eq!(r.min(), 0.0);
            assert_eq!(r.max(), 1.0);
        }
        let oh = d.one_hot();
        assert!(oh.column_iter().all(|c| c.sum() == 1.0));
        let (tr, te) = d.stratified_split(3);
        assert_eq!((tr.len(), te.len()), (75, 75));
        let c0 = tr.iter().filter(|&&j| d.labels[j] == 0).count();
        assert_eq!(c0, 25);
    }

    #[test]
    fn iris_order_independent() {
        let mut lines: Vec<&str> = IRIS.lines().filter(|l| !l.trim().is_empty()).collect();
        lines.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
        let d = iris_parse(lines.join("\n").as_bytes()).unwrap();
        assert_eq!(d.class_counts(), vec![50, 50, 50]);
    }

    #[test]
    fn iris_malformed_row_reports_line() {
        let text = "5.1,3.5,1.4,0.2,a\n4.9,x,1.4,0.2,a\n";
        match iris_parse(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
