//! Virtual-node feature matrices.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Readout features, one column per evaluated sample, with a label per row
/// recording where the feature came from (e.g. `b-1:v3` is node 3 of the
/// previous bit).
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrix {
    features: DMatrix<f64>,
    labels: Vec<String>,
}

impl StateMatrix {
    pub fn new(features: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != features.nrows() {
            return Err(Error::invalid(format!(
                "{} labels for {} feature rows",
                labels.len(),
                features.nrows()
            )));
        }
        if let Some(idx) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "feature {} of sample {} is not finite",
                idx % features.nrows(),
                idx / features.nrows()
            )));
        }
        Ok(Self { features, labels })
    }

    /// Labels `b0:v0 … b0:v{n-1}`.
    pub fn from_nodes(features: DMatrix<f64>) -> Result<Self> {
        let labels = (0..features.nrows()).map(|k| format!("b0:v{k}")).collect();
        Self::new(features, labels)
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_features(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.features.ncols()
    }

    /// Columns `range` as a new matrix.
    pub fn columns(&self, start: usize, len: usize) -> Self {
        Self {
            features: self.features.columns(start, len).into_owned(),
            labels: self.labels.clone(),
        }
    }

    /// Stack the rows of `other` below these.
    pub fn stack(&self, other: &StateMatrix) -> Result<Self> {
        if other.n_samples() != self.n_samples() {
            return Err(Error::invalid(
                "stacked matrices must have the same sample count",
            ));
        }
        let mut f = DMatrix::zeros(self.n_features() + other.n_features(), self.n_samples());
        f.rows_mut(0, self.n_features()).copy_from(&self.features);
        f.rows_mut(self.n_features(), other.n_features())
            .copy_from(&other.features);
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        Self::new(f, labels)
    }

    /// Per-row mean and standard deviation (population). Constant rows get
    /// a unit scale.
    pub fn row_stats(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.n_samples() as f64;
        self.features
            .row_iter()
            .map(|r| {
                let mean = r.sum() / m;
                let var = r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m;
                let sd = var.sqrt();
                (mean, if sd > 1e-300 { sd } else { 1.0 })
            })
            .unzip()
    }

    /// Apply `(x − mean) / scale` row-wise.
    pub fn normalized(&self, mean: &[f64], scale: &[f64]) -> Self {
        let mut f = self.features.clone();
        for (i, mut row) in f.row_iter_mut().enumerate() {
            row.apply(|v| *v = (*v - mean[i]) / scale[i]);
        }
        Self {
            features: f,
            labels: self.labels.clone(),
        }
    }

    /// Rows shifted to zero mean and unit variance.
    pub fn standardized(&self) -> Self {
        let (mean, sd) = self.row_stats();
        self.normalized(&mean, &sd)
    }

    /// One sample per line, labels as the header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.labels.join(","))?;
        for col in self.features.column_iter() {
            let row: Vec<String> = col.iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing header".into(),
        })??;
        let labels: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let mut data = Vec::new();
        let mut m = 0;
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    line: i + 2,
                    message: e.to_string(),
                })?;
            if row.len() != labels.len() {
                return Err(Error::Parse {
                    line: i + 2,
                    message: format!("expected {} values, found {}", labels.len(), row.len()),
                });
            }
            data.extend(row);
            m += 1;
        }
        Self::new(DMatrix::from_column_slice(labels.len(), m, &data), labels)
    }
}

/// Group each bit's samples into `n_virtual` nodes.
///
/// With `N_s` samples per bit: `N_s > N_v` averages contiguous bins,
/// `N_s = N_v` copies the samples, `N_s < N_v` fills the first `N_s`
/// nodes and zeroes the rest.
pub fn sample_virtual_nodes(
    trace: &[f64],
    bitrate: f64,
    n_virtual: usize,
    sample_rate: f64,
) -> Result<StateMatrix> {
    if trace.is_empty() {
        return Err(Error::invalid("trace is empty"));
    }
    if n_virtual == 0 || !(bitrate > 0.0) || !(sample_rate > 0.0) {
        return Err(Error::invalid(
            "bitrate, sample rate and node count must be positive",
        ));
    }
    let per_bit = sample_rate / bitrate;
    let n_s = per_bit.round() as usize;
    if n_s == 0 || (per_bit - n_s as f64).abs() > 1e-6 * per_bit {
        return Err(Error::invalid(format!(
            "sample rate / bitrate = {per_bit} is not a whole number of samples"
        )));
    }
    if trace.len() % n_s != 0 {
        return Err(Error::invalid(format!(
            "trace of {} samples is not a whole number of {n_s}-sample bits",
            trace.len()
        )));
    }
    let bits = trace.len() / n_s;
    let mut f = DMatrix::zeros(n_virtual, bits);
    for b in 0..bits {
        let s = &trace[b * n_s..(b + 1) * n_s];
        if n_s > n_virtual {
            for k in 0..n_virtual {
                let lo = k * n_s / n_virtual;
                let hi = (k + 1) * n_s / n_virtual;
                f[(k, b)] = s[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
            }
        } else {
            for (k, &v) in s.iter().enumerate() {
                f[(k, b)] = v;
            }
        }
    }
    StateMatrix::from_nodes(f)
}

/// Concatenate each column with the node rows of the `n2 − 1` preceding
/// bits, wrapping around the start of the (periodic) sequence.
pub fn augment_rbits(state: &StateMatrix, n2: usize) -> Result<StateMatrix> {
    let m = state.n_samples();
    if n2 == 0 {
        return Err(Error::invalid("n2 must be >= 1"));
    }
    if n2 > m {
        return Err(Error::invalid(format!(
            "n2 = {n2} exceeds the {m}-bit sequence"
        )));
    }
    let nf = state.n_features();
    let mut f = DMatrix::zeros(nf * n2, m);
    let mut labels = Vec::with_capacity(nf * n2);
    for r in 0..n2 {
        for label in &state.labels {
            let node = label.split_once(':').map_or(label.as_str(), |(_, v)| v);
            labels.push(if r == 0 {
                format!("b0:{node}")
            } else {
                format!("b-{r}:{node}")
            });
        }
        for j in 0..m {
            let src = (j + m - r) % m;
            f.view_mut((r * nf, j), (nf, 1))
                .copy_from(&state.features.column(src));
        }
    }
    StateMatrix::new(f, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binning_rules() {
        let trace: Vec<f64> = (0..40).map(|k| k as f64).collect();
        let s = sample_virtual_nodes(&trace, 1.0, 10, 40.0).unwrap();
        assert_eq!(s.n_features(), 10);
        assert_eq!(s.features()[(0, 0)], 1.5);
        assert_eq!(s.features()[(9, 0)], 37.5);

        let trace: Vec<f64> = (0..20).map(|k| (k as f64).sin()).collect();
        let s = sample_virtual_nodes(&trace, 1.0, 10, 10.0).unwrap();
        for b in 0..2 {
            for k in 0..10 {
                assert_eq!(s.features()[(k, b)].to_bits(), trace[b * 10 + k].to_bits());
            }
        }

        let s = sample_virtual_nodes(&[1.0, 2.0, 3.0, 4.0], 1.0, 10, 4.0).unwrap();
        let col: Vec<f64> = s.features().column(0).iter().copied().collect();
        assert_eq!(col, vec![1.0, 2.0, 3.0, 4.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn sampling_errors() {
        assert!(sample_virtual_nodes(&[], 1.0, 3, 3.0).is_err());
        assert!(sample_virtual_nodes(&[1.0; 5], 1.0, 3, 3.0).is_err());
        assert!(sample_virtual_nodes(&[1.0; 6], 1.0, 3, 2.5).is_err());
    }

    #[test]
    fn rbits_feature_count_and_wrap() {
        // Four bits, two nodes each; node values encode (bit, node).
        let f = DMatrix::from_fn(2, 4, |k, j| (10 * j + k) as f64);
        let s = StateMatrix::from_nodes(f).unwrap();
        assert_eq!(augment_rbits(&s, 1).unwrap().n_features(), 2);
        let a = augment_rbits(&s, 2).unwrap();
        assert_eq!(a.n_features(), 4);
        assert_eq!(a.labels(), &["b0:v0", "b0:v1", "b-1:v0", "b-1:v1"]);
        // Column 0 wraps to bit 3 for its history.
        let c0: Vec<f64> = a.features().column(0).iter().copied().collect();
        assert_eq!(c0, vec![0.0, 1.0, 30.0, 31.0]);
        let c2: Vec<f64> = a.features().column(2).iter().copied().collect();
        assert_eq!(c2, vec![20.0, 21.0, 10.0, 11.0]);
        assert!(augment_rbits(&s, 5).is_err());

        let ten = StateMatrix::from_nodes(DMatrix::zeros(10, 8)).unwrap();
        assert_eq!(augment_rbits(&ten, 2).unwrap().n_features(), 20);
    }

    #[test]
    fn csv_round_trip() {
        let f = DMatrix::from_fn(3, 5, |i, j| (i as f64 + 1.0) / (j as f64 + 3.0));
        let s = augment_rbits(&StateMatrix::from_nodes(f).unwrap(), 2).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = StateMatrix::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, s);
        let bad = "a,b\n1,2\n3\n";
        assert!(matches!(
            StateMatrix::read_csv(bad.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn standardized_rows() {
        let f = DMatrix::from_row_slice(2, 4, &[1.0, 2.0, 3.0, 4.0, 5.0, 5.0, 5.0, 5.0]);
        let s = StateMatrix::from_nodes(f).unwrap().standardized();
        let r0 = s.features().row(0);
        assert!(r0.sum().abs() < 1e-12);
        assert!(((r0.iter().map(|v| v * v).sum::<f64>() / 4.0) - 1.0).abs() < 1e-12);
        assert!(s.features().row(1).iter().all(|&v| v == 0.0));
    }
}
