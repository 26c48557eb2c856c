//! Input encoding onto the pump: connectivity matrix, scale and offset, and
//! the periodic random mask used with the feedback reservoir.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::SampledSignal;

/// `U = α(W_in·x + u0)`, one virtual node per row of `w_in`, each held for
/// `node_spacing`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingConfig {
    /// Connectivity matrix, `N_v × N` (nodes by input features).
    pub w_in: DMatrix<f64>,
    pub alpha: f64,
    pub u0: f64,
    /// Time each node value is held (s).
    pub node_spacing: f64,
}

impl EncodingConfig {
    pub fn new(w_in: DMatrix<f64>, alpha: f64, u0: f64, node_spacing: f64) -> Result<Self> {
        if w_in.nrows() == 0 || w_in.ncols() == 0 {
            return Err(Error::invalid("w_in must have at least one row and column"));
        }
        if !(alpha > 0.0) {
            return Err(Error::invalid(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if !(node_spacing > 0.0) {
            return Err(Error::invalid("node spacing must be positive"));
        }
        if w_in.iter().any(|v| !v.is_finite()) || !u0.is_finite() {
            return Err(Error::invalid("w_in and u0 must be finite"));
        }
        Ok(Self {
            w_in,
            alpha,
            u0,
            node_spacing,
        })
    }

    /// Scalar input replicated onto `n_virtual` nodes (`W_in` all ones).
    pub fn replicated(n_virtual: usize, alpha: f64, u0: f64, node_spacing: f64) -> Result<Self> {
        Self::new(
            DMatrix::from_element(n_virtual, 1, 1.0),
            alpha,
            u0,
            node_spacing,
        )
    }

    /// Uniform `[0, 1)` connectivity from a seed.
    pub fn random(
        n_virtual: usize,
        n_inputs: usize,
        alpha: f64,
        u0: f64,
        node_spacing: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = DMatrix::from_fn(n_virtual, n_inputs, |_, _| rng.gen::<f64>());
        Self::new(w, alpha, u0, node_spacing)
    }

    pub fn n_virtual(&self) -> usize {
        self.w_in.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.w_in.ncols()
    }

    /// `T = N_v·Δ`.
    pub fn bit_duration(&self) -> f64 {
        self.n_virtual() as f64 * self.node_spacing
    }

    /// Node values `α(W_in·X + u0)` for an `N × M` input, as `N_v × M`.
    pub fn node_values(&self, x_in: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x_in.nrows() != self.n_inputs() {
            return Err(Error::invalid(format!(
                "input has {} rows, w_in expects {}",
                x_in.nrows(),
                self.n_inputs()
            )));
        }
        let mut u = &self.w_in * x_in;
        u.apply(|v| *v = self.alpha * (*v + self.u0));
        if let Some(idx) = u.iter().position(|&v| v < 0.0) {
            let (node, col) = (idx % u.nrows(), idx / u.nrows());
            return Err(Error::invalid(format!(
                "encoded power {} is negative at node {node}, sample {col}",
                u[(node, col)]
            )));
        }
        Ok(u)
    }
}

/// Pump waveform for an `N × M` input: column `n` occupies `[nT, (n+1)T)`,
/// each node value held for `samples_per_node` samples. The sample rate of
/// the result is `samples_per_node / node_spacing`.
pub fn encode(
    x_in: &DMatrix<f64>,
    cfg: &EncodingConfig,
    samples_per_node: usize,
) -> Result<Vec<f64>> {
    if samples_per_node == 0 {
        return Err(Error::invalid("samples_per_node must be >= 1"));
    }
    let u = cfg.node_values(x_in)?;
    let mut out = Vec::with_capacity(u.len() * samples_per_node);
    for col in 0..u.ncols() {
        for node in 0..u.nrows() {
            out.extend(std::iter::repeat(u[(node, col)]).take(samples_per_node));
        }
    }
    Ok(out)
}

/// Periodic per-node modulation with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mask {
    pub values: Vec<f64>,
    pub seed: Option<u64>,
}

impl Mask {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("mask must have at least one entry"));
        }
        if let Some(i) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid(format!(
                "mask entry {i} = {} is outside [0, 1]",
                values[i]
            )));
        }
        Ok(Self { values, seed: None })
    }

    /// Entries drawn uniformly from `[0, 1)`.
    pub fn random(n_virtual: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mask = Self::new((0..n_virtual).map(|_| rng.gen::<f64>()).collect())?;
        mask.seed = Some(seed);
        Ok(mask)
    }

    pub fn ones(n_virtual: usize) -> Result<Self> {
        Self::new(vec![1.0; n_virtual])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Field `√(p_max·x_i·m_j)` on node `j` of bit `i`, with `θ = b_w / N_v`
/// and `samples_per_node` samples per node.
pub fn mask_encode(
    x: &[f64],
    mask: &Mask,
    bit_width: f64,
    p_max: f64,
    samples_per_node: usize,
) -> Result<SampledSignal> {
    if x.is_empty() {
        return Err(Error::invalid("input sequence is empty"));
    }
    if let Some(i) = x.iter().position(|v| !(*v >= 0.0)) {
        return Err(Error::invalid(format!(
            "input value {i} = {} is negative",
            x[i]
        )));
    }
    if !(bit_width > 0.0) || !(p_max >= 0.0) || samples_per_node == 0 {
        return Err(Error::invalid(
            "bit width and samples_per_node must be positive, p_max non-negative",
        ));
    }
    let theta = bit_width / mask.len() as f64;
    let mut samples = Vec::with_capacity(x.len() * mask.len() * samples_per_node);
    for &xi in x {
        for &m in &mask.values {
            let a = Complex64::new((p_max * xi * m).sqrt(), 0.0);
            samples.extend(std::iter::repeat(a).take(samples_per_node));
        }
    }
    SampledSignal::new(samples, samples_per_node as f64 / theta, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replicated_ones_give_equal_steps() {
        let cfg = EncodingConfig::replicated(3, 1.0, 0.0, 1e-9).unwrap();
        let x = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert_eq!(encode(&x, &cfg, 1).unwrap(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn offset_and_scale() {
        let cfg = EncodingConfig::replicated(3, 2.0, 0.5, 1e-9).unwrap();
        let x = DMatrix::from_row_slice(1, 1, &[0.0]);
        assert!(encode(&x, &cfg, 4).unwrap().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn random_connectivity_matches_matrix_product() {
        let cfg = EncodingConfig::random(50, 4, 1.5, 0.1, 1e-10, 7).unwrap();
        let x = DMatrix::from_column_slice(4, 1, &[0.2, 0.9, 0.4, 0.6]);
        let got = encode(&x, &cfg, 1).unwrap();
        assert_eq!(got.len(), 50);
        for (j, g) in got.iter().enumerate() {
            let mut dot = 0.0;
            for k in 0..4 {
                dot += cfg.w_in[(j, k)] * x[(k, 0)];
            }
            assert!((g - 1.5 * (dot + 0.1)).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_power_names_entry() {
        let cfg = EncodingConfig::replicated(2, 1.0, -1.0, 1e-9).unwrap();
        let x = DMatrix::from_row_slice(1, 2, &[2.0, 0.0]);
        let err = encode(&x, &cfg, 1).unwrap_err().to_string();
        assert!(err.contains("node 0, sample 1"), "{err}");
    }

    #[test]
    fn mask_encode_examples() {
        let ones = Mask::ones(25).unwrap();
        let s = mask_encode(&[1.0, 0.0], &ones, 1e-9, 2e-3, 2).unwrap();
        assert!((s.dt() - 20e-12).abs() < 1e-24);
        let p = s.powers();
        assert!(p[..50].iter().all(|&v| (v - 2e-3).abs() < 1e-15));
        assert!(p[50..].iter().all(|&v| v == 0.0));
        // 25 nodes over 1 ns, one sample each: θ = 40 ps.
        let one = mask_encode(&[1.0], &ones, 1e-9, 1e-3, 1).unwrap();
        assert!((one.dt() - 40e-12).abs() < 1e-22);
        assert!(mask_encode(&[-0.1], &ones, 1e-9, 1e-3, 1).is_err());
    }

    #[test]
    fn mask_entries_in_unit_interval() {
        let m = Mask::random(100, 3).unwrap();
        assert!(m.values.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(m, Mask::random(100, 3).unwrap());
        assert!(Mask::new(vec![0.5, 1.2]).is_err());
    }
}
