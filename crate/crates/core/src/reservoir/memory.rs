//! Linear memory capacity of a reservoir.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ridge::ridge_fit;
use super::state::StateMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryOptions {
    /// Number of random inputs fed to the reservoir.
    pub n_samples: usize,
    /// Leading samples discarded before training.
    pub washout: usize,
    /// Fraction of the post-washout samples used for training; the rest
    /// are used to score `m(l)`.
    pub train_fraction: f64,
    pub lambda: f64,
    pub l_max: usize,
}

impl Default for MemoryOptions {
    fn default() -> Self {
        Self {
            n_samples: 3000,
            washout: 100,
            train_fraction: 0.5,
            lambda: 1e-4,
            l_max: 19,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryCapacity {
    pub total: f64,
    /// `m(l)` for `l = 1 ..= l_max`.
    pub per_delay: Vec<f64>,
}

/// Squared correlation coefficient; 0 when either side has no variance.
pub fn squared_correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vb, mut sa, mut sb) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
        sa += x * x;
        sb += y * y;
    }
    // Variance at rounding level of the values counts as none.
    if va <= 1e-20 * sa || vb <= 1e-20 * sb {
        return 0.0;
    }
    (cov * cov / (va * vb)).clamp(0.0, 1.0)
}

/// Drive `reservoir` with i.i.d. uniform `[0, 1)` inputs and sum, over
/// delays `l`, the squared correlation between a ridge readout trained to
/// recall `i(n − l)` and the true delayed input on held-out samples.
///
/// `reservoir` maps the input sequence to a state matrix with one column
/// per input sample.
pub fn memory_capacity<F>(reservoir: F, opts: &MemoryOptions, seed: u64) -> Result<MemoryCapacity>
where
    F: FnOnce(&[f64]) -> Result<StateMatrix>,
{
    if opts.l_max == 0 {
        return Err(Error::invalid("l_max must be >= 1"));
    }
    if !(0.0 < opts.train_fraction && opts.train_fraction < 1.0) {
        return Err(Error::invalid("train fraction must lie in (0, 1)"));
    }
    let start = opts.washout.max(opts.l_max);
    let usable = opts.n_samples.saturating_sub(start);
    let n_train = (usable as f64 * opts.train_fraction).round() as usize;
    if n_train < 2 || usable - n_train < 2 {
        return Err(Error::invalid(
            "too few samples after washout for training and test",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input: Vec<f64> = (0..opts.n_samples).map(|_| rng.gen::<f64>()).collect();
    let states = reservoir(&input)?;
    if states.n_samples() != opts.n_samples {
        return Err(Error::invalid(format!(
            "reservoir returned {} columns for {} inputs",
            states.n_samples(),
            opts.n_samples
        )));
    }
    let train = states.columns(start, n_train);
    let (mean, scale) = train.row_stats();
    let train = train.normalized(&mean, &scale);
    let test = states
        .columns(start + n_train, usable - n_train)
        .normalized(&mean, &scale);

    let per_delay = (1..=opts.l_max)
        .into_par_iter()
        .map(|l| {
            let target =
                |from: usize, len: usize| DMatrix::from_fn(1, len, |_, j| input[from + j - l]);
            let y_train = target(start, n_train);
            let y_test = target(start + n_train, usable - n_train);
            let readout = ridge_fit(train.features(), &y_train, opts.lambda, true)?;
            let out = readout.predict(test.features())?;
            Ok(squared_correlation(out.as_slice(), y_test.as_slice()))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(MemoryCapacity {
        total: per_delay.iter().sum(),
        per_delay,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Uniform};

    fn shift_register(taps: usize) -> impl Fn(&[f64]) -> Result<StateMatrix> {
        move |x: &[f64]| {
            let f = DMatrix::from_fn(taps, x.len(), |k, n| if n > k { x[n - k - 1] } else { 0.0 });
            StateMatrix::from_nodes(f)
        }
    }

    #[test]
    fn one_tap_delay_line() {
        let mc = memory_capacity(shift_register(1), &MemoryOptions::default(), 1).unwrap();
        assert!((mc.per_delay[0] - 1.0).abs() < 1e-6);
        assert!(mc.per_delay[1..].iter().all(|&m| m < 0.01));
        assert!((mc.total - 1.0).abs() < 0.1);
    }

    #[test]
    fn shift_register_capacity_equals_taps() {
        for k in [3, 7, 12] {
            let mc = memory_capacity(shift_register(k), &MemoryOptions::default(), 5).unwrap();
            assert!((mc.total - k as f64).abs() <= 0.2, "k = {k}: {}", mc.total);
        }
    }

    #[test]
    fn white_noise_has_no_memory() {
        let opts = MemoryOptions {
            n_samples: 10_000,
            ..Default::default()
        };
        let noise = |x: &[f64]| {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let u = Uniform::new(0.0, 1.0);
            StateMatrix::from_nodes(DMatrix::from_fn(5, x.len(), |_, _| u.sample(&mut rng)))
        };
        let mc = memory_capacity(noise, &opts, 2).unwrap();
        assert!(mc.total < 0.1, "{}", mc.total);
        assert!(mc.per_delay.iter().all(|m| (0.0..=1.0).contains(m)));
    }

    #[test]
    fn degenerate_output_scores_zero() {
        let flat = |x: &[f64]| StateMatrix::from_nodes(DMatrix::from_element(2, x.len(), 3.0));
        let mc = memory_capacity(flat, &MemoryOptions::default(), 3).unwrap();
        assert_eq!(mc.total, 0.0);
    }
}
