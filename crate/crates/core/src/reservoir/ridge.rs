//! Tikhonov-regularized linear readout.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Validation error of one λ in a cross-validation sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvEntry {
    pub lambda: f64,
    pub fold_errors: Vec<f64>,
    pub mean_error: f64,
}

/// Trained output layer `y = W·x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeReadout {
    /// `Q × N_features`, stored row by row.
    #[serde(with = "rows")]
    pub weights: DMatrix<f64>,
    /// Per-output intercept; all zeros when fitted without one.
    pub bias: Vec<f64>,
    pub lambda: f64,
    pub intercept: bool,
    /// Present when λ was chosen by [`ridge_cv`].
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cv_report: Vec<CvEntry>,
}

mod rows {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let q = rows.len();
        let n = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n) {
            return Err(serde::de::Error::custom("ragged weight rows"));
        }
        Ok(DMatrix::from_fn(q, n, |i, j| rows[i][j]))
    }
}

impl RidgeReadout {
    pub fn n_outputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.weights.ncols()
    }

    /// `Q × M` outputs for an `N_features × M` input.
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.nrows() != self.n_features() {
            return Err(Error::invalid(format!(
                "readout expects {} features, got {}",
                self.n_features(),
                x.nrows()
            )));
        }
        let mut y = &self.weights * x;
        for (i, mut row) in y.row_iter_mut().enumerate() {
            row.add_scalar_mut(self.bias[i]);
        }
        Ok(y)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text)?;
        if r.bias.len() != r.weights.nrows() {
            return Err(Error::invalid("bias length does not match weight rows"));
        }
        Ok(r)
    }
}

fn check_xy(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<()> {
    if x.ncols() != y.ncols() {
        return Err(Error::invalid(format!(
            "{} feature columns but {} target columns",
            x.ncols(),
            y.ncols()
        )));
    }
    if x.ncols() == 0 || x.nrows() == 0 || y.nrows() == 0 {
        return Err(Error::invalid("empty training data"));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("training data must be finite"));
    }
    Ok(())
}

/// Closed-form minimizer of `‖Y − W·X − b‖² + λ²‖W‖²`.
///
/// With `intercept` an all-ones feature row is appended and left out of
/// the penalty. `x` is `N_features × M`, `y` is `Q × M`.
pub fn ridge_fit(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    lambda: f64,
    intercept: bool,
) -> Result<RidgeReadout> {
    check_xy(x, y)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
    }
    let n = x.nrows();
    let m = x.ncols();
    let nt = n + intercept as usize;
    let xt = if intercept {
        let mut a = DMatrix::from_element(nt, m, 1.0);
        a.rows_mut(0, n).copy_from(x);
        a
    } else {
        x.clone()
    };
    let mut gram = &xt * xt.transpose();
    let l2 = lambda * lambda;
    for i in 0..n {
        gram[(i, i)] += l2;
    }
    let rhs = &xt * y.transpose();
    let sol = solve_spd(gram, rhs, lambda)?;
    let wt = sol.transpose();
    let weights = wt.columns(0, n).into_owned();
    let bias = if intercept {
        wt.column(n).iter().copied().collect()
    } else {
        vec![0.0; y.nrows()]
    };
    if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(RidgeReadout {
        weights,
        bias,
        lambda,
        intercept,
        cv_report: Vec::new(),
    })
}

fn solve_spd(gram: DMatrix<f64>, rhs: DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    let scale = gram.diagonal().amax().max(f64::MIN_POSITIVE);
    if let Some(ch) = gram.clone().cholesky() {
        let l = ch.l_dirty();
        let dmin = l
            .diagonal()
            .iter()
            .fold(f64::INFINITY, |a, &d| a.min(d * d));
        if dmin > 1e-13 * scale {
            return Ok(ch.solve(&rhs));
        }
    }
    if lambda == 0.0 {
        return Err(Error::Singular);
    }
    // Only reachable when the unpenalized intercept column is degenerate.
    gram.lu().solve(&rhs).ok_or(Error::Singular)
}

/// Mean squared error of `readout` on held-out data, averaged over outputs.
pub fn readout_mse(readout: &RidgeReadout, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64> {
    let pred = readout.predict(x)?;
    Ok((pred - y).iter().map(|e| e * e).sum::<f64>() / y.len() as f64)
}

/// Pick λ from `lambdas` by `folds`-fold cross-validation over contiguous
/// blocks of columns, then refit on all data. Ties go to the smaller λ.
pub fn ridge_cv(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    lambdas: &[f64],
    folds: usize,
    intercept: bool,
) -> Result<RidgeReadout> {
    check_xy(x, y)?;
    if lambdas.is_empty() {
        return Err(Error::invalid("lambda grid is empty"));
    }
    let m = x.ncols();
    if folds < 2 || folds > m {
        return Err(Error::invalid(format!(
            "need 2 <= folds <= {m}, got {folds}"
        )));
    }
    let mut grid = lambdas.to_vec();
    grid.sort_by(f64::total_cmp);
    let bounds: Vec<usize> = (0..=folds).map(|k| k * m / folds).collect();
    let mut report = Vec::with_capacity(grid.len());
    for &lambda in &grid {
        let mut fold_errors = Vec::with_capacity(folds);
        for k in 0..folds {
            let (lo, hi) = (bounds[k], bounds[k + 1]);
            let keep: Vec<usize> = (0..lo).chain(hi..m).collect();
            let xtr = x.select_columns(&keep);
            let ytr = y.select_columns(&keep);
            let err = match ridge_fit(&xtr, &ytr, lambda, intercept) {
                Ok(r) => readout_mse(
                    &r,
                    &x.columns(lo, hi - lo).into_owned(),
                    &y.columns(lo, hi - lo).into_owned(),
                )?,
                Err(Error::Singular) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            fold_errors.push(err);
        }
        let mean_error = fold_errors.iter().sum::<f64>() / folds as f64;
        report.push(CvEntry {
            lambda,
            fold_errors,
            mean_error,
        });
    }
    let best = report.iter().enumerate().fold(0, |b, (i, e)| {
        if e.mean_error < report[b].mean_error {
            i
        } else {
            b
        }
    });
    let mut readout = ridge_fit(x, y, report[best].lambda, intercept)?;
    readout.cv_report = report;
    Ok(readout)
}

/// Index of the largest output in each column (multi-class decision).
pub fn winner_takes_all(outputs: &DMatrix<f64>) -> Vec<usize> {
    outputs.column_iter().map(|c| c.argmax().0).collect()
}

/// Logarithmically spaced grid from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    // Powers of the ratio keep both ends exact.
    let ratio = hi / lo;
    (0..n)
        .map(|k| match k {
            0 => lo,
            k if k == n - 1 => hi,
            k => lo * ratio.powf(k as f64 / (n - 1) as f64),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(r: usize, c: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(r, c, |_, _| rng.gen::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn identity_without_intercept() {
        let x = DMatrix::identity(2, 2);
        let y = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let r = ridge_fit(&x, &y, 0.0, false).unwrap();
        assert!((r.weights[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((r.weights[(0, 1)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn shrinks_monotonically() {
        let x = random(5, 40, 1);
        let y = random(1, 40, 2);
        let mut last = f64::INFINITY;
        for lambda in log_grid(1e-3, 1e4, 15) {
            let n = ridge_fit(&x, &y, lambda, true).unwrap().weights.norm();
            assert!(n <= last + 1e-12);
            last = n;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn singular_at_zero_lambda() {
        let mut x = random(3, 10, 4);
        let r0 = x.row(0).into_owned();
        x.row_mut(2).copy_from(&r0);
        let y = random(1, 10, 5);
        assert!(matches!(ridge_fit(&x, &y, 0.0, true), Err(Error::Singular)));
        assert!(ridge_fit(&x, &y, 0.1, true).is_ok());
    }

    #[test]
    fn agrees_with_gradient_descent() {
        let x = random(20, 100, 11);
        let y = random(2, 100, 12);
        let lambda = 0.7;
        let r = ridge_fit(&x, &y, lambda, true).unwrap();
        // Plain gradient descent on the same objective.
        let mut xt = DMatrix::from_element(21, 100, 1.0);
        xt.rows_mut(0, 20).copy_from(&x);
        let mut pen = DMatrix::identity(21, 21) * (lambda * lambda);
        pen[(20, 20)] = 0.0;
        let h = &xt * xt.transpose() + &pen;
        let step = 1.0 / h.clone().symmetric_eigenvalues().amax();
        let mut w = DMatrix::zeros(2, 21);
        for _ in 0..200_000 {
            let grad = &w * &h - &y * xt.transpose();
            w -= grad * step;
        }
        for q in 0..2 {
            for j in 0..20 {
                assert!((w[(q, j)] - r.weights[(q, j)]).abs() < 1e-6, "{q},{j}");
            }
            assert!((w[(q, 20)] - r.bias[q]).abs() < 1e-6);
        }
    }

    #[test]
    fn residual_orthogonal_to_rows() {
        let x = random(6, 50, 21);
        let y = random(1, 50, 22);
        let r = ridge_fit(&x, &y, 0.0, false).unwrap();
        let res = &y - r.predict(&x).unwrap();
        let g = &x * res.transpose();
        assert!(g.amax() < 1e-8, "{}", g.amax());
    }

    #[test]
    fn cv_single_value_equals_fit() {
        let x = random(4, 30, 3);
        let y = random(1, 30, 4);
        let cv = ridge_cv(&x, &y, &[0.3], 5, true).unwrap();
        let fit = ridge_fit(&x, &y, 0.3, true).unwrap();
        assert_eq!(cv.weights, fit.weights);
        assert_eq!(cv.cv_report.len(), 1);
        assert!(ridge_cv(&x, &y, &[], 5, true).is_err());
    }

    #[test]
    fn cv_prefers_small_lambda_without_noise() {
        let x = random(5, 100, 8);
        let w = random(1, 5, 9);
        let y = &w * &x;
        let grid = log_grid(1e-4, 10.0, 6);
        let cv = ridge_cv(&x, &y, &grid, 5, true).unwrap();
        assert_eq!(cv.lambda, grid[0]);
    }

    #[test]
    fn cv_noise_raises_lambda() {
        let x = random(10, 60, 31);
        let w = random(1, 10, 32);
        let clean = &w * &x;
        let noisy = &clean + random(1, 60, 33) * 3.0;
        let grid = log_grid(1e-3, 100.0, 11);
        let a = ridge_cv(&x, &clean, &grid, 5, true).unwrap().lambda;
        let b = ridge_cv(&x, &noisy, &grid, 5, true).unwrap().lambda;
        assert!(b >= a);
    }

    #[test]
    fn json_round_trip() {
        let x = random(3, 20, 1);
        let y = random(2, 20, 2);
        let r = ridge_cv(&x, &y, &[0.1, 1.0], 4, true).unwrap();
        let back = RidgeReadout::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn winner_takes_all_argmax() {
        let o = DMatrix::from_row_slice(3, 2, &[0.1, 0.9, 0.7, 0.0, 0.2, 0.3]);
        assert_eq!(winner_takes_all(&o), vec![1, 0]);
    }

    proptest! {
        #[test]
        fn weights_finite_for_positive_lambda(seed in 0u64..1000, lambda in 1e-3f64..10.0) {
            let x = random(4, 12, seed);
            let y = random(1, 12, seed + 1);
            let r = ridge_fit(&x, &y, lambda, true).unwrap();
            prop_assert!(r.weights.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn log_grid_hits_both_ends() {
        let g = log_grid(20e6, 4e9, 13);
        assert_eq!((g[0], g[12]), (20e6, 4e9));
        assert!(g.windows(2).all(|w| (w[1] / w[0] - g[1] / g[0]).abs() < 1e-12));
    }
}
