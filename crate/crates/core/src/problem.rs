//! The l1-regularized loss minimization problem
//! `min_w (1/n) sum_i l(y_i, (Xw)_i) + lambda * ||w||_1`.

use crate::error::{Error, Result};
use crate::loss::LossKind;
use crate::matrix::{SparseColMatrix, WeightVector};

#[derive(Debug, Clone)]
pub struct Problem {
    design: SparseColMatrix,
    labels: Vec<f64>,
    loss: LossKind,
    lambda: f64,
}

impl Problem {
    pub fn new(design: SparseColMatrix, labels: Vec<f64>, loss: LossKind, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::usage(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        if labels.len() != design.n_rows() {
            return Err(Error::usage(format!(
                "{} labels for {} samples",
                labels.len(),
                design.n_rows()
            )));
        }
        if design.n_rows() == 0 {
            return Err(Error::data("problem has no samples"));
        }
        for &y in &labels {
            loss.check_label(y)?;
        }
        Ok(Self {
            design,
            labels,
            loss,
            lambda,
        })
    }

    pub fn design(&self) -> &SparseColMatrix {
        &self.design
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn loss(&self) -> LossKind {
        self.loss
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_samples(&self) -> usize {
        self.design.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.design.n_cols()
    }

    /// Same data with a different regularization strength.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.design.clone(), self.labels.clone(), self.loss, lambda)
    }

    /// Mean loss `F(w)` given cached predictions `Xw`.
    pub fn smooth_loss(&self, predictions: &[f64]) -> f64 {
        let sum: f64 = self
            .labels
            .iter()
            .zip(predictions)
            .map(|(&y, &t)| self.loss.value_unchecked(y, t))
            .sum();
        sum / self.n_samples() as f64
    }

    /// Full objective `F(w) + lambda ||w||_1`.
    ///
    /// `predictions` must equal `X w`; this is checked in debug builds.
    pub fn objective(&self, w: &WeightVector, predictions: &[f64]) -> f64 {
        debug_assert!(self.predictions_consistent(w, predictions, 1e-6));
        self.smooth_loss(predictions) + self.lambda * w.l1_norm()
    }

    fn predictions_consistent(&self, w: &WeightVector, predictions: &[f64], tol: f64) -> bool {
        match self.design.predictions(w) {
            Ok(fresh) => fresh
                .iter()
                .zip(predictions)
                .all(|(a, b)| !a.is_finite() || (a - b).abs() <= tol * (1.0 + a.abs())),
            Err(_) => false,
        }
    }

    /// Partial derivative of `F` along feature `j`, touching only the
    /// nonzeros of column `j`.
    pub fn coordinate_gradient(&self, j: usize, predictions: &[f64]) -> Result<f64> {
        if j >= self.n_features() {
            return Err(Error::usage(format!(
                "feature index {j} out of range for {} features",
                self.n_features()
            )));
        }
        if predictions.len() != self.n_samples() {
            return Err(Error::usage("prediction vector length does not match samples"));
        }
        Ok(self.gradient_unchecked(j, predictions))
    }

    #[inline]
    pub(crate) fn gradient_unchecked(&self, j: usize, predictions: &[f64]) -> f64 {
        let col = self.design.column(j);
        let mut acc = 0.0;
        for (&r, &v) in col.rows.iter().zip(col.values) {
            acc += self.loss.deriv_unchecked(self.labels[r], predictions[r]) * v;
        }
        acc / self.n_samples() as f64
    }

    /// `l'(y_i, t_i)` for every sample.
    pub(crate) fn loss_derivs(&self, predictions: &[f64]) -> Vec<f64> {
        self.labels
            .iter()
            .zip(predictions)
            .map(|(&y, &t)| self.loss.deriv_unchecked(y, t))
            .collect()
    }

    /// Same value as `gradient_unchecked` given precomputed `loss_derivs`.
    #[inline]
    pub(crate) fn gradient_from_derivs(&self, j: usize, derivs: &[f64]) -> f64 {
        let col = self.design.column(j);
        let mut acc = 0.0;
        for (&r, &v) in col.rows.iter().zip(col.values) {
            acc += derivs[r] * v;
        }
        acc / self.n_samples() as f64
    }

    /// Smallest lambda for which `w = 0` is optimal: `max_j |grad_j F(0)|`.
    pub fn lambda_max(&self) -> f64 {
        let zeros = vec![0.0; self.n_samples()];
        (0..self.n_features())
            .map(|j| self.gradient_unchecked(j, &zeros).abs())
            .fold(0.0, f64::max)
    }
}

/// Free-function form of [`Problem::objective`].
pub fn objective(problem: &Problem, w: &WeightVector, cached_predictions: &[f64]) -> f64 {
    problem.objective(w, cached_predictions)
}

/// Free-function form of [`Problem::coordinate_gradient`].
pub fn coordinate_gradient(problem: &Problem, j: usize, cached_predictions: &[f64]) -> Result<f64> {
    problem.coordinate_gradient(j, cached_predictions)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_inputs() {
        let m = SparseColMatrix::from_dense_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(Problem::new(m.clone(), vec![1.0], LossKind::Squared, 0.1).is_err());
        assert!(Problem::new(m.clone(), vec![1.0, 0.0], LossKind::Logistic, 0.1).is_err());
        assert!(Problem::new(m.clone(), vec![1.0, 2.0], LossKind::Squared, -1.0).is_err());
        assert!(Problem::new(m, vec![1.0, -1.0], LossKind::Logistic, 0.0).is_ok());
    }

    #[test]
    fn objective_at_zero() {
        let m = SparseColMatrix::from_dense_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let sq = Problem::new(m.clone(), vec![3.0, -1.0], LossKind::Squared, 0.5).unwrap();
        let w = WeightVector::zeros(1);
        assert_eq!(sq.objective(&w, &[0.0, 0.0]), (9.0 + 1.0) / 4.0);
        let lg = Problem::new(m, vec![1.0, -1.0], LossKind::Logistic, 0.5).unwrap();
        assert!((lg.objective(&w, &[0.0, 0.0]) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn one_sample_lasso_objective() {
        let m = SparseColMatrix::from_dense_rows(&[vec![1.0]]).unwrap();
        let p = Problem::new(m, vec![2.0], LossKind::Squared, 0.5).unwrap();
        let w = WeightVector::from_vec(vec![1.0]).unwrap();
        assert_eq!(objective(&p, &w, &[1.0]), 1.0);
    }

    #[test]
    fn gradient_empty_column_and_residual() {
        let m = SparseColMatrix::from_columns(3, vec![vec![], vec![(0, 0.6), (2, 0.8)]]).unwrap();
        let p = Problem::new(m, vec![1.0, 2.0, 3.0], LossKind::Squared, 0.0).unwrap();
        let zeros = [0.0; 3];
        assert_eq!(p.coordinate_gradient(0, &zeros).unwrap(), 0.0);
        let g = p.coordinate_gradient(1, &zeros).unwrap();
        assert!((g + (0.6 * 1.0 + 0.8 * 3.0) / 3.0).abs() < 1e-15);
        assert!(p.coordinate_gradient(2, &zeros).is_err());
    }
}
