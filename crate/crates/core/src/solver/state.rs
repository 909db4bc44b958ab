use std::mem::{align_of, size_of};
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use super::config::ScatterMode;
use super::proposal::Proposal;
use crate::error::{Error, Result};
use crate::matrix::{SparseColMatrix, WeightVector};
use crate::problem::Problem;

/// Current iterate: weights, cached `Xw`, and the last computed objective.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub weights: WeightVector,
    pub predictions: Vec<f64>,
    pub objective: f64,
    pub iteration: usize,
}

impl IterateState {
    /// The all-zero starting point.
    pub fn zero(problem: &Problem) -> Self {
        let predictions = vec![0.0; problem.n_samples()];
        let weights = WeightVector::zeros(problem.n_features());
        let objective = problem.objective(&weights, &predictions);
        Self {
            weights,
            predictions,
            objective,
            iteration: 0,
        }
    }

    pub fn from_weights(problem: &Problem, weights: WeightVector) -> Result<Self> {
        let predictions = problem.design().predictions(&weights)?;
        let objective = problem.objective(&weights, &predictions);
        Ok(Self {
            weights,
            predictions,
            objective,
            iteration: 0,
        })
    }

    /// Recomputes `Xw` from scratch and returns the largest absolute change.
    pub fn refresh_predictions(&mut self, design: &SparseColMatrix) -> f64 {
        let fresh = design
            .predictions(&self.weights)
            .expect("state weights always match the design width");
        let drift = fresh
            .iter()
            .zip(&self.predictions)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        self.predictions = fresh;
        drift
    }

    pub fn refresh_objective(&mut self, problem: &Problem) -> f64 {
        self.objective = problem.objective(&self.weights, &self.predictions);
        self.objective
    }
}

/// Applies `w_j <- w_j + eta_j` for every accepted proposal and updates the
/// cached predictions by `sum_j eta_j X_j`.
///
/// Accepted proposals must name distinct features. Runs sequentially unless
/// `parallel` is set, in which case `mode` selects the scatter scheme.
pub fn apply_updates(
    design: &SparseColMatrix,
    state: &mut IterateState,
    accepted: &[Proposal],
    parallel: bool,
    mode: ScatterMode,
) -> Result<()> {
    if accepted.is_empty() {
        return Ok(());
    }
    let mut features: Vec<usize> = accepted.iter().map(|p| p.feature).collect();
    features.sort_unstable();
    if let Some(w) = features.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Invariant(format!(
            "feature {} accepted twice in one round",
            w[0]
        )));
    }
    if let Some(&j) = features.last().filter(|&&j| j >= design.n_cols()) {
        return Err(Error::usage(format!("accepted feature {j} out of range")));
    }

    for p in accepted {
        let wj = state.weights.get(p.feature);
        state.weights.set(p.feature, wj + p.eta);
    }

    if !parallel || accepted.len() == 1 && design.n_rows() < PAR_ROW_CHUNK {
        for p in accepted {
            design.column(p.feature).axpy_into(p.eta, &mut state.predictions);
        }
        return Ok(());
    }
    match mode {
        ScatterMode::RowPartitioned => scatter_row_partitioned(design, accepted, &mut state.predictions),
        ScatterMode::Atomic => scatter_atomic(design, accepted, &mut state.predictions),
    }
    Ok(())
}

const PAR_ROW_CHUNK: usize = 2_048;

fn scatter_row_partitioned(design: &SparseColMatrix, accepted: &[Proposal], preds: &mut [f64]) {
    let chunk = PAR_ROW_CHUNK.max(preds.len() / (4 * rayon::current_num_threads()).max(1));
    preds.par_chunks_mut(chunk).enumerate().for_each(|(k, out)| {
        let start = k * chunk;
        let end = start + out.len();
        for p in accepted {
            let col = design.column(p.feature).row_range(start, end);
            for (&r, &v) in col.rows.iter().zip(col.values) {
                out[r - start] += p.eta * v;
            }
        }
    });
}

const _: () = assert!(size_of::<f64>() == size_of::<AtomicU64>());
const _: () = assert!(align_of::<f64>() >= align_of::<AtomicU64>());

fn as_atomic(values: &mut [f64]) -> &[AtomicU64] {
    // SAFETY: f64 and AtomicU64 share size and the alignment is checked at
    // compile time above. The exclusive borrow guarantees no other access
    // while the atomic view is alive.
    unsafe { &*(values as *mut [f64] as *const [AtomicU64]) }
}

#[inline]
fn atomic_add(cell: &AtomicU64, delta: f64) {
    let _ = cell.fetch_update(Ordering::Relaxed, Ordering::Relaxed, |bits| {
        Some((f64::from_bits(bits) + delta).to_bits())
    });
}

fn scatter_atomic(design: &SparseColMatrix, accepted: &[Proposal], preds: &mut [f64]) {
    let cells = as_atomic(preds);
    accepted.par_iter().for_each(|p| {
        for (r, v) in design.column(p.feature).iter() {
            atomic_add(&cells[r], p.eta * v);
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::LossKind;

    fn problem() -> Problem {
        let m = SparseColMatrix::from_dense_rows(&[
            vec![1.0, 0.0, 2.0],
            vec![0.0, 3.0, 1.0],
            vec![4.0, 1.0, 0.0],
        ])
        .unwrap();
        Problem::new(m, vec![1.0, 2.0, 3.0], LossKind::Squared, 0.1).unwrap()
    }

    fn prop(feature: usize, eta: f64) -> Proposal {
        Proposal {
            feature,
            eta,
            guaranteed_descent: 0.0,
        }
    }

    #[test]
    fn empty_update_is_noop() {
        let pb = problem();
        let mut s = IterateState::zero(&pb);
        let before = s.clone();
        apply_updates(pb.design(), &mut s, &[], false, ScatterMode::default()).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn single_update_adds_scaled_column() {
        let pb = problem();
        let mut s = IterateState::zero(&pb);
        apply_updates(pb.design(), &mut s, &[prop(2, 0.5)], false, ScatterMode::default()).unwrap();
        assert_eq!(s.predictions, vec![1.0, 0.5, 0.0]);
        assert_eq!(s.weights.nnz(), 1);
    }

    #[test]
    fn duplicate_feature_is_invariant_violation() {
        let pb = problem();
        let mut s = IterateState::zero(&pb);
        let err = apply_updates(pb.design(), &mut s, &[prop(1, 0.5), prop(1, 0.2)], false, ScatterMode::default());
        assert!(matches!(err, Err(Error::Invariant(_))));
    }

    #[test]
    fn parallel_modes_match_recompute() {
        let pb = problem();
        for mode in [ScatterMode::RowPartitioned, ScatterMode::Atomic] {
            let mut s = IterateState::zero(&pb);
            let ups = [prop(0, 0.25), prop(1, -1.5), prop(2, 2.0)];
            apply_updates(pb.design(), &mut s, &ups, true, mode).unwrap();
            let drift = s.refresh_predictions(pb.design());
            assert!(drift < 1e-12);
            assert_eq!(s.weights.values(), &[0.25, -1.5, 2.0]);
        }
    }
}
