//! Optimality diagnostics on a fixed iterate.

use super::config::BetaPolicy;
use super::curvatures;
use super::proposal::{propose_unchecked, Proposal};
use crate::matrix::WeightVector;
use crate::partition::Partition;
use crate::problem::Problem;

/// Proposal for every feature at `(weights, predictions)`; empty columns
/// get a zero increment.
pub fn full_proposals(
    problem: &Problem,
    weights: &WeightVector,
    predictions: &[f64],
    policy: BetaPolicy,
) -> Vec<Proposal> {
    let betas = curvatures(problem, policy);
    (0..problem.n_features())
        .map(|j| {
            if betas[j] == 0.0 {
                Proposal {
                    feature: j,
                    eta: 0.0,
                    guaranteed_descent: 0.0,
                }
            } else {
                let g = problem.gradient_unchecked(j, predictions);
                propose_unchecked(j, g, betas[j], weights.get(j), problem.lambda())
            }
        })
        .collect()
}

/// l-infinity within each block, then l2 across blocks.
pub fn inf2_norm(values: &[f64], partition: &Partition) -> f64 {
    partition
        .blocks()
        .iter()
        .map(|b| b.iter().map(|&j| values[j].abs()).fold(0.0, f64::max))
        .map(|m| m * m)
        .sum::<f64>()
        .sqrt()
}

/// Outcome of the per-coordinate optimality check.
#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    /// Coordinates whose condition failed.
    pub violations: Vec<usize>,
    /// Largest amount by which any condition was exceeded (0 when none).
    pub worst_excess: f64,
}

impl KktReport {
    pub fn satisfied(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the subgradient optimality conditions with slack
/// `10 * tolerance * beta_j`:
/// `|g_j| <= lambda + slack` where `w_j = 0`, and
/// `|g_j + lambda * sign(w_j)| <= slack` elsewhere.
pub fn kkt_certificate(
    problem: &Problem,
    weights: &WeightVector,
    predictions: &[f64],
    policy: BetaPolicy,
    tolerance: f64,
) -> KktReport {
    let betas = curvatures(problem, policy);
    let lambda = problem.lambda();
    let mut violations = Vec::new();
    let mut worst_excess = 0.0f64;
    for (j, &beta) in betas.iter().enumerate() {
        let g = problem.gradient_unchecked(j, predictions);
        let slack = 10.0 * tolerance * beta;
        let w = weights.get(j);
        let excess = if w == 0.0 {
            g.abs() - lambda - slack
        } else {
            (g + lambda * w.signum()).abs() - slack
        };
        if excess > 0.0 {
            violations.push(j);
            worst_excess = worst_excess.max(excess);
        }
    }
    KktReport {
        violations,
        worst_excess,
    }
}
