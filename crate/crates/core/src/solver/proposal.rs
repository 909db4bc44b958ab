//! Per-coordinate proposals and the greedy accept rule.

use crate::error::{Error, Result};

/// Proposed increment `eta` for one feature together with the value of the
/// one-dimensional quadratic surrogate at `eta` (never positive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    pub feature: usize,
    pub eta: f64,
    pub guaranteed_descent: f64,
}

/// `sign(z) * max(|z| - tau, 0)`.
#[inline]
pub fn soft_threshold(z: f64, tau: f64) -> f64 {
    if z > tau {
        z - tau
    } else if z < -tau {
        z + tau
    } else {
        0.0
    }
}

/// Minimizes `g*eta + beta/2*eta^2 + lambda*(|w + eta| - |w|)` over `eta`.
///
/// The minimizer is `S(w - g/beta, lambda/beta) - w`. A zero `lambda`
/// reduces it to `-g/beta`.
pub fn propose_increment(feature: usize, g: f64, beta: f64, w: f64, lambda: f64) -> Result<Proposal> {
    if !(beta > 0.0) {
        return Err(Error::usage(format!("curvature must be positive, got {beta}")));
    }
    Ok(propose_unchecked(feature, g, beta, w, lambda))
}

#[inline]
pub(crate) fn propose_unchecked(feature: usize, g: f64, beta: f64, w: f64, lambda: f64) -> Proposal {
    let target = soft_threshold(w - g / beta, lambda / beta);
    let eta = target - w;
    let descent = surrogate(g, beta, w, lambda, eta);
    Proposal {
        feature,
        eta,
        // Rounding can push the optimum a hair above the eta = 0 value.
        guaranteed_descent: descent.min(0.0),
    }
}

/// Value of the one-dimensional surrogate at `eta`.
#[inline]
pub fn surrogate(g: f64, beta: f64, w: f64, lambda: f64, eta: f64) -> f64 {
    g * eta + 0.5 * beta * eta * eta + lambda * ((w + eta).abs() - w.abs())
}

/// Greedy comparison: larger `|eta|` wins, ties go to the lower feature
/// index, zero increments never win.
#[inline]
pub(crate) fn better(a: Option<Proposal>, b: Option<Proposal>) -> Option<Proposal> {
    match (a, b) {
        (None, x) | (x, None) => x.filter(|p| p.eta != 0.0),
        (Some(x), Some(y)) => {
            let (ax, ay) = (x.eta.abs(), y.eta.abs());
            let pick = if ax > ay || (ax == ay && x.feature < y.feature) {
                x
            } else {
                y
            };
            Some(pick).filter(|p| p.eta != 0.0)
        }
    }
}

/// Picks the proposal with the largest `|eta|` in one block.
///
/// Ties break toward the lowest feature index. Returns `None` when the
/// block is empty or every increment is zero.
pub fn greedy_accept(proposals: &[Proposal]) -> Option<Proposal> {
    proposals.iter().copied().fold(None, |best, p| better(best, Some(p)))
}
