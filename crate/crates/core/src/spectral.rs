//! Block spectral radius: the largest spectral radius among the `B x B`
//! Gram submatrices obtained by picking one feature from every block.
//!
//! For unit-norm columns every such submatrix has unit diagonal, so the
//! block radius is at least 1, and it is at most `1 + (B - 1) * eps` when
//! all cross-block inner products are bounded by `eps` in magnitude.

use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::SparseColMatrix;
use crate::partition::{max_cross_block_dot, Partition};

/// Largest number of selections enumerated by [`rho_block_exact`].
pub const ENUMERATION_BUDGET: u128 = 1_000_000;
/// Features up to which the full Gram matrix is cached during enumeration.
const DENSE_GRAM_MAX_FEATURES: usize = 2_048;

/// Largest eigenvalue magnitude of a symmetric `n x n` row-major matrix.
///
/// Cyclic Jacobi rotations until the off-diagonal mass is negligible. For
/// the PSD Gram submatrices used here this is `lambda_max`.
pub fn spectral_radius_sym(matrix: &[f64], n: usize) -> f64 {
    assert_eq!(matrix.len(), n * n, "matrix must be n x n");
    if n == 1 {
        return matrix[0].abs();
    }
    let mut a = matrix.to_vec();
    let frob: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if frob == 0.0 {
        return 0.0;
    }
    for _sweep in 0..64 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * frob {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[p * n + p], a[q * n + q]);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoMethod {
    ExactEnumeration,
    MonteCarlo,
}

impl RhoMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            RhoMethod::ExactEnumeration => "exact_enumeration",
            RhoMethod::MonteCarlo => "monte_carlo",
        }
    }
}

/// Block spectral radius value together with the selection attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoEstimate {
    pub rho: f64,
    /// One feature per block, in block order.
    pub argmax: Vec<usize>,
    pub selections_evaluated: u64,
    pub method: RhoMethod,
}

/// Number of one-feature-per-block selections.
pub fn selection_count(part: &Partition) -> u128 {
    part.blocks()
        .iter()
        .try_fold(1u128, |acc, b| acc.checked_mul(b.len() as u128))
        .unwrap_or(u128::MAX)
}

enum Gram<'a> {
    Dense { p: usize, values: Vec<f64> },
    Lazy(&'a SparseColMatrix),
}

impl<'a> Gram<'a> {
    fn new(m: &'a SparseColMatrix) -> Self {
        let p = m.n_cols();
        if p > DENSE_GRAM_MAX_FEATURES {
            return Gram::Lazy(m);
        }
        let rows: Vec<Vec<f64>> = (0..p)
            .into_par_iter()
            .map(|i| (0..p).map(|j| m.column_dot_unchecked(i, j)).collect())
            .collect();
        Gram::Dense {
            p,
            values: rows.concat(),
        }
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            Gram::Dense { p, values } => values[i * p + j],
            Gram::Lazy(m) => m.column_dot_unchecked(i, j),
        }
    }

    fn submatrix_radius(&self, selection: &[usize]) -> f64 {
        let b = selection.len();
        let mut sub = vec![0.0; b * b];
        for (r, &i) in selection.iter().enumerate() {
            for (c, &j) in selection.iter().enumerate().skip(r) {
                let v = self.get(i, j);
                sub[r * b + c] = v;
                sub[c * b + r] = v;
            }
        }
        spectral_radius_sym(&sub, b)
    }
}

fn decode_selection(part: &Partition, mut index: u128, out: &mut Vec<usize>) {
    out.clear();
    for block in part.blocks() {
        let len = block.len() as u128;
        out.push(block[(index % len) as usize]);
        index /= len;
    }
}

// Larger rho wins; ties go to the earlier candidate.
fn pick(a: (f64, u64), b: (f64, u64)) -> (f64, u64) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// Exact block spectral radius by enumerating every selection.
///
/// Refuses with [`Error::EnumerationBudget`] past [`ENUMERATION_BUDGET`]
/// selections.
pub fn rho_block_exact(m: &SparseColMatrix, part: &Partition) -> Result<RhoEstimate> {
    check_partition(m, part)?;
    let total = selection_count(part);
    if total > ENUMERATION_BUDGET {
        return Err(Error::EnumerationBudget {
            selections: total,
            budget: ENUMERATION_BUDGET,
        });
    }
    let gram = Gram::new(m);
    let best = (0..total as u64)
        .into_par_iter()
        .map_init(Vec::new, |sel, k| {
            decode_selection(part, k as u128, sel);
            (gram.submatrix_radius(sel), k)
        })
        .reduce(|| (f64::NEG_INFINITY, u64::MAX), pick);
    let mut argmax = Vec::new();
    decode_selection(part, best.1 as u128, &mut argmax);
    Ok(RhoEstimate {
        rho: best.0,
        argmax,
        selections_evaluated: total as u64,
        method: RhoMethod::ExactEnumeration,
    })
}

/// Lower estimate of the block spectral radius from `num_samples` uniformly
/// drawn selections. Selections are drawn in sequence from `rng`, so with a
/// fixed stream the estimate never decreases as `num_samples` grows.
pub fn rho_block_sampled<R: Rng + ?Sized>(
    m: &SparseColMatrix,
    part: &Partition,
    num_samples: usize,
    rng: &mut R,
) -> Result<RhoEstimate> {
    check_partition(m, part)?;
    if num_samples == 0 {
        return Err(Error::usage("need at least one sample"));
    }
    let selections: Vec<Vec<usize>> = (0..num_samples)
        .map(|_| {
            part.blocks()
                .iter()
                .map(|b| b[rng.gen_range(0..b.len())])
                .collect()
        })
        .collect();
    let gram = if m.n_cols() <= DENSE_GRAM_MAX_FEATURES && num_samples as u128 * 4 >= m.n_cols() as u128 {
        Gram::new(m)
    } else {
        Gram::Lazy(m)
    };
    let best = selections
        .par_iter()
        .enumerate()
        .map(|(k, sel)| (gram.submatrix_radius(sel), k as u64))
        .reduce(|| (f64::NEG_INFINITY, u64::MAX), pick);
    Ok(RhoEstimate {
        rho: best.0,
        argmax: selections[best.1 as usize].clone(),
        selections_evaluated: num_samples as u64,
        method: RhoMethod::MonteCarlo,
    })
}

fn check_partition(m: &SparseColMatrix, part: &Partition) -> Result<()> {
    if part.num_features() != m.n_cols() {
        return Err(Error::usage(format!(
            "partition covers {} features, matrix has {}",
            part.num_features(),
            m.n_cols()
        )));
    }
    Ok(())
}

/// Upper bound `1 + (B - 1) * eps` on the spectral radius of a PSD matrix
/// with unit diagonal and off-diagonal magnitudes at most `eps`.
pub fn prop1_bound(epsilon_hat: f64, num_blocks: usize) -> f64 {
    1.0 + (num_blocks.saturating_sub(1)) as f64 * epsilon_hat
}

/// Convergence parameter `(P - 1)(rho - 1)/(B - 1)`; the rate guarantee
/// needs it below 1. Zero when `B = 1`.
pub fn theorem1_epsilon(rho: f64, num_blocks: usize, parallelism: usize) -> Result<f64> {
    if parallelism == 0 || parallelism > num_blocks {
        return Err(Error::usage(format!(
            "parallelism {parallelism} must be in [1, {num_blocks}]"
        )));
    }
    if num_blocks == 1 || parallelism == 1 {
        return Ok(0.0);
    }
    Ok((parallelism - 1) as f64 * (rho - 1.0) / (num_blocks - 1) as f64)
}

/// True when every nonempty column has unit norm to within `tol`.
pub fn columns_unit_normalized(m: &SparseColMatrix, tol: f64) -> bool {
    m.column_sq_norms()
        .iter()
        .all(|&s| s == 0.0 || (s - 1.0).abs() <= tol)
}

/// Convergence parameter for one degree of parallelism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonEntry {
    pub parallelism: usize,
    pub epsilon: f64,
    pub guarantee_holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub num_blocks: usize,
    pub rho_estimate: f64,
    pub method: RhoMethod,
    pub samples_used: u64,
    pub epsilon_hat: f64,
    pub epsilon_hat_exact: bool,
    pub prop1_bound: f64,
    pub unit_normalized: bool,
    pub theorem1: Vec<EpsilonEntry>,
}

impl SpectralReport {
    /// `rho_estimate <= prop1_bound + 1e-9`.
    pub fn prop1_check(&self) -> bool {
        self.rho_estimate <= self.prop1_bound + 1e-9
    }

    /// Flat `key = value` lines.
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "num_blocks = {}", self.num_blocks);
        let _ = writeln!(s, "method = {}", self.method.as_str());
        let _ = writeln!(s, "samples_used = {}", self.samples_used);
        let _ = writeln!(s, "rho_estimate = {:?}", self.rho_estimate);
        let _ = writeln!(s, "epsilon_hat = {:?}", self.epsilon_hat);
        let _ = writeln!(s, "epsilon_hat_exact = {}", self.epsilon_hat_exact);
        let _ = writeln!(s, "prop1_bound = {:?}", self.prop1_bound);
        let check = if self.prop1_check() { "pass" } else { "FLAGGED" };
        let _ = writeln!(s, "prop1_check = {check}");
        let _ = writeln!(s, "unit_normalized = {}", self.unit_normalized);
        for e in &self.theorem1 {
            let _ = writeln!(s, "theorem1_epsilon[P={}] = {:?}", e.parallelism, e.epsilon);
            let status = if e.guarantee_holds { "holds" } else { "violated" };
            let _ = writeln!(s, "guarantee[P={}] = {status}", e.parallelism);
        }
        s
    }

    /// Parses the output of [`SpectralReport::to_key_values`].
    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut map = std::collections::BTreeMap::new();
        for (k, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (key, value) = line.split_once(" = ").ok_or_else(|| Error::Parse {
                line: k + 1,
                message: "expected 'key = value'".into(),
            })?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        let get = |k: &str| -> Result<&String> {
            map.get(k)
                .ok_or_else(|| Error::data(format!("spectral report missing '{k}'")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|_| Error::data(format!("spectral report: bad number for '{k}'")))
        };
        let method = match get("method")?.as_str() {
            "exact_enumeration" => RhoMethod::ExactEnumeration,
            "monte_carlo" => RhoMethod::MonteCarlo,
            other => return Err(Error::data(format!("unknown method '{other}'"))),
        };
        let mut theorem1 = Vec::new();
        for (key, value) in &map {
            if let Some(p) = key
                .strip_prefix("theorem1_epsilon[P=")
                .and_then(|r| r.strip_suffix(']'))
            {
                let parallelism: usize = p
                    .parse()
                    .map_err(|_| Error::data(format!("bad P in '{key}'")))?;
                let epsilon: f64 = value
                    .parse()
                    .map_err(|_| Error::data(format!("bad epsilon in '{key}'")))?;
                let holds = get(&format!("guarantee[P={parallelism}]"))? == "holds";
                theorem1.push(EpsilonEntry {
                    parallelism,
                    epsilon,
                    guarantee_holds: holds,
                });
            }
        }
        theorem1.sort_by_key(|e| e.parallelism);
        Ok(Self {
            num_blocks: num("num_blocks")? as usize,
            rho_estimate: num("rho_estimate")?,
            method,
            samples_used: num("samples_used")? as u64,
            epsilon_hat: num("epsilon_hat")?,
            epsilon_hat_exact: get("epsilon_hat_exact")? == "true",
            prop1_bound: num("prop1_bound")?,
            unit_normalized: get("unit_normalized")? == "true",
            theorem1,
        })
    }
}

/// Builds a full report, enumerating exactly when the selection count is
/// within budget and sampling `num_samples` selections otherwise.
pub fn spectral_report(
    m: &SparseColMatrix,
    part: &Partition,
    parallelisms: &[usize],
    num_samples: usize,
    seed: u64,
) -> Result<SpectralReport> {
    let estimate = if selection_count(part) <= ENUMERATION_BUDGET {
        rho_block_exact(m, part)?
    } else {
        rho_block_sampled(m, part, num_samples, &mut ChaCha8Rng::seed_from_u64(seed))?
    };
    let cross = max_cross_block_dot(m, part);
    let b = part.num_blocks();
    let theorem1 = parallelisms
        .iter()
        .map(|&par| {
            let epsilon = theorem1_epsilon(estimate.rho, b, par)?;
            Ok(EpsilonEntry {
                parallelism: par,
                epsilon,
                guarantee_holds: epsilon < 1.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralReport {
        num_blocks: b,
        rho_estimate: estimate.rho,
        method: estimate.method,
        samples_used: estimate.selections_evaluated,
        epsilon_hat: cross.value,
        epsilon_hat_exact: cross.exact,
        prop1_bound: prop1_bound(cross.value, b),
        unit_normalized: columns_unit_normalized(m, 1e-8),
        theorem1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_radius() {
        for c in [0.0, 0.3, -0.3, 0.99] {
            let r = spectral_radius_sym(&[1.0, c, c, 1.0], 2);
            assert!((r - (1.0 + f64::abs(c))).abs() < 1e-14, "c = {c}: {r}");
        }
    }

    #[test]
    fn diagonal_radius() {
        assert_eq!(spectral_radius_sym(&[2.0, 0.0, 0.0, 5.0], 2), 5.0);
        assert_eq!(spectral_radius_sym(&[0.0; 9], 3), 0.0);
    }

    #[test]
    fn prop1_examples() {
        assert_eq!(prop1_bound(0.0, 7), 1.0);
        assert!((prop1_bound(0.3, 2) - 1.3).abs() < 1e-15);
        assert!((prop1_bound(0.05, 32) - 2.55).abs() < 1e-12);
    }

    #[test]
    fn theorem1_examples() {
        assert_eq!(theorem1_epsilon(1.7, 10, 1).unwrap(), 0.0);
        assert_eq!(theorem1_epsilon(1.0, 10, 10).unwrap(), 0.0);
        assert_eq!(theorem1_epsilon(1.5, 8, 8).unwrap(), 0.5);
        assert_eq!(theorem1_epsilon(3.0, 1, 1).unwrap(), 0.0);
        assert!(theorem1_epsilon(1.5, 4, 5).is_err());
    }

    #[test]
    fn orthogonal_features_give_one() {
        let m = SparseColMatrix::from_columns(3, vec![vec![(0, 1.0)], vec![(1, 1.0)], vec![(2, 1.0)]])
            .unwrap();
        let part = Partition::from_blocks(3, vec![vec![0, 1], vec![2]]).unwrap();
        let est = rho_block_exact(&m, &part).unwrap();
        assert_eq!(est.rho, 1.0);
        assert_eq!(est.selections_evaluated, 2);
    }

    #[test]
    fn budget_refusal() {
        let m = SparseColMatrix::from_columns(1, (0..40).map(|_| vec![(0, 1.0)]).collect()).unwrap();
        let blocks = (0..20).map(|b| vec![2 * b, 2 * b + 1]).collect();
        let part = Partition::from_blocks(40, blocks).unwrap();
        assert!(matches!(
            rho_block_exact(&m, &part),
            Err(Error::EnumerationBudget { .. })
        ));
    }

    #[test]
    fn report_round_trips() {
        let m = SparseColMatrix::from_columns(
            2,
            vec![vec![(0, 1.0)], vec![(0, 0.6), (1, 0.8)], vec![(1, 1.0)]],
        )
        .unwrap();
        let part = Partition::from_blocks(3, vec![vec![0], vec![1, 2]]).unwrap();
        let rep = spectral_report(&m, &part, &[1, 2], 10, 0).unwrap();
        assert_eq!(rep.method, RhoMethod::ExactEnumeration);
        assert!((rep.rho_estimate - 1.6).abs() < 1e-12);
        assert!((rep.epsilon_hat - 0.6).abs() < 1e-15);
        assert!(rep.prop1_check());
        let back = SpectralReport::from_key_values(&rep.to_key_values()).unwrap();
        assert_eq!(back, rep);
    }
}
