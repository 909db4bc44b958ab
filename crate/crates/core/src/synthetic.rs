//! Seeded synthetic designs with known structure, used by the examples and
//! the test suites.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::loss::LossKind;
use crate::matrix::SparseColMatrix;
use crate::partition::Partition;
use crate::problem::Problem;

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Random dense unit vectors in `R^dim`, one per column.
pub fn random_unit_columns<R: Rng + ?Sized>(rng: &mut R, dim: usize, p: usize) -> SparseColMatrix {
    let columns = (0..p)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| normal(rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter()
                .enumerate()
                .map(|(r, x)| (r, x / norm))
                .filter(|&(_, x)| x != 0.0)
                .collect()
        })
        .collect();
    SparseColMatrix::from_columns(dim, columns).expect("finite nonzero entries")
}

/// Random `n x n` matrix with orthonormal columns (Gram-Schmidt on Gaussians).
pub fn random_orthonormal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SparseColMatrix {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    while basis.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
        for _ in 0..2 {
            for q in &basis {
                let d: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(x, qi)| *x -= d * qi);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        basis.push(v);
    }
    let columns = basis
        .into_iter()
        .map(|v| v.into_iter().enumerate().filter(|&(_, x)| x != 0.0).collect())
        .collect();
    SparseColMatrix::from_columns(n, columns).expect("finite nonzero entries")
}

/// Unit columns with every pairwise inner product equal to `c` in `[0, 1)`:
/// `X_j = sqrt(c) e_0 + sqrt(1 - c) e_{j+1}` with `p + 1` rows.
pub fn constant_correlation(p: usize, c: f64) -> SparseColMatrix {
    let (shared, own) = (c.sqrt(), (1.0 - c).sqrt());
    let columns = (0..p)
        .map(|j| {
            let mut col = Vec::with_capacity(2);
            if shared != 0.0 {
                col.push((0, shared));
            }
            col.push((j + 1, own));
            col
        })
        .collect();
    SparseColMatrix::from_columns(p + 1, columns).expect("finite nonzero entries")
}

/// Design with planted feature groups: features in the same group share a
/// row range and are strongly correlated; features in different groups have
/// disjoint support. Feature indices are shuffled so groups are not contiguous.
#[derive(Debug, Clone)]
pub struct PlantedDesign {
    pub design: SparseColMatrix,
    /// Planted groups as a partition.
    pub groups: Partition,
}

pub fn planted_blocks<R: Rng + ?Sized>(
    rng: &mut R,
    num_groups: usize,
    group_size: usize,
    rows_per_group: usize,
) -> PlantedDesign {
    let p = num_groups * group_size;
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(rng);
    let mut columns = vec![Vec::new(); p];
    let mut groups = Vec::with_capacity(num_groups);
    for g in 0..num_groups {
        let base: Vec<f64> = (0..rows_per_group).map(|_| 1.0 + normal(rng).abs()).collect();
        let mut members = Vec::with_capacity(group_size);
        for k in 0..group_size {
            let j = order[g * group_size + k];
            let v: Vec<f64> = base.iter().map(|b| b + 0.3 * normal(rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            columns[j] = v
                .into_iter()
                .enumerate()
                .map(|(r, x)| (g * rows_per_group + r, x / norm))
                .filter(|&(_, x)| x != 0.0)
                .collect();
            members.push(j);
        }
        groups.push(members);
    }
    PlantedDesign {
        design: SparseColMatrix::from_columns(num_groups * rows_per_group, columns)
            .expect("finite nonzero entries"),
        groups: Partition::from_blocks(p, groups).expect("planted groups cover every feature"),
    }
}

/// Random sparse Gaussian design with roughly `density * n` entries per
/// column (at least one), columns scaled to unit norm.
pub fn random_sparse_design<R: Rng + ?Sized>(rng: &mut R, n: usize, p: usize, density: f64) -> SparseColMatrix {
    let per_col = ((density * n as f64).round() as usize).clamp(1, n);
    let rows: Vec<usize> = (0..n).collect();
    let columns = (0..p)
        .map(|_| {
            let mut support: Vec<usize> = rows.choose_multiple(rng, per_col).copied().collect();
            support.sort_unstable();
            let vals: Vec<f64> = support.iter().map(|_| normal(rng)).collect();
            let norm = vals.iter().map(|x| x * x).sum::<f64>().sqrt();
            support
                .into_iter()
                .zip(vals)
                .map(|(r, v)| (r, v / norm))
                .filter(|&(_, v)| v != 0.0)
                .collect()
        })
        .collect();
    SparseColMatrix::from_columns(n, columns).expect("finite nonzero entries")
}

/// Labels from a sparse ground-truth weight vector with `k` nonzeros:
/// `Xw + noise` for squared loss, the sign of it for logistic loss.
pub fn planted_labels<R: Rng + ?Sized>(
    rng: &mut R,
    design: &SparseColMatrix,
    k: usize,
    noise: f64,
    loss: LossKind,
) -> Vec<f64> {
    let p = design.n_cols();
    let mut truth = vec![0.0; p];
    for j in rand::seq::index::sample(rng, p, k.min(p)) {
        truth[j] = 2.0 * normal(rng);
    }
    let mut y = vec![0.0; design.n_rows()];
    for (j, &w) in truth.iter().enumerate() {
        if w != 0.0 {
            design.column(j).axpy_into(w, &mut y);
        }
    }
    y.iter_mut().for_each(|t| *t += noise * normal(rng));
    match loss {
        LossKind::Squared => y,
        LossKind::Logistic => y.into_iter().map(|t| if t >= 0.0 { 1.0 } else { -1.0 }).collect(),
    }
}

/// Random sparse regression or classification problem on a unit-column design.
pub fn random_problem<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    p: usize,
    density: f64,
    loss: LossKind,
    lambda: f64,
) -> Result<Problem> {
    let design = random_sparse_design(rng, n, p, density);
    let labels = planted_labels(rng, &design, (p / 20).max(1), 0.1, loss);
    Problem::new(design, labels, loss, lambda)
}
