//! Feature partitions: the correlation-seeded clustering heuristic, a
//! random baseline, and partition quality statistics.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{SparseColMatrix, WeightVector};

/// Disjoint assignment of `p` features to `B` nonempty blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Builds a partition from explicit block member lists.
    pub fn from_blocks(num_features: usize, mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::usage("partition needs at least one block"));
        }
        let mut assignment = vec![usize::MAX; num_features];
        for (b, block) in blocks.iter_mut().enumerate() {
            if block.is_empty() {
                return Err(Error::usage(format!("block {b} is empty")));
            }
            block.sort_unstable();
            for &j in block.iter() {
                if j >= num_features {
                    return Err(Error::usage(format!(
                        "feature {j} out of range for {num_features} features"
                    )));
                }
                if assignment[j] != usize::MAX {
                    return Err(Error::usage(format!("feature {j} assigned to more than one block")));
                }
                assignment[j] = b;
            }
        }
        if let Some(j) = assignment.iter().position(|&b| b == usize::MAX) {
            return Err(Error::usage(format!("feature {j} is not assigned to any block")));
        }
        Ok(Self { assignment, blocks })
    }

    /// Builds a partition from a feature -> block map.
    pub fn from_assignment(num_blocks: usize, assignment: Vec<usize>) -> Result<Self> {
        let mut blocks = vec![Vec::new(); num_blocks];
        for (j, &b) in assignment.iter().enumerate() {
            if b >= num_blocks {
                return Err(Error::usage(format!(
                    "feature {j} assigned to block {b} but only {num_blocks} blocks exist"
                )));
            }
            blocks[b].push(j);
        }
        Self::from_blocks(assignment.len(), blocks)
    }

    /// Every feature in its own block.
    pub fn singletons(p: usize) -> Result<Self> {
        Self::from_blocks(p, (0..p).map(|j| vec![j]).collect())
    }

    /// One block containing every feature.
    pub fn single_block(p: usize) -> Result<Self> {
        Self::from_blocks(p, vec![(0..p).collect()])
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn num_features(&self) -> usize {
        self.assignment.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block(&self, b: usize) -> &[usize] {
        &self.blocks[b]
    }

    pub fn block_of(&self, j: usize) -> usize {
        self.assignment[j]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }
}

/// Near-equal block sizes: the first `p mod B` blocks get `ceil(p/B)`.
pub fn balanced_sizes(p: usize, num_blocks: usize) -> Vec<usize> {
    let base = p / num_blocks;
    let extra = p % num_blocks;
    (0..num_blocks).map(|b| base + usize::from(b < extra)).collect()
}

fn check_block_count(p: usize, num_blocks: usize) -> Result<()> {
    if num_blocks == 0 || num_blocks > p {
        return Err(Error::usage(format!(
            "number of blocks must be in [1, {p}], got {num_blocks}"
        )));
    }
    Ok(())
}

/// Greedy correlation clustering of features into `num_blocks` blocks.
///
/// Each round seeds a block with the densest unassigned feature (lowest
/// index on ties), scores every unassigned feature by the absolute inner
/// product with the seed, and takes the top scorers (lowest index on ties).
/// The seed always joins its own block. The final block takes whatever is
/// left. Costs `O(B)` column scans of the whole matrix.
pub fn cluster_features(m: &SparseColMatrix, num_blocks: usize) -> Result<Partition> {
    let p = m.n_cols();
    check_block_count(p, num_blocks)?;
    let sizes = balanced_sizes(p, num_blocks);
    let mut unassigned: Vec<usize> = (0..p).collect();
    let mut blocks = Vec::with_capacity(num_blocks);
    let mut dense_seed = vec![0.0; m.n_rows()];

    for &size in &sizes[..num_blocks - 1] {
        let seed = *unassigned
            .iter()
            .max_by(|&&a, &&b| m.column_nnz(a).cmp(&m.column_nnz(b)).then(b.cmp(&a)))
            .expect("unassigned features remain while blocks remain");

        let seed_col = m.column(seed);
        for (r, v) in seed_col.iter() {
            dense_seed[r] = v;
        }
        let mut scored: Vec<(f64, usize)> = unassigned
            .par_iter()
            .map(|&j| {
                if j == seed {
                    return (f64::INFINITY, j);
                }
                let col = m.column(j);
                let dot: f64 = col
                    .rows
                    .iter()
                    .zip(col.values)
                    .map(|(&r, &v)| dense_seed[r] * v)
                    .sum();
                (dot.abs(), j)
            })
            .collect();
        for &r in seed_col.rows {
            dense_seed[r] = 0.0;
        }

        let by_score = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
            b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
        };
        if size < scored.len() {
            scored.select_nth_unstable_by(size - 1, by_score);
            scored.truncate(size);
        }
        let mut members: Vec<usize> = scored.into_iter().map(|(_, j)| j).collect();
        members.sort_unstable();
        unassigned.retain(|j| members.binary_search(j).is_err());
        blocks.push(members);
    }
    blocks.push(unassigned);
    Partition::from_blocks(p, blocks)
}

/// Random permutation of the features cut into near-equal contiguous chunks.
pub fn random_partition<R: Rng + ?Sized>(rng: &mut R, p: usize, num_blocks: usize) -> Result<Partition> {
    check_block_count(p, num_blocks)?;
    let mut perm: Vec<usize> = (0..p).collect();
    perm.shuffle(rng);
    let mut blocks = Vec::with_capacity(num_blocks);
    let mut rest = perm.as_slice();
    for size in balanced_sizes(p, num_blocks) {
        let (head, tail) = rest.split_at(size);
        blocks.push(head.to_vec());
        rest = tail;
    }
    Partition::from_blocks(p, blocks)
}

/// Load-balance and activity profile of a partition.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionStats {
    pub block_nnz: Vec<usize>,
    pub max_block_nnz: usize,
    pub min_block_nnz: usize,
    pub mean_block_nnz: f64,
    /// Blocks holding at least one nonzero weight, when weights were given.
    pub active_blocks: Option<usize>,
}

impl PartitionStats {
    /// `max / min` block nonzeros; infinite when some block has no nonzeros.
    pub fn load_balance_ratio(&self) -> f64 {
        if self.min_block_nnz == 0 {
            f64::INFINITY
        } else {
            self.max_block_nnz as f64 / self.min_block_nnz as f64
        }
    }
}

pub fn partition_stats(
    m: &SparseColMatrix,
    part: &Partition,
    w: Option<&WeightVector>,
) -> Result<PartitionStats> {
    if part.num_features() != m.n_cols() {
        return Err(Error::usage(format!(
            "partition covers {} features, matrix has {}",
            part.num_features(),
            m.n_cols()
        )));
    }
    let block_nnz: Vec<usize> = part
        .blocks()
        .iter()
        .map(|b| b.iter().map(|&j| m.column_nnz(j)).sum())
        .collect();
    let active_blocks = w.map(|w| {
        part.blocks()
            .iter()
            .filter(|b| b.iter().any(|&j| w.get(j) != 0.0))
            .count()
    });
    Ok(PartitionStats {
        max_block_nnz: block_nnz.iter().copied().max().unwrap_or(0),
        min_block_nnz: block_nnz.iter().copied().min().unwrap_or(0),
        mean_block_nnz: block_nnz.iter().sum::<usize>() as f64 / block_nnz.len() as f64,
        block_nnz,
        active_blocks,
    })
}

/// Largest feature count for which every cross-block pair is checked.
pub const EXACT_CROSS_DOT_MAX_FEATURES: usize = 5_000;
/// Pairs drawn when the cross-block maximum is estimated by sampling.
pub const CROSS_DOT_SAMPLES: usize = 1_000_000;
const CROSS_DOT_SEED: u64 = 0x5eed_c0de;

/// Maximum absolute inner product between features in different blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossBlockDot {
    pub value: f64,
    /// True when every cross-block pair was examined.
    pub exact: bool,
    pub pairs_examined: u64,
}

/// Exact for up to [`EXACT_CROSS_DOT_MAX_FEATURES`] features, otherwise a
/// sampled lower estimate over [`CROSS_DOT_SAMPLES`] random cross-block pairs.
pub fn max_cross_block_dot(m: &SparseColMatrix, part: &Partition) -> CrossBlockDot {
    if m.n_cols() <= EXACT_CROSS_DOT_MAX_FEATURES {
        max_cross_block_dot_exact(m, part)
    } else {
        max_cross_block_dot_sampled(m, part, CROSS_DOT_SAMPLES, CROSS_DOT_SEED)
    }
}

pub fn max_cross_block_dot_exact(m: &SparseColMatrix, part: &Partition) -> CrossBlockDot {
    let p = m.n_cols();
    let (value, pairs) = (0..p)
        .into_par_iter()
        .map(|i| {
            let mut best = 0.0f64;
            let mut pairs = 0u64;
            for j in (i + 1)..p {
                if part.block_of(i) != part.block_of(j) {
                    best = best.max(m.column_dot_unchecked(i, j).abs());
                    pairs += 1;
                }
            }
            (best, pairs)
        })
        .reduce(|| (0.0, 0), |a, b| (a.0.max(b.0), a.1 + b.1));
    CrossBlockDot {
        value,
        exact: true,
        pairs_examined: pairs,
    }
}

pub fn max_cross_block_dot_sampled(
    m: &SparseColMatrix,
    part: &Partition,
    samples: usize,
    seed: u64,
) -> CrossBlockDot {
    let p = m.n_cols();
    if part.num_blocks() < 2 {
        return CrossBlockDot {
            value: 0.0,
            exact: true,
            pairs_examined: 0,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(samples);
    while pairs.len() < samples {
        let i = rng.gen_range(0..p);
        let j = rng.gen_range(0..p);
        if part.block_of(i) != part.block_of(j) {
            pairs.push((i, j));
        }
    }
    let value = pairs
        .par_iter()
        .map(|&(i, j)| m.column_dot_unchecked(i, j).abs())
        .reduce(|| 0.0, f64::max);
    CrossBlockDot {
        value,
        exact: false,
        pairs_examined: samples as u64,
    }
}
