//! Parallel coordinate descent for l1-regularized smooth losses.
//!
//! Features are split into blocks. Each round picks `P` blocks at random,
//! each picked block proposes its best single-coordinate step, and all
//! proposals are applied together. With `B = p` blocks and `P = 1` this is
//! stochastic coordinate descent; `B = p, P > 1` is Shotgun; `B = 1` is
//! fully greedy descent; `B = P` is thread-greedy.
//!
//! ```
//! use blockgreedy::{LossKind, Partition, Problem, SolverConfig, SparseColMatrix};
//!
//! let x = SparseColMatrix::from_dense_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
//! let problem = Problem::new(x, vec![3.0, 0.5], LossKind::Squared, 0.5).unwrap();
//! let part = Partition::singletons(2).unwrap();
//! let res = blockgreedy::solver::run(&problem, &part, &SolverConfig::new(2, 1)).unwrap();
//! assert!((res.weights.get(0) - 2.0).abs() < 1e-6);
//! assert_eq!(res.weights.get(1), 0.0);
//! ```

// `!(x > 0.0)` is used on purpose to reject NaN alongside bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
mod error;
pub mod io;
pub mod loss;
pub mod matrix;
pub mod partition;
pub mod problem;
pub mod solver;
pub mod spectral;
pub mod synthetic;

pub use error::{Error, Result};
pub use loss::LossKind;
pub use matrix::{Column, ColumnScaling, SparseColMatrix, WeightVector};
pub use partition::{cluster_features, random_partition, Partition, PartitionStats};
pub use problem::Problem;
pub use solver::{Algorithm, BetaPolicy, SolveResult, SolverConfig, Termination};
pub use spectral::SpectralReport;
