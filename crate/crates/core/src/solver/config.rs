use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How the per-coordinate curvature `beta_j` is derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BetaPolicy {
    /// One constant for all coordinates: `beta_raw / n * max_j ||X_j||^2`.
    Global,
    /// `beta_raw / n * ||X_j||^2` per coordinate.
    #[default]
    PerCoordinate,
}

impl FromStr for BetaPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(BetaPolicy::Global),
            "per-coordinate" | "per_coordinate" => Ok(BetaPolicy::PerCoordinate),
            other => Err(Error::usage(format!("unknown beta policy '{other}'"))),
        }
    }
}

/// How accepted increments are scattered into the shared prediction vector
/// when more than one worker thread is available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScatterMode {
    /// Rows are split into disjoint ranges, one per task; each task applies
    /// every accepted column restricted to its rows, in acceptance order.
    /// Bit-identical to the sequential update.
    #[default]
    RowPartitioned,
    /// One task per accepted column, each adding into shared rows with an
    /// atomic compare-and-swap. Summation order across columns is unspecified.
    Atomic,
}

/// Named points in the (B, P) design space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Stochastic coordinate descent: `B = p`, `P = 1`.
    Scd,
    /// Shotgun: `B = p`, `P = parallel`.
    Shotgun { parallel: usize },
    /// Greedy coordinate descent: `B = 1`, `P = 1`.
    Greedy,
    /// Thread-greedy: `P = B = blocks`.
    ThreadGreedy { blocks: usize },
    /// General block-greedy.
    BlockGreedy { blocks: usize, parallel: usize },
}

impl Algorithm {
    /// `(B, P)` for a problem with `p` features.
    pub fn blocks_and_parallelism(self, p: usize) -> (usize, usize) {
        match self {
            Algorithm::Scd => (p, 1),
            Algorithm::Shotgun { parallel } => (p, parallel),
            Algorithm::Greedy => (1, 1),
            Algorithm::ThreadGreedy { blocks } => (blocks, blocks),
            Algorithm::BlockGreedy { blocks, parallel } => (blocks, parallel),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Scd => write!(f, "scd"),
            Algorithm::Shotgun { parallel } => write!(f, "shotgun(P={parallel})"),
            Algorithm::Greedy => write!(f, "greedy"),
            Algorithm::ThreadGreedy { blocks } => write!(f, "thread-greedy(B={blocks})"),
            Algorithm::BlockGreedy { blocks, parallel } => {
                write!(f, "block-greedy(B={blocks}, P={parallel})")
            }
        }
    }
}

/// Trace sampling cadence. Either stride may be disabled with zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceCadence {
    pub every_iterations: usize,
    pub every_seconds: f64,
}

impl Default for TraceCadence {
    fn default() -> Self {
        Self {
            every_iterations: 1_000,
            every_seconds: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Number of feature blocks `B`.
    pub num_blocks: usize,
    /// Blocks updated per round `P`.
    pub parallelism: usize,
    pub beta_policy: BetaPolicy,
    /// Convergence threshold on the largest `|eta|`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Wall-clock budget in seconds; zero means unlimited.
    pub max_seconds: f64,
    pub seed: u64,
    pub trace: TraceCadence,
    /// Worker threads; 1 runs the fully sequential path.
    pub threads: usize,
    pub scatter: ScatterMode,
    /// Full recompute of `Xw` every this many rounds.
    pub recompute_every: usize,
    /// Keep the accepted `(feature, eta)` sequence in the result.
    pub record_updates: bool,
}

impl SolverConfig {
    pub fn new(num_blocks: usize, parallelism: usize) -> Self {
        Self {
            num_blocks,
            parallelism,
            beta_policy: BetaPolicy::default(),
            tolerance: 1e-6,
            max_iterations: 100_000,
            max_seconds: 0.0,
            seed: 0,
            trace: TraceCadence::default(),
            threads: 1,
            scatter: ScatterMode::default(),
            recompute_every: 10_000,
            record_updates: false,
        }
    }

    pub fn for_algorithm(algorithm: Algorithm, p: usize) -> Self {
        let (b, par) = algorithm.blocks_and_parallelism(p);
        Self::new(b, par)
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    pub fn with_trace_every(mut self, iterations: usize) -> Self {
        self.trace.every_iterations = iterations;
        self
    }

    pub fn with_beta_policy(mut self, policy: BetaPolicy) -> Self {
        self.beta_policy = policy;
        self
    }

    pub fn recording_updates(mut self) -> Self {
        self.record_updates = true;
        self
    }

    /// Checks `1 <= P <= B <= p` and the scalar budgets.
    pub fn validate(&self, p: usize) -> Result<()> {
        if self.num_blocks == 0 || self.num_blocks > p {
            return Err(Error::usage(format!(
                "number of blocks must be in [1, {p}], got {}",
                self.num_blocks
            )));
        }
        if self.parallelism == 0 || self.parallelism > self.num_blocks {
            return Err(Error::usage(format!(
                "parallelism must be in [1, {}], got {}",
                self.num_blocks, self.parallelism
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::usage("tolerance must be positive"));
        }
        if !(self.max_seconds >= 0.0) {
            return Err(Error::usage("max_seconds must be >= 0"));
        }
        if self.threads == 0 {
            return Err(Error::usage("threads must be >= 1"));
        }
        if self.recompute_every == 0 {
            return Err(Error::usage("recompute_every must be >= 1"));
        }
        Ok(())
    }
}
