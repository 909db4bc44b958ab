//! Block-greedy coordinate descent.
//!
//! Each round selects `P` of the `B` feature blocks at random, computes a
//! proposal for every feature in those blocks from the pre-round iterate,
//! keeps the single largest proposal per block, and applies the kept
//! increments together. `(B, P)` = `(p, 1)` is stochastic CD, `(p, P)` is
//! Shotgun, `(1, 1)` is greedy CD and `P = B` is thread-greedy.

mod config;
mod diagnostics;
mod proposal;
mod state;

use std::time::Instant;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use config::{Algorithm, BetaPolicy, ScatterMode, SolverConfig, TraceCadence};
pub use diagnostics::{full_proposals, inf2_norm, kkt_certificate, KktReport};
pub use proposal::{greedy_accept, propose_increment, soft_threshold, surrogate, Proposal};
pub use state::{apply_updates, IterateState};

use crate::error::{Error, Result};
use crate::io::TraceRecord;
use crate::matrix::WeightVector;
use crate::partition::Partition;
use crate::problem::Problem;

/// Per-coordinate curvature constants `beta_j` for the quadratic upper
/// bound of the mean loss. Empty columns get zero and are never proposed.
pub fn curvatures(problem: &Problem, policy: BetaPolicy) -> Vec<f64> {
    let design = problem.design();
    let scale = problem.loss().beta_raw() / problem.n_samples() as f64;
    let norms = design.column_sq_norms();
    match policy {
        BetaPolicy::PerCoordinate => norms.iter().map(|&s| scale * s).collect(),
        BetaPolicy::Global => {
            let max = norms.iter().copied().fold(0.0, f64::max);
            norms
                .iter()
                .map(|&s| if s > 0.0 { scale * max } else { 0.0 })
                .collect()
        }
    }
}

/// Draws the blocks updated in one round.
///
/// `P = B` takes every block without touching the generator; `P = 1` draws
/// a single uniform index; otherwise a uniform `P`-subset.
pub fn select_blocks<R: Rng + ?Sized>(rng: &mut R, num_blocks: usize, parallelism: usize) -> Result<Vec<usize>> {
    if parallelism == 0 || parallelism > num_blocks {
        return Err(Error::usage(format!(
            "cannot select {parallelism} of {num_blocks} blocks"
        )));
    }
    Ok(if parallelism == num_blocks {
        (0..num_blocks).collect()
    } else if parallelism == 1 {
        vec![rng.gen_range(0..num_blocks)]
    } else {
        index::sample(rng, num_blocks, parallelism).into_vec()
    })
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    TimeBudget,
    /// A proposal became non-finite; the iterate is left as it was before
    /// that round.
    Diverged,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max-iterations",
            Termination::TimeBudget => "time-budget",
            Termination::Diverged => "diverged",
        })
    }
}

/// One applied increment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptedUpdate {
    pub iteration: usize,
    pub feature: usize,
    pub eta: f64,
    pub guaranteed_descent: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub weights: WeightVector,
    pub predictions: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// Rows sampled every `trace.every_iterations` rounds, plus the first and last.
    pub trace: Vec<TraceRecord>,
    /// Rows sampled every `trace.every_seconds`, plus the first and last.
    pub timed_trace: Vec<TraceRecord>,
    /// Accepted increments in application order, when requested.
    pub updates: Vec<AcceptedUpdate>,
    /// Largest `|Xw|` correction seen at a periodic recompute.
    pub max_drift: f64,
}

struct Engine<'a> {
    problem: &'a Problem,
    partition: &'a Partition,
    betas: Vec<f64>,
    block_nnz: Vec<usize>,
    parallel: bool,
}

impl Engine<'_> {
    fn propose(&self, j: usize, state: &IterateState, derivs: Option<&[f64]>) -> Option<Proposal> {
        let beta = self.betas[j];
        if beta == 0.0 {
            return None;
        }
        let g = match derivs {
            Some(d) => self.problem.gradient_from_derivs(j, d),
            None => self.problem.gradient_unchecked(j, &state.predictions),
        };
        Some(proposal::propose_unchecked(
            j,
            g,
            beta,
            state.weights.get(j),
            self.problem.lambda(),
        ))
    }

    /// Loss derivatives per sample, when the features about to be visited
    /// touch at least as many entries as there are samples.
    fn derivs_for(&self, nnz_touched: usize, state: &IterateState) -> Option<Vec<f64>> {
        (nnz_touched >= self.problem.n_samples()).then(|| self.problem.loss_derivs(&state.predictions))
    }

    fn best_in_block(&self, b: usize, state: &IterateState, derivs: Option<&[f64]>) -> Option<Proposal> {
        let block = self.partition.block(b);
        let visit = |acc, &j: &usize| proposal::better(acc, self.propose(j, state, derivs));
        if self.parallel && block.len() >= 256 {
            block
                .par_chunks(128)
                .map(|c| c.iter().fold(None, visit))
                .reduce(|| None, proposal::better)
        } else {
            block.iter().fold(None, visit)
        }
    }

    fn round(&self, selected: &[usize], state: &IterateState) -> Vec<Proposal> {
        let touched = selected.iter().map(|&b| self.block_nnz[b]).sum();
        let derivs = self.derivs_for(touched, state);
        let derivs = derivs.as_deref();
        let best: Vec<Option<Proposal>> = if self.parallel {
            selected.par_iter().map(|&b| self.best_in_block(b, state, derivs)).collect()
        } else {
            selected.iter().map(|&b| self.best_in_block(b, state, derivs)).collect()
        };
        best.into_iter().flatten().collect()
    }

    /// Largest `|eta|` over every feature.
    fn full_sweep(&self, state: &IterateState) -> f64 {
        let p = self.problem.n_features();
        let derivs = self.problem.loss_derivs(&state.predictions);
        let eta = |j: usize| self.propose(j, state, Some(&derivs)).map_or(0.0, |pr| pr.eta.abs());
        if self.parallel {
            (0..p).into_par_iter().map(eta).reduce(|| 0.0, f64::max)
        } else {
            (0..p).map(eta).fold(0.0, f64::max)
        }
    }
}

fn record(state: &IterateState, start: &Instant, max_abs_eta: f64) -> TraceRecord {
    TraceRecord {
        iteration: state.iteration,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        objective: state.objective,
        nnz: state.weights.nnz(),
        max_abs_eta,
    }
}

/// Runs block-greedy coordinate descent from `w = 0`.
///
/// Stops once the largest `|eta|` in the selected blocks has stayed below
/// `config.tolerance` for `ceil(B/P)` consecutive rounds and a full sweep
/// over all features confirms it, or when a budget runs out.
pub fn run(problem: &Problem, partition: &Partition, config: &SolverConfig) -> Result<SolveResult> {
    let p = problem.n_features();
    config.validate(p)?;
    if partition.num_features() != p {
        return Err(Error::usage(format!(
            "partition covers {} features, problem has {p}",
            partition.num_features()
        )));
    }
    if partition.num_blocks() != config.num_blocks {
        return Err(Error::usage(format!(
            "partition has {} blocks, config asks for {}",
            partition.num_blocks(),
            config.num_blocks
        )));
    }
    if config.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::Invariant(format!("thread pool: {e}")))?;
        pool.install(|| run_inner(problem, partition, config, true))
    } else {
        run_inner(problem, partition, config, false)
    }
}

fn run_inner(problem: &Problem, partition: &Partition, config: &SolverConfig, parallel: bool) -> Result<SolveResult> {
    let start = Instant::now();
    let engine = Engine {
        problem,
        partition,
        betas: curvatures(problem, config.beta_policy),
        block_nnz: partition
            .blocks()
            .iter()
            .map(|b| b.iter().map(|&j| problem.design().column_nnz(j)).sum())
            .collect(),
        parallel,
    };
    let design = problem.design();
    let (num_blocks, par) = (config.num_blocks, config.parallelism);
    let quiet_needed = num_blocks.div_ceil(par);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = IterateState::zero(problem);
    let mut updates = Vec::new();
    let mut max_drift = 0.0f64;

    let initial_eta = engine.full_sweep(&state);
    let first = record(&state, &start, initial_eta);
    let mut trace = vec![first];
    let mut timed_trace = vec![first];
    let mut next_timed = config.trace.every_seconds;
    let mut last_eta = initial_eta;
    let mut quiet = 0usize;

    let termination = if initial_eta < config.tolerance {
        Termination::Converged
    } else {
        loop {
            if state.iteration >= config.max_iterations {
                break Termination::MaxIterations;
            }
            if config.max_seconds > 0.0 && start.elapsed().as_secs_f64() >= config.max_seconds {
                break Termination::TimeBudget;
            }

            let selected = select_blocks(&mut rng, num_blocks, par)?;
            let accepted = engine.round(&selected, &state);
            let round_max = accepted.iter().map(|a| a.eta.abs()).fold(0.0, f64::max);
            if accepted.iter().any(|a| !a.eta.is_finite()) {
                break Termination::Diverged;
            }
            apply_updates(design, &mut state, &accepted, parallel, config.scatter)?;
            state.iteration += 1;
            last_eta = round_max;
            if config.record_updates {
                updates.extend(accepted.iter().map(|a| AcceptedUpdate {
                    iteration: state.iteration,
                    feature: a.feature,
                    eta: a.eta,
                    guaranteed_descent: a.guaranteed_descent,
                }));
            }

            let by_iter = config.trace.every_iterations > 0
                && state.iteration.is_multiple_of(config.trace.every_iterations);
            let elapsed = start.elapsed().as_secs_f64();
            let by_time = config.trace.every_seconds > 0.0 && elapsed >= next_timed;
            // Only iteration-driven refreshes touch the iterate, so the update
            // sequence never depends on wall-clock timing.
            if by_iter || state.iteration.is_multiple_of(config.recompute_every) {
                max_drift = max_drift.max(state.refresh_predictions(design));
            }
            if by_iter {
                state.refresh_objective(problem);
                trace.push(record(&state, &start, round_max));
            }
            if by_time {
                let mut row = record(&state, &start, round_max);
                if !by_iter {
                    let fresh = design.predictions(&state.weights)?;
                    row.objective = problem.objective(&state.weights, &fresh);
                }
                timed_trace.push(row);
                while next_timed <= elapsed {
                    next_timed += config.trace.every_seconds;
                }
            }

            if round_max < config.tolerance {
                quiet += 1;
            } else {
                quiet = 0;
            }
            if quiet >= quiet_needed {
                if par == num_blocks || engine.full_sweep(&state) < config.tolerance {
                    break Termination::Converged;
                }
                quiet = 0;
            }
        }
    };

    if termination == Termination::Converged {
        // Weights within tolerance of zero whose proposal lands exactly on
        // zero are moved there one at a time, so the optimality conditions
        // hold for the reported support.
        for j in 0..problem.n_features() {
            if state.weights.get(j) == 0.0 {
                continue;
            }
            if let Some(pr) = engine.propose(j, &state, None) {
                if state.weights.get(j) + pr.eta == 0.0 {
                    apply_updates(design, &mut state, &[pr], false, config.scatter)?;
                    if config.record_updates {
                        updates.push(AcceptedUpdate {
                            iteration: state.iteration,
                            feature: j,
                            eta: pr.eta,
                            guaranteed_descent: pr.guaranteed_descent,
                        });
                    }
                }
            }
        }
    }

    max_drift = max_drift.max(state.refresh_predictions(design));
    state.refresh_objective(problem);
    let last = record(&state, &start, last_eta);
    if trace.last().map(|r| r.iteration) != Some(state.iteration) {
        trace.push(last);
    }
    if timed_trace.last().map(|r| r.iteration) != Some(state.iteration) {
        timed_trace.push(last);
    }

    Ok(SolveResult {
        objective: state.objective,
        iterations: state.iteration,
        weights: state.weights,
        predictions: state.predictions,
        termination,
        trace,
        timed_trace,
        updates,
        max_drift,
    })
}
