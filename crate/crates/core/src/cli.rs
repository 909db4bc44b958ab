//! Command-line front end: `solve`, `cluster` and `spectral` subcommands.
//!
//! Argument parsing lives here rather than in the binary so the commands
//! can be driven from tests through [`main_with_args`].

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io::{self, LabelMapping, LibsvmOptions};
use crate::loss::LossKind;
use crate::matrix::SparseColMatrix;
use crate::partition::{self, Partition};
use crate::problem::Problem;
use crate::solver::{self, Algorithm, BetaPolicy, SolverConfig, Termination, TraceCadence};
use crate::spectral;

#[derive(Debug, Parser)]
#[command(name = "bgcd", version, about = "Block-greedy coordinate descent for l1-regularized problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for one or more regularization strengths.
    Solve(SolveArgs),
    /// Cluster features into blocks and write the partition.
    Cluster(ClusterArgs),
    /// Report the block spectral radius and convergence parameters.
    Spectral(SpectralArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmName {
    Scd,
    Shotgun,
    Greedy,
    ThreadGreedy,
    BlockGreedy,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartitionSource {
    Cluster,
    Random,
    File(PathBuf),
}

impl FromStr for PartitionSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "cluster" => Ok(PartitionSource::Cluster),
            "random" => Ok(PartitionSource::Random),
            other => match other.strip_prefix("file:") {
                Some(path) if !path.is_empty() => Ok(PartitionSource::File(path.into())),
                _ => Err(format!("expected cluster, random or file:<path>, got '{other}'")),
            },
        }
    }
}

fn parse_loss(s: &str) -> std::result::Result<LossKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_beta(s: &str) -> std::result::Result<BetaPolicy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// LIBSVM-format dataset.
    #[arg(long)]
    pub data: PathBuf,
    /// Scale every feature column to unit l2 norm.
    #[arg(long)]
    pub normalize: bool,
    /// Feature count, when it exceeds the largest index in the file.
    #[arg(long)]
    pub features: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "squared", value_parser = parse_loss)]
    pub loss: LossKind,
    /// Comma-separated regularization strengths.
    #[arg(long, value_delimiter = ',', required_unless_present = "auto_lambda0")]
    pub lambda: Vec<f64>,
    /// Use the largest power of ten giving a nonzero solution, then the
    /// next three smaller powers.
    #[arg(long, conflicts_with = "lambda")]
    pub auto_lambda0: bool,
    #[arg(long, value_enum, default_value = "thread-greedy")]
    pub algorithm: AlgorithmName,
    /// Number of blocks B.
    #[arg(long)]
    pub blocks: Option<usize>,
    /// Blocks updated per round P.
    #[arg(long)]
    pub parallel: Option<usize>,
    #[arg(long, default_value = "cluster")]
    pub partition: PartitionSource,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,
    /// Wall-clock budget per run; 0 is unlimited.
    #[arg(long, default_value_t = 0.0)]
    pub max_seconds: f64,
    #[arg(long, env = "BGCD_THREADS", default_value_t = 1)]
    pub threads: usize,
    #[arg(long, default_value = "per-coordinate", value_parser = parse_beta)]
    pub beta: BetaPolicy,
    /// Trace row every this many iterations.
    #[arg(long, default_value_t = 1_000)]
    pub trace_every: usize,
    /// Timed trace row every this many seconds.
    #[arg(long, default_value_t = 1.0)]
    pub trace_seconds: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub blocks: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SpectralArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub blocks: Option<usize>,
    #[arg(long, default_value = "cluster")]
    pub partition: PartitionSource,
    /// Comma-separated degrees of parallelism to evaluate.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub parallel: Vec<usize>,
    /// Selections drawn when exact enumeration is over budget.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Everything needed to reproduce a `solve` invocation.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub data: PathBuf,
    pub normalize: bool,
    pub num_features: Option<usize>,
    pub loss: LossKind,
    /// Empty together with `auto_lambda0` means "derive the grid".
    pub lambdas: Vec<f64>,
    pub auto_lambda0: bool,
    pub algorithm: AlgorithmName,
    pub blocks: Option<usize>,
    pub parallel: Option<usize>,
    pub partition: PartitionSource,
    pub seed: u64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_seconds: f64,
    pub threads: usize,
    pub beta_policy: BetaPolicy,
    pub trace: TraceCadence,
    pub out_dir: PathBuf,
}

impl From<SolveArgs> for RunManifest {
    fn from(a: SolveArgs) -> Self {
        Self {
            data: a.data.data,
            normalize: a.data.normalize,
            num_features: a.data.features,
            loss: a.loss,
            lambdas: a.lambda,
            auto_lambda0: a.auto_lambda0,
            algorithm: a.algorithm,
            blocks: a.blocks,
            parallel: a.parallel,
            partition: a.partition,
            seed: a.seed,
            tolerance: a.tol,
            max_iterations: a.max_iters,
            max_seconds: a.max_seconds,
            threads: a.threads,
            beta_policy: a.beta,
            trace: TraceCadence {
                every_iterations: a.trace_every,
                every_seconds: a.trace_seconds,
            },
            out_dir: a.out,
        }
    }
}

impl RunManifest {
    pub fn validate(&self) -> Result<()> {
        if !self.auto_lambda0 && self.lambdas.is_empty() {
            return Err(Error::usage("no lambda values given"));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
            return Err(Error::usage(format!("lambda must be finite and >= 0, got {l}")));
        }
        Ok(())
    }
}

/// Maps an algorithm name plus optional `--blocks` / `--parallel` onto the
/// named configuration for a problem with `p` features.
pub fn resolve_algorithm(
    name: AlgorithmName,
    blocks: Option<usize>,
    parallel: Option<usize>,
    p: usize,
) -> Result<Algorithm> {
    let need = |v: Option<usize>, flag: &str| {
        v.ok_or_else(|| Error::usage(format!("--algorithm {name:?} requires --{flag}")))
    };
    Ok(match name {
        AlgorithmName::Scd => Algorithm::Scd,
        AlgorithmName::Shotgun => Algorithm::Shotgun {
            parallel: need(parallel, "parallel")?,
        },
        AlgorithmName::Greedy => Algorithm::Greedy,
        AlgorithmName::ThreadGreedy => Algorithm::ThreadGreedy {
            blocks: blocks.unwrap_or(32).min(p),
        },
        AlgorithmName::BlockGreedy => Algorithm::BlockGreedy {
            blocks: need(blocks, "blocks")?,
            parallel: need(parallel, "parallel")?,
        },
    })
}

/// Partition of `p` features into `num_blocks` blocks from the requested source.
pub fn build_partition(
    design: &SparseColMatrix,
    num_blocks: usize,
    source: &PartitionSource,
    seed: u64,
) -> Result<Partition> {
    let p = design.n_cols();
    let part = match source {
        PartitionSource::File(path) => io::read_partition(path)?,
        _ if num_blocks == p => Partition::singletons(p)?,
        _ if num_blocks == 1 => Partition::single_block(p)?,
        PartitionSource::Cluster => partition::cluster_features(design, num_blocks)?,
        PartitionSource::Random => {
            partition::random_partition(&mut ChaCha8Rng::seed_from_u64(seed), p, num_blocks)?
        }
    };
    if part.num_features() != p || part.num_blocks() != num_blocks {
        return Err(Error::usage(format!(
            "partition has {} blocks over {} features; expected {num_blocks} over {p}",
            part.num_blocks(),
            part.num_features()
        )));
    }
    Ok(part)
}

fn load(data: &Path, normalize: bool, num_features: Option<usize>, labels: LabelMapping) -> Result<(SparseColMatrix, Vec<f64>)> {
    let parsed = io::read_libsvm(data, LibsvmOptions { num_features, labels })?;
    let design = if normalize {
        parsed.design.normalize_columns().0
    } else {
        parsed.design
    };
    Ok((design, parsed.labels))
}

/// Largest power of ten strictly below `lambda_max`, the threshold under
/// which the solution has at least one nonzero weight.
pub fn auto_lambda0(problem: &Problem) -> Result<f64> {
    let lmax = problem.lambda_max();
    if !(lmax > 0.0) {
        return Err(Error::data("every gradient is zero at w = 0; no lambda gives a nonzero solution"));
    }
    let mut k = lmax.log10().floor() as i32;
    while 10f64.powi(k) >= lmax {
        k -= 1;
    }
    while 10f64.powi(k + 1) < lmax {
        k += 1;
    }
    Ok(10f64.powi(k))
}

/// Four consecutive decreasing powers of ten starting at `lambda0`.
pub fn lambda_grid(lambda0: f64) -> Vec<f64> {
    (0..4).map(|k| lambda0 / 10f64.powi(k)).collect()
}

/// One line of the `solve` summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub lambda: f64,
    pub num_blocks: usize,
    pub parallelism: usize,
    pub active_blocks: usize,
    pub iterations: usize,
    pub nnz: usize,
    pub objective: f64,
    pub termination: Termination,
    pub seconds: f64,
}

fn lambda_tag(lambda: f64) -> String {
    format!("{lambda:e}")
}

pub fn trace_path(out_dir: &Path, lambda: f64) -> PathBuf {
    out_dir.join(format!("trace_lambda_{}.csv", lambda_tag(lambda)))
}

pub fn timed_trace_path(out_dir: &Path, lambda: f64) -> PathBuf {
    out_dir.join(format!("timed_trace_lambda_{}.csv", lambda_tag(lambda)))
}

pub fn weights_path(out_dir: &Path, lambda: f64) -> PathBuf {
    out_dir.join(format!("weights_lambda_{}.txt", lambda_tag(lambda)))
}

/// Runs the solver for every lambda of the manifest, writing traces and
/// weights into the output directory and a summary table to `out`.
pub fn cmd_solve(manifest: &RunManifest, out: &mut dyn Write) -> Result<Vec<SummaryRow>> {
    manifest.validate()?;
    let mapping = match manifest.loss {
        LossKind::Logistic => LabelMapping::Binary,
        LossKind::Squared => LabelMapping::Raw,
    };
    let (design, labels) = load(&manifest.data, manifest.normalize, manifest.num_features, mapping)?;
    let p = design.n_cols();
    let base = Problem::new(design, labels, manifest.loss, 0.0)?;
    let algorithm = resolve_algorithm(manifest.algorithm, manifest.blocks, manifest.parallel, p)?;
    let mut config = SolverConfig::for_algorithm(algorithm, p);
    config.beta_policy = manifest.beta_policy;
    config.tolerance = manifest.tolerance;
    config.max_iterations = manifest.max_iterations;
    config.max_seconds = manifest.max_seconds;
    config.seed = manifest.seed;
    config.threads = manifest.threads;
    config.trace = manifest.trace;
    config.validate(p)?;

    let lambdas = if manifest.auto_lambda0 {
        let l0 = auto_lambda0(&base)?;
        writeln!(out, "auto lambda0 = {l0:e} (lambda_max = {:e})", base.lambda_max())?;
        lambda_grid(l0)
    } else {
        manifest.lambdas.clone()
    };

    let part = build_partition(base.design(), config.num_blocks, &manifest.partition, manifest.seed)?;
    fs::create_dir_all(&manifest.out_dir)?;
    io::write_partition(&part, manifest.out_dir.join("partition.txt"))?;

    writeln!(out, "algorithm = {algorithm}, B = {}, P = {}", config.num_blocks, config.parallelism)?;
    writeln!(
        out,
        "{:>12} {:>6} {:>6} {:>12} {:>10} {:>8} {:>22} {:>15} {:>10}",
        "lambda", "B", "P", "active_blocks", "iterations", "nnz", "objective", "termination", "seconds"
    )?;
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in &lambdas {
        let problem = base.with_lambda(lambda)?;
        let start = Instant::now();
        let res = solver::run(&problem, &part, &config)?;
        let seconds = start.elapsed().as_secs_f64();
        io::write_trace(&res.trace, trace_path(&manifest.out_dir, lambda))?;
        io::write_trace(&res.timed_trace, timed_trace_path(&manifest.out_dir, lambda))?;
        io::write_weights(&res.weights, weights_path(&manifest.out_dir, lambda))?;
        let stats = partition::partition_stats(problem.design(), &part, Some(&res.weights))?;
        let row = SummaryRow {
            lambda,
            num_blocks: config.num_blocks,
            parallelism: config.parallelism,
            active_blocks: stats.active_blocks.unwrap_or(0),
            iterations: res.iterations,
            nnz: res.weights.nnz(),
            objective: res.objective,
            termination: res.termination,
            seconds,
        };
        writeln!(
            out,
            "{:>12e} {:>6} {:>6} {:>12} {:>10} {:>8} {:>22?} {:>15} {:>10.3}",
            row.lambda,
            row.num_blocks,
            row.parallelism,
            row.active_blocks,
            row.iterations,
            row.nnz,
            row.objective,
            row.termination.to_string(),
            row.seconds
        )?;
        rows.push(row);
    }
    Ok(rows)
}

/// Clusters the features, writes `partition.txt` and `cluster_stats.txt`
/// into `out_dir`, and echoes the statistics.
pub fn cmd_cluster(args: &ClusterArgs, out: &mut dyn Write) -> Result<Partition> {
    let (design, _) = load(&args.data.data, args.data.normalize, args.data.features, LabelMapping::Raw)?;
    let start = Instant::now();
    let part = partition::cluster_features(&design, args.blocks)?;
    let seconds = start.elapsed().as_secs_f64();
    let stats = partition::partition_stats(&design, &part, None)?;
    let cross = partition::max_cross_block_dot(&design, &part);

    fs::create_dir_all(&args.out)?;
    io::write_partition(&part, args.out.join("partition.txt"))?;
    let mut report = String::new();
    use std::fmt::Write as _;
    let _ = writeln!(report, "blocks = {}", part.num_blocks());
    let _ = writeln!(report, "features = {}", part.num_features());
    let _ = writeln!(report, "clustering_seconds = {seconds:?}");
    let _ = writeln!(report, "block_nnz_max = {}", stats.max_block_nnz);
    let _ = writeln!(report, "block_nnz_min = {}", stats.min_block_nnz);
    let _ = writeln!(report, "block_nnz_mean = {:?}", stats.mean_block_nnz);
    let _ = writeln!(report, "load_balance_ratio = {:?}", stats.load_balance_ratio());
    let _ = writeln!(report, "epsilon_hat = {:?}", cross.value);
    let _ = writeln!(report, "epsilon_hat_exact = {}", cross.exact);
    let nnz: Vec<String> = stats.block_nnz.iter().map(usize::to_string).collect();
    let _ = writeln!(report, "block_nnz = {}", nnz.join(","));
    fs::write(args.out.join("cluster_stats.txt"), &report)?;
    out.write_all(report.as_bytes())?;
    Ok(part)
}

/// Writes `spectral_report.txt` into `out_dir` and echoes it.
pub fn cmd_spectral(args: &SpectralArgs, out: &mut dyn Write) -> Result<spectral::SpectralReport> {
    // Block radius is defined on unit-norm columns; always normalize here.
    let (design, _) = load(&args.data.data, true, args.data.features, LabelMapping::Raw)?;
    let p = design.n_cols();
    let num_blocks = match (&args.partition, args.blocks) {
        (PartitionSource::File(path), _) => io::read_partition(path)?.num_blocks(),
        (_, Some(b)) => b,
        (_, None) => return Err(Error::usage("--blocks is required unless --partition file:<path>")),
    };
    if num_blocks == 0 || num_blocks > p {
        return Err(Error::usage(format!("--blocks must be in [1, {p}]")));
    }
    let part = build_partition(&design, num_blocks, &args.partition, args.seed)?;
    let report = spectral::spectral_report(&design, &part, &args.parallel, args.samples, args.seed)?;
    let text = report.to_key_values();
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("spectral_report.txt"), &text)?;
    out.write_all(text.as_bytes())?;
    Ok(report)
}

/// Parses `args`, runs the chosen subcommand and returns the process exit
/// code: 0 success, 1 usage, 2 data, 3 runtime.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(&RunManifest::from(a), out).map(|_| ()),
        Command::Cluster(a) => cmd_cluster(&a, out).map(|_| ()),
        Command::Spectral(a) => cmd_spectral(&a, out).map(|_| ()),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_expansion() {
        let p = 100;
        let exp = |name, b, par| {
            resolve_algorithm(name, b, par, p)
                .unwrap()
                .blocks_and_parallelism(p)
        };
        assert_eq!(exp(AlgorithmName::Scd, None, None), (100, 1));
        assert_eq!(exp(AlgorithmName::Shotgun, None, Some(4)), (100, 4));
        assert_eq!(exp(AlgorithmName::Greedy, None, None), (1, 1));
        assert_eq!(exp(AlgorithmName::ThreadGreedy, Some(32), None), (32, 32));
        assert_eq!(exp(AlgorithmName::BlockGreedy, Some(10), Some(3)), (10, 3));
        assert!(resolve_algorithm(AlgorithmName::Shotgun, None, None, p).is_err());
    }

    #[test]
    fn partition_source_parsing() {
        assert_eq!("cluster".parse::<PartitionSource>().unwrap(), PartitionSource::Cluster);
        assert_eq!(
            "file:/tmp/p.txt".parse::<PartitionSource>().unwrap(),
            PartitionSource::File("/tmp/p.txt".into())
        );
        assert!("file:".parse::<PartitionSource>().is_err());
        assert!("kmeans".parse::<PartitionSource>().is_err());
    }

    #[test]
    fn lambda_grid_powers() {
        assert_eq!(lambda_grid(1e-2), vec![1e-2, 1e-3, 1e-4, 1e-5]);
    }

    #[test]
    fn usage_errors_exit_one() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(main_with_args(["bgcd", "solve"], &mut o, &mut e), 1);
        assert_eq!(main_with_args(["bgcd", "frobnicate"], &mut o, &mut e), 1);
        assert_eq!(main_with_args(["bgcd", "--help"], &mut o, &mut e), 0);
    }
}
