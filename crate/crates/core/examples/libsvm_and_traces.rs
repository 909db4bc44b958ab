// Dataset and trace files: write a LIBSVM file, read it back, solve, and
// reload the convergence trace.

use std::fs::File;
use std::io::BufWriter;

use blockgreedy::io::{self, LabelMapping, LibsvmOptions, TraceRecord};
use blockgreedy::{cluster_features, solver, synthetic, LossKind, Problem, SolverConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> blockgreedy::Result<((usize, usize, usize), Vec<TraceRecord>)> {
    let dir = tempfile::tempdir()?;
    let data = dir.path().join("train.svm");
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let design = synthetic::random_sparse_design(&mut rng, 300, 200, 0.05);
    let labels = synthetic::planted_labels(&mut rng, &design, 10, 0.0, LossKind::Logistic);
    io::write_libsvm(&design, &labels, BufWriter::new(File::create(&data)?))?;

    let opts = LibsvmOptions { num_features: None, labels: LabelMapping::Binary };
    let parsed = io::read_libsvm(&data, opts)?;
    let shape = parsed.shape();
    let problem = Problem::new(parsed.design, parsed.labels, LossKind::Logistic, 0.0)?;
    let problem = problem.with_lambda(0.02 * problem.lambda_max())?;

    let partition = cluster_features(problem.design(), 8)?;
    let config = SolverConfig::new(8, 4).with_trace_every(50);
    let res = solver::run(&problem, &partition, &config)?;
    let trace_path = dir.path().join("trace.csv");
    io::write_trace(&res.trace, &trace_path)?;
    Ok((shape, io::read_trace(&trace_path)?))
}

fn main() -> blockgreedy::Result<()> {
    let ((n, p, nnz), trace) = run_example()?;
    println!("samples = {n}, features = {p}, nonzeros = {nnz}");
    println!("{}", io::TRACE_HEADER);
    for r in trace {
        println!("{},{:.4},{:.8},{},{:.3e}", r.iteration, r.elapsed_seconds, r.objective, r.nnz, r.max_abs_eta);
    }
    Ok(())
}
