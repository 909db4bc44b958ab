// Regularization path for l1-regularized logistic regression.

use blockgreedy::solver;
use blockgreedy::{cluster_features, synthetic, LossKind, SolverConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `(lambda, nnz, training accuracy)` per path point, largest lambda first.
pub fn run_example() -> blockgreedy::Result<Vec<(f64, usize, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let base = synthetic::random_problem(&mut rng, 1_000, 500, 0.05, LossKind::Logistic, 0.0)?;
    let partition = cluster_features(base.design(), 16)?;
    let config = SolverConfig::new(16, 16).with_max_iterations(200_000);

    let mut path = Vec::new();
    let mut lambda = base.lambda_max() * 0.9;
    for _ in 0..5 {
        let problem = base.with_lambda(lambda)?;
        let res = solver::run(&problem, &partition, &config)?;
        let correct = problem
            .labels()
            .iter()
            .zip(&res.predictions)
            .filter(|(y, t)| **y * **t > 0.0)
            .count();
        path.push((lambda, res.weights.nnz(), correct as f64 / problem.n_samples() as f64));
        lambda /= 4.0;
    }
    Ok(path)
}

fn main() -> blockgreedy::Result<()> {
    println!("{:>12} {:>6} {:>9}", "lambda", "nnz", "accuracy");
    for (lambda, nnz, acc) in run_example()? {
        println!("{lambda:>12.3e} {nnz:>6} {acc:>9.3}");
    }
    Ok(())
}
