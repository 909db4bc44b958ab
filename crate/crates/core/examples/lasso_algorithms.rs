// One lasso problem solved by every named algorithm.
//
// Run with `cargo run --release --example lasso_algorithms`.

use blockgreedy::solver::{self, kkt_certificate};
use blockgreedy::{synthetic, Algorithm, LossKind, Partition, SolverConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct Outcome {
    pub name: String,
    pub objective: f64,
    pub iterations: usize,
    pub nnz: usize,
    pub certified: bool,
}

pub fn run_example() -> blockgreedy::Result<Vec<Outcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let base = synthetic::random_problem(&mut rng, 400, 800, 0.03, LossKind::Squared, 0.0)?;
    let problem = base.with_lambda(0.05 * base.lambda_max())?;
    let p = problem.n_features();

    let algorithms = [
        Algorithm::Scd,
        Algorithm::Shotgun { parallel: 4 },
        Algorithm::Greedy,
        Algorithm::ThreadGreedy { blocks: 8 },
        Algorithm::BlockGreedy { blocks: 16, parallel: 4 },
    ];
    let mut outcomes = Vec::new();
    for algorithm in algorithms {
        let config = SolverConfig::for_algorithm(algorithm, p).with_max_iterations(2_000_000);
        let partition = match config.num_blocks {
            b if b == p => Partition::singletons(p)?,
            1 => Partition::single_block(p)?,
            b => blockgreedy::cluster_features(problem.design(), b)?,
        };
        let res = solver::run(&problem, &partition, &config)?;
        let kkt = kkt_certificate(&problem, &res.weights, &res.predictions, config.beta_policy, config.tolerance);
        outcomes.push(Outcome {
            name: algorithm.to_string(),
            objective: res.objective,
            iterations: res.iterations,
            nnz: res.weights.nnz(),
            certified: kkt.satisfied(),
        });
    }
    Ok(outcomes)
}

fn main() -> blockgreedy::Result<()> {
    println!("{:<28} {:>14} {:>10} {:>6} {:>5}", "algorithm", "objective", "iterations", "nnz", "kkt");
    for o in run_example()? {
        println!(
            "{:<28} {:>14.8} {:>10} {:>6} {:>5}",
            o.name, o.objective, o.iterations, o.nnz, o.certified
        );
    }
    Ok(())
}
