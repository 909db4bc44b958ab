// Shotgun on strongly correlated features: small P descends, large P blows up.

use blockgreedy::solver;
use blockgreedy::spectral::theorem1_epsilon;
use blockgreedy::{synthetic, LossKind, Partition, Problem, SolverConfig};

pub struct Sweep {
    pub parallelism: usize,
    pub epsilon: f64,
    pub monotone: bool,
    pub final_objective: f64,
}

pub fn run_example() -> blockgreedy::Result<Vec<Sweep>> {
    let p = 64;
    let c = 0.99;
    let design = synthetic::constant_correlation(p, c);
    let mut y = vec![0.0; design.n_rows()];
    y[0] = 5.0;
    let problem = Problem::new(design, y, LossKind::Squared, 1e-4)?;
    let partition = Partition::singletons(p)?;
    // Every selection of k features has radius 1 + (k - 1) c; the worst
    // selection takes one feature from each of the p blocks.
    let rho = 1.0 + (p as f64 - 1.0) * c;

    let mut out = Vec::new();
    for par in [1, 2, 4, 32] {
        let mut config = SolverConfig::new(p, par).with_max_iterations(1_000).with_seed(0);
        config.trace.every_iterations = 1;
        let res = solver::run(&problem, &partition, &config)?;
        let monotone = res.trace.windows(2).all(|w| w[1].objective <= w[0].objective * (1.0 + 1e-12));
        out.push(Sweep {
            parallelism: par,
            epsilon: theorem1_epsilon(rho, p, par)?,
            monotone,
            final_objective: res.objective,
        });
    }
    Ok(out)
}

fn main() -> blockgreedy::Result<()> {
    println!("{:>3} {:>9} {:>9} {:>16}", "P", "epsilon", "monotone", "final objective");
    for s in run_example()? {
        println!("{:>3} {:>9.3} {:>9} {:>16.6e}", s.parallelism, s.epsilon, s.monotone, s.final_objective);
    }
    Ok(())
}
