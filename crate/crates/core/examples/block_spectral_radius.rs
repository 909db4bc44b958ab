// Block spectral radius and the parallelism it allows.

use blockgreedy::spectral::{spectral_report, SpectralReport};
use blockgreedy::{cluster_features, random_partition, synthetic};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Reports for a clustered and a random partition of the same design.
pub fn run_example() -> blockgreedy::Result<(SpectralReport, SpectralReport)> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let planted = synthetic::planted_blocks(&mut rng, 4, 6, 10);
    let m = &planted.design;
    let clustered = cluster_features(m, 4)?;
    let random = random_partition(&mut rng, m.n_cols(), 4)?;
    let ps = [1, 2, 4];
    Ok((
        spectral_report(m, &clustered, &ps, 10_000, 1)?,
        spectral_report(m, &random, &ps, 10_000, 1)?,
    ))
}

fn main() -> blockgreedy::Result<()> {
    let (clustered, random) = run_example()?;
    println!("# clustered partition\n{}", clustered.to_key_values());
    println!("# random partition\n{}", random.to_key_values());
    Ok(())
}
