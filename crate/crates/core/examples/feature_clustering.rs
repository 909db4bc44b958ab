// Correlation clustering of features on a design with planted groups.

use blockgreedy::partition::{max_cross_block_dot, partition_stats};
use blockgreedy::{cluster_features, random_partition, synthetic};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct Comparison {
    pub recovered: bool,
    pub clustered_cross_dot: f64,
    pub random_cross_dot: f64,
    pub load_balance: f64,
}

pub fn run_example() -> blockgreedy::Result<Comparison> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let planted = synthetic::planted_blocks(&mut rng, 8, 12, 20);
    let clustered = cluster_features(&planted.design, 8)?;
    let random = random_partition(&mut rng, planted.design.n_cols(), 8)?;

    let mut got = clustered.blocks().to_vec();
    let mut want = planted.groups.blocks().to_vec();
    got.sort();
    want.sort();
    let stats = partition_stats(&planted.design, &clustered, None)?;
    Ok(Comparison {
        recovered: got == want,
        clustered_cross_dot: max_cross_block_dot(&planted.design, &clustered).value,
        random_cross_dot: max_cross_block_dot(&planted.design, &random).value,
        load_balance: stats.load_balance_ratio(),
    })
}

fn main() -> blockgreedy::Result<()> {
    let c = run_example()?;
    println!("planted groups recovered: {}", c.recovered);
    println!("max cross-block dot, clustered: {:.4}", c.clustered_cross_dot);
    println!("max cross-block dot, random:    {:.4}", c.random_cross_dot);
    println!("block nnz load balance (max/mean): {:.3}", c.load_balance);
    Ok(())
}
