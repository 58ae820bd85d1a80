//! Shared fixtures for the benchmark targets.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use congest_testing::generate;
use congest_testing::Graph;

pub fn dense_instance(n: usize, m: usize) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    generate::gnm(n, m, &mut rng).unwrap()
}
