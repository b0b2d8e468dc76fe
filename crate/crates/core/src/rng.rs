use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seed used when a caller does not provide one.
pub const DEFAULT_SEED: u64 = 0x5EED_0001;

/// Samples processed per independent RNG stream in parallel Monte Carlo.
pub const CHUNK: usize = 1 << 14;

/// Reproducible generator for one independent stream of a seeded run.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
