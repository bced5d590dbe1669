//! Seeded random streams. Every consumer gets its own ChaCha stream keyed by
//! `(seed, purpose)`, so no operation shares generator state with another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Init = 1,
    Shuffle = 2,
    TieResample = 3,
    Projection = 4,
    Latent = 5,
    FeatureNoise = 6,
    RaterNoise = 7,
    Folds = 8,
    TrainVal = 9,
}

pub fn stream(seed: u64, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}
