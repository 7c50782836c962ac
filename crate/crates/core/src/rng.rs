//! Seeded random streams.
//!
//! Every replication derives its generators from a single `u64` seed. Each
//! consumer (environment noise, algorithm choices, mixing weights, coupling
//! resamples) reads from its own ChaCha stream so that changing how often one
//! consumer draws never shifts the numbers another consumer sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type used throughout the simulations.
pub type SimRng = ChaCha8Rng;

/// Named substream identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Environment,
    Algorithm,
    Weights,
    Resampling,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Environment => 1,
            Stream::Algorithm => 2,
            Stream::Weights => 3,
            Stream::Resampling => 4,
        }
    }
}

/// Build the generator for `stream` under `seed`.
///
/// `salt` separates algorithms that share a seed: paired runs use the same
/// environment stream but distinct algorithm-side streams.
pub fn stream_rng(seed: u64, stream: Stream, salt: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = match stream {
        Stream::Environment => stream.id(),
        _ => stream.id() + 16 * salt,
    };
    rng.set_stream(id);
    rng
}

/// The four generators a single run consumes.
#[derive(Debug, Clone)]
pub struct RngStreams {
    pub environment: SimRng,
    pub algorithm: SimRng,
    pub weights: SimRng,
    pub resampling: SimRng,
}

impl RngStreams {
    pub fn new(seed: u64, salt: u64) -> Self {
        Self {
            environment: stream_rng(seed, Stream::Environment, salt),
            algorithm: stream_rng(seed, Stream::Algorithm, salt),
            weights: stream_rng(seed, Stream::Weights, salt),
            resampling: stream_rng(seed, Stream::Resampling, salt),
        }
    }
}

/// Seed for replication `index` under `base_seed`.
pub fn replication_seed(base_seed: u64, index: usize) -> u64 {
    base_seed.wrapping_add(index as u64)
}
