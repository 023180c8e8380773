//! Seeded random streams.
//!
//! Every replication draws from its own ChaCha stream keyed by
//! `(seed, stream)`, so results do not depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn stream(seed: u64, stream: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw on the open interval (0, 1).
pub fn open_unit(rng: &mut Stream) -> f64 {
    use rand::Rng;
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}
