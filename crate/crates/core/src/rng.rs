//! Seeded random streams.
//!
//! Every stream is a ChaCha20 generator keyed by `seed_from_u64(master_seed)`
//! with the 64-bit ChaCha stream id selecting the replication, so replications
//! are disjoint keystreams of one key and each is reproducible on its own.
//! Uniforms are `rand`'s 53-bit `[0, 1)` conversion; normals use the cosine
//! branch of Box–Muller, consuming exactly two uniforms per draw.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Identifier recorded in every trace.
pub const RNG_ALGORITHM_ID: &str = "chacha20-stream/u53/box-muller-cos";

pub type TrialRng = ChaCha20Rng;

/// Stream for a single run seeded directly by the user.
pub fn stream(seed: u64) -> TrialRng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Stream `stream_id` under `master_seed`.
pub fn substream(master_seed: u64, stream_id: u64) -> TrialRng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id);
    rng
}

/// Uniform on `[lo, hi)`.
pub fn uniform(rng: &mut TrialRng, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.gen();
    lo + u * (hi - lo)
}

/// Standard normal via Box–Muller.
pub fn standard_normal(rng: &mut TrialRng) -> f64 {
    // 1 - u keeps the log argument in (0, 1].
    let u1 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
