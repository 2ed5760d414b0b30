//! Named random substreams derived from one root seed.
//!
//! Every run owns a root seed. Agent activation draws and oracle draws come
//! from distinct ChaCha streams keyed by that seed, and each outer iteration
//! gets its own oracle stream, so changing the inner budget `T_k` never
//! shifts the activation sequence or the oracle draws of other iterations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const ACTIVATION_STREAM: u64 = 0;
const AUX_STREAM: u64 = 1;
const ORACLE_STREAM_BASE: u64 = 1 << 32;

/// Stream for the `(i_k, j_k)` activation draws of a run.
pub fn activation_stream(seed: u64) -> StreamRng {
    stream(seed, ACTIVATION_STREAM)
}

/// Oracle stream for the inner loop of outer iteration `k`.
pub fn oracle_stream(seed: u64, k: usize) -> StreamRng {
    stream(seed, ORACLE_STREAM_BASE + k as u64)
}

/// Stream for one-off auxiliary draws (constant estimation, subsampling).
pub fn aux_stream(seed: u64) -> StreamRng {
    stream(seed, AUX_STREAM)
}

fn stream(seed: u64, id: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
