//! Reproducible random streams.
//!
//! Every random draw in a run comes from a stream addressed by the run's
//! master seed and a path of integers (for example `[tag, M, trial]`). The
//! same address always yields the same stream, whatever the order in which
//! addresses are visited, so results do not depend on thread count or
//! scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type used for all simulations.
pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream for `master` at `path`.
///
/// The master seed fixes the ChaCha key; the path is folded into the 64-bit
/// stream selector.
pub fn substream(master: u64, path: &[u64]) -> StreamRng {
    let mut rng = StreamRng::seed_from_u64(master);
    let mut selector = splitmix64(path.len() as u64);
    for &p in path {
        selector = splitmix64(selector ^ splitmix64(p));
    }
    rng.set_stream(selector);
    rng
}
