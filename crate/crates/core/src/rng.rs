//! Deterministic random number generation.
//!
//! Every random choice in the engine flows through [`SeededRng`], a ChaCha8
//! stream cipher generator. The same seed yields the same byte stream on
//! every platform, and [`SeededRng::split`] derives independent streams from
//! one seed, so per-sample generators can be handed out in any order without
//! coupling their draws.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Derives the `stream`-th independent generator of `seed`.
    ///
    /// Streams with different ids never overlap, so `split(s, i)` can seed
    /// per-sample work that is scheduled in any order.
    pub fn split(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
}
