//! Reproducible, independently seekable random streams.
//!
//! Every trajectory in an ensemble owns its own ChaCha8 stream addressed by
//! `(master seed, stream index)`, so results do not depend on how work is
//! split across threads.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    index: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(index);
        RngStream { seed, index, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Packs (experiment point, replicate, sample) into a 64-bit stream index.
///
/// 16 bits of point, 16 bits of replicate and 32 bits of sample number.
pub fn stream_index(point: u32, replicate: u32, sample: u64) -> u64 {
    debug_assert!(point < 1 << 16 && replicate < 1 << 16 && sample < 1 << 32);
    ((point as u64) << 48) | ((replicate as u64) << 32) | (sample & 0xffff_ffff)
}
