//! Counter-addressed random streams.
//!
//! Every random draw is addressed by `(seed, stream, position)`: the seed keys a
//! ChaCha generator, the stream selects an independent ChaCha stream (ensemble
//! member, Monte-Carlo batch) and the position is an explicit word offset
//! (time step). Results therefore never depend on how work is split across
//! threads.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Random source positioned at a fixed address.
pub struct Stream {
    rng: ChaCha12Rng,
}

impl Stream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Stream { rng }
    }

    /// Stream positioned at block `block` of `words_per_block` 32-bit words.
    pub fn at(seed: u64, stream: u64, block: u64, words_per_block: u64) -> Self {
        let mut s = Self::new(seed, stream);
        s.rng.set_word_pos(block as u128 * words_per_block as u128);
        s
    }

    /// Uniform on (0, 1], never 0.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        // 53 random bits mapped to (0, 1]
        ((self.rng.next_u64() >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Pair of independent standard normals from exactly two 64-bit draws.
    #[inline]
    pub fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.uniform_open();
        let u2 = self.uniform_open();
        let r = (-2.0 * u1.ln()).sqrt();
        let th = 2.0 * std::f64::consts::PI * u2;
        (r * th.cos(), r * th.sin())
    }

    pub fn rng(&mut self) -> &mut ChaCha12Rng {
        &mut self.rng
    }
}

/// 32-bit words consumed by one [`Stream::normal_pair`].
pub const WORDS_PER_PAIR: u64 = 4;
