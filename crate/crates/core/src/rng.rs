//! Uniform random sources and the seeded stream layout.
//!
//! Every sampler takes a caller-supplied [`UniformSource`]. Seeded bulk
//! draws use [`SeedStreams`]: the 64-bit seed keys a ChaCha20 generator
//! (`seed_from_u64`), and draw `i` is produced by stream `i / CHUNK_LEN`
//! starting from word position zero. The prefix of a run therefore does not
//! depend on `n` or on how chunks are scheduled across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

/// Source of independent uniforms on `[0, 1)`.
pub trait UniformSource {
    fn next_uniform(&mut self) -> f64;
}

impl<R: RngCore + ?Sized> UniformSource for R {
    fn next_uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Replays a fixed list of uniforms, cycling when exhausted.
#[derive(Debug, Clone)]
pub struct ReplaySource {
    values: Vec<f64>,
    pos: usize,
}

impl ReplaySource {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "replay source needs at least one value");
        Self { values, pos: 0 }
    }

    /// A source that always yields `u`.
    pub fn constant(u: f64) -> Self {
        Self::new(vec![u])
    }
}

impl UniformSource for ReplaySource {
    fn next_uniform(&mut self) -> f64 {
        let u = self.values[self.pos % self.values.len()];
        self.pos += 1;
        u
    }
}

/// Number of draws served by one ChaCha stream.
pub const CHUNK_LEN: usize = 4096;

/// Splittable seeding: one generator per chunk of [`CHUNK_LEN`] draws.
#[derive(Debug, Clone, Copy)]
pub struct SeedStreams {
    seed: u64,
}

impl SeedStreams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, index: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    /// Draw `n` values, chunk `c` from stream `c`. Chunks run in parallel;
    /// output order is deterministic.
    pub fn draw<T, F>(&self, n: usize, draw_one: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut ChaCha20Rng) -> T + Sync,
    {
        let chunks = n.div_ceil(CHUNK_LEN);
        (0..chunks)
            .into_par_iter()
            .flat_map_iter(|c| {
                let mut rng = self.stream(c as u64);
                let len = CHUNK_LEN.min(n - c * CHUNK_LEN);
                (0..len).map(|_| draw_one(&mut rng)).collect::<Vec<_>>()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_is_independent_of_n() {
        let s = SeedStreams::new(7);
        let short = s.draw(10, |r| r.next_uniform());
        let long = s.draw(3 * CHUNK_LEN + 5, |r| r.next_uniform());
        assert_eq!(&long[..10], &short[..]);
        let again = s.draw(3 * CHUNK_LEN + 5, |r| r.next_uniform());
        assert_eq!(long, again);
    }

    #[test]
    fn streams_differ() {
        let s = SeedStreams::new(1);
        let a = s.stream(0).next_u64();
        let b = s.stream(1).next_u64();
        assert_ne!(a, b);
    }

    #[test]
    fn uniforms_in_unit_interval() {
        let mut rng = SeedStreams::new(3).stream(0);
        for _ in 0..10_000 {
            let u = rng.next_uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn replay_cycles() {
        let mut r = ReplaySource::new(vec![0.1, 0.2]);
        assert_eq!(r.next_uniform(), 0.1);
        assert_eq!(r.next_uniform(), 0.2);
        assert_eq!(r.next_uniform(), 0.1);
    }
}
