use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Well-known substream ids. Every consumer of randomness in the pipeline draws from its own
/// substream of the run seed.
pub mod streams {
    pub const SPLIT: u64 = 1;
    pub const INIT: u64 = 2;
    pub const SHUFFLE: u64 = 3;
    pub const FLIPOUT: u64 = 4;
    pub const POWER_ITERATION: u64 = 5;
    pub const VALIDATION: u64 = 6;
    pub const PREDICT: u64 = 7;
}

/// Seeded, platform-independent random stream.
///
/// Backed by ChaCha8 keyed from the seed; the ChaCha stream id separates substreams, so two
/// streams with different ids never share keystream. Cloning copies the position, which is how
/// callers replay an identical sequence of draws.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream::with_stream(seed, 0)
    }

    fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngStream { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    /// Fresh independent stream derived from `(seed, stream id, id)`. Does not advance `self`.
    pub fn substream(&self, id: u64) -> RngStream {
        RngStream::with_stream(self.seed, splitmix64(self.stream ^ splitmix64(id)))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..=max`.
    pub fn below_inclusive(&mut self, max: u64) -> u64 {
        self.rng.random_range(0..=max)
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for x in out {
            *x = self.rng.sample(StandardNormal);
        }
    }

    pub fn normal_vec(&mut self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        self.fill_normal(&mut v);
        v
    }

    /// Fills `out` with ±1, one random bit per entry.
    pub fn fill_rademacher(&mut self, out: &mut [f64]) {
        for chunk in out.chunks_mut(64) {
            let bits = self.rng.next_u64();
            for (k, x) in chunk.iter_mut().enumerate() {
                *x = if (bits >> k) & 1 == 1 { 1.0 } else { -1.0 };
            }
        }
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below_inclusive(i as u64) as usize;
            items.swap(i, j);
        }
    }
}

/// `n` random signs drawn from `rng`.
pub fn rademacher(rng: &mut RngStream, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    rng.fill_rademacher(&mut v);
    v
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
