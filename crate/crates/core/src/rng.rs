//! Counter-based random streams.
//!
//! Every path index owns its own ChaCha8 stream, keyed by the master seed and
//! addressed by `(path, channel)`. Generation order across threads therefore
//! never affects the numbers a path sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Independent Brownian drivers a path may draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    /// Drives the variance and the hedgeable part of the price.
    B = 0,
    /// Orthogonal noise.
    W = 1,
    /// Additional components of a d-dimensional driver start here.
    Extra = 2,
}

const CHANNELS_PER_PATH: u64 = 64;

/// Master seed plus a tag separating independent experiment substreams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomStream {
    seed: u64,
    tag: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, tag: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// A stream statistically independent of `self` and of every other tag.
    pub fn substream(&self, tag: u64) -> Self {
        Self {
            seed: self.seed,
            tag: splitmix64(self.tag ^ splitmix64(tag.wrapping_add(1))),
        }
    }

    fn key(&self) -> [u8; 32] {
        let mut key = [0u8; 32];
        let mut state = self.seed ^ self.tag.rotate_left(17);
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        key
    }

    /// Generator for one `(path, channel)` cell. `component` selects among
    /// the extra channels of a multi-dimensional driver.
    pub fn generator(&self, path: u64, channel: Channel, component: u64) -> NormalSource {
        let mut rng = ChaCha8Rng::from_seed(self.key());
        let lane = channel as u64 + component;
        assert!(lane < CHANNELS_PER_PATH, "too many driver components");
        rng.set_stream(path * CHANNELS_PER_PATH + lane);
        NormalSource { rng }
    }
}

/// Standard normal draws from one substream.
pub struct NormalSource {
    rng: ChaCha8Rng,
}

impl NormalSource {
    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Brownian increment over a step of length `dt`.
    #[inline]
    pub fn increment(&mut self, sqrt_dt: f64) -> f64 {
        sqrt_dt * self.standard_normal()
    }
}
