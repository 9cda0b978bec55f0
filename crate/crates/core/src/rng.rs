//! Counter-based SplitMix64 stream.
//!
//! Output `k` of the stream seeded with `s` is `mix(s + (k + 1) * GOLDEN)`,
//! so any block of draws can be produced independently of the others and
//! parallel generation does not depend on the number of workers.

pub const RNG_NAME: &str = "splitmix64";

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitMix64 {
    seed: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    /// Raw 64-bit output at position `index`.
    #[inline]
    pub fn at(&self, index: u64) -> u64 {
        mix(self.seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    /// Uniform in the open interval (0, 1) with 53 significant bits.
    #[inline]
    pub fn uniform_at(&self, index: u64) -> f64 {
        ((self.at(index) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        (0u64..).map(move |k| self.uniform_at(k))
    }

    /// An independent-looking stream for a sub-task, derived by mixing.
    pub fn derive(&self, label: u64) -> Self {
        Self { seed: mix(self.seed ^ mix(label.wrapping_add(GOLDEN))) }
    }
}
