//! Seeded random streams.
//!
//! Every stochastic operation takes an explicit `&mut SimRng`. Child streams
//! are derived from a master seed and a path of integer labels, so work that
//! is fanned out (per qubit, per device, per Monte Carlo seed) draws the same
//! numbers whether it runs serially or on a thread pool.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate. ChaCha output is specified, so
/// streams are stable across platforms and releases.
pub type SimRng = ChaCha8Rng;

/// A master seed from which independent, labelled streams are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedStream {
    seed: u64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derive a child seed for `label`. Children of children are fine:
    /// `s.child(3).child(7)` is a distinct stream from `s.child(7).child(3)`.
    pub fn child(&self, label: u64) -> SeedStream {
        SeedStream {
            seed: splitmix64(self.seed ^ splitmix64(label.wrapping_add(0x5851_F42D_4C95_7F2D))),
        }
    }

    pub fn rng(&self) -> SimRng {
        SimRng::seed_from_u64(self.seed)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
