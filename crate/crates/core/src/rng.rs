//! Counter-keyed random streams.
//!
//! Every random draw in the lab comes from a ChaCha8 stream selected by a
//! `(seed, stream id)` pair, where the stream id is a mix of the logical
//! coordinates of the draw (trial number, item, sub-bin, ...). Results are
//! therefore independent of evaluation order and thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keep streams for different purposes apart even when their
/// numeric coordinates coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Domain {
    Codebook = 1,
    Feedback = 2,
    Mixer = 3,
    Eavesdropper = 4,
    Trial = 5,
    ColumnBin = 6,
    Defective = 7,
    Session = 8,
    Audit = 9,
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fold a list of coordinates into one 64-bit key.
pub fn mix(domain: Domain, coords: &[u64]) -> u64 {
    let mut h = splitmix64(domain as u64);
    for &c in coords {
        h = splitmix64(h ^ splitmix64(c));
    }
    h
}

/// Child seed for the `counter`-th unit of work under `master`.
pub fn derive_seed(master: u64, domain: Domain, counter: u64) -> u64 {
    mix(domain, &[master, counter])
}

/// A ChaCha8 generator keyed by `seed` and positioned on the stream chosen by
/// `(domain, coords)`.
pub fn stream(seed: u64, domain: Domain, coords: &[u64]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(mix(domain, coords));
    rng
}
