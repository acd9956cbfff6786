//! Per-trial seed derivation.
//!
//! `derive_seed(master, trial, stream)` feeds the three words through
//! splitmix64 one after another, so every (trial, stream) pair gets its own
//! well-mixed 64-bit seed for a `ChaCha8Rng`.

/// AP placement stream.
pub const STREAM_PLACEMENT: u64 = 1;
/// User trajectory stream.
pub const STREAM_USER: u64 = 2;
/// Blocker `k` uses stream `STREAM_BLOCKER_BASE + k`.
pub const STREAM_BLOCKER_BASE: u64 = 100;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One splitmix64 output for state `x`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, trial: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ trial) ^ stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn splitmix_reference_values() {
        // First outputs of the reference generator seeded with 0.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(GOLDEN_GAMMA), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn streams_do_not_collide() {
        let mut seen = HashSet::new();
        for trial in 0..200 {
            for stream in [STREAM_PLACEMENT, STREAM_USER, 100, 101, 102, 103] {
                assert!(seen.insert(derive_seed(42, trial, stream)));
            }
        }
    }

    #[test]
    fn derivation_is_pure() {
        assert_eq!(derive_seed(7, 3, STREAM_USER), derive_seed(7, 3, STREAM_USER));
        assert_ne!(derive_seed(7, 3, STREAM_USER), derive_seed(8, 3, STREAM_USER));
    }
}
