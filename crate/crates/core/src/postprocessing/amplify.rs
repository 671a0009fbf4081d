use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::PostprocessError;

use super::parity;

/// Upper bound on the number of key bits Eve may know.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EveBound {
    pub t: usize,
}

impl EveBound {
    pub fn new(t: usize) -> Self {
        Self { t }
    }

    /// `t = ⌈n · factor · qber⌉ + leaked`, capped at `n`.
    pub fn from_qber(n: usize, qber: f64, factor: f64, leaked_bits: usize) -> Self {
        let from_errors = (n as f64 * factor * qber).ceil().max(0.0) as usize;
        Self {
            t: from_errors.saturating_add(leaked_bits).min(n),
        }
    }
}

fn output_len(n: usize, bound: EveBound, safety_margin: usize) -> Result<usize, PostprocessError> {
    let removed = bound.t.saturating_add(safety_margin);
    if n <= removed {
        return Err(PostprocessError::NoExtractableKey {
            len: n,
            bound: bound.t,
            margin: safety_margin,
        });
    }
    Ok(n - removed)
}

fn pack(key: &[u8]) -> Vec<u64> {
    key.chunks(64)
        .map(|chunk| {
            chunk
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, &b)| acc | (u64::from(b & 1) << i))
        })
        .collect()
}

/// Shortens `key` to `n − t − s` bits, each the parity of an independent
/// public random subset that holds every position with probability 1/2
/// (half the key on average). Both parties get the same output from the
/// same key and rng state.
pub fn privacy_amplify<R: Rng + ?Sized>(
    key: &[u8],
    bound: EveBound,
    safety_margin: usize,
    rng: &mut R,
) -> Result<Vec<u8>, PostprocessError> {
    let n = key.len();
    let m = output_len(n, bound, safety_margin)?;
    let words = pack(key);
    let tail_mask = match n % 64 {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    };
    Ok((0..m)
        .map(|_| {
            let ones: u32 = words
                .iter()
                .enumerate()
                .map(|(i, &w)| {
                    let mask = rng.random::<u64>();
                    let mask = if i + 1 == words.len() { mask & tail_mask } else { mask };
                    (w & mask).count_ones()
                })
                .sum();
            (ones & 1) as u8
        })
        .collect())
}

/// Privacy amplification with explicit 0-based subsets, one per output bit.
/// The subset count must equal `n − t − s`.
pub fn privacy_amplify_with_subsets(
    key: &[u8],
    bound: EveBound,
    safety_margin: usize,
    subsets: &[Vec<usize>],
) -> Result<Vec<u8>, PostprocessError> {
    let n = key.len();
    let m = output_len(n, bound, safety_margin)?;
    if subsets.len() != m {
        return Err(PostprocessError::LengthMismatch(subsets.len(), m));
    }
    subsets
        .iter()
        .map(|subset| {
            subset
                .iter()
                .map(|&i| {
                    key.get(i)
                        .copied()
                        .ok_or(PostprocessError::SubsetIndex { index: i, len: n })
                })
                .collect::<Result<Vec<u8>, _>>()
                .map(parity)
        })
        .collect()
}

/// Length of the confirmation digest; it is public once exchanged.
pub const CONFIRMATION_BITS: usize = 64;

/// First 64 bits of SHA-256 over the key length and the packed bits.
pub fn key_digest(key: &[u8]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update((key.len() as u64).to_le_bytes());
    let packed: Vec<u8> = key
        .chunks(8)
        .map(|chunk| chunk.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b & 1) << i)))
        .collect();
    hasher.update(&packed);
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha-256 digest has 32 bytes"))
}

/// Both sides exchange digests of their final keys. Empty keys confirm
/// vacuously.
pub fn confirm_key(key_a: &[u8], key_b: &[u8]) -> bool {
    if key_a.is_empty() && key_b.is_empty() {
        return true;
    }
    key_digest(key_a) == key_digest(key_b)
}
