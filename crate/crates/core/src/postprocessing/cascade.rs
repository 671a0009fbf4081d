//! Cascade-style reconciliation: block parities, bisection inside mismatching
//! blocks, and back-tracking into earlier passes whenever a correction
//! changes the parity of a block checked before.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::PostprocessError;

use super::parity;

/// Block size of the first pass and number of passes; each later pass
/// doubles the block size and works on a fresh public shuffle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSchedule {
    pub initial_block: usize,
    pub passes: usize,
}

impl BlockSchedule {
    pub const DEFAULT_PASSES: usize = 4;

    pub fn new(initial_block: usize, passes: usize) -> Result<Self, PostprocessError> {
        if initial_block == 0 {
            return Err(PostprocessError::Schedule("initial block size must be positive".into()));
        }
        if passes == 0 {
            return Err(PostprocessError::Schedule("at least one pass required".into()));
        }
        Ok(Self { initial_block, passes })
    }

    /// First block `max(4, ⌈0.73/q⌉)`, so a block holds well under one error
    /// on average. Estimates below 1% are treated as 1%.
    pub fn for_qber(qber: f64, passes: usize) -> Self {
        let q = qber.max(0.01);
        Self {
            initial_block: ((0.73 / q).ceil() as usize).max(4),
            passes: passes.max(1),
        }
    }

    pub fn block_size(&self, pass: usize, n: usize) -> usize {
        self.initial_block
            .saturating_mul(1usize.checked_shl(pass as u32).unwrap_or(usize::MAX))
            .min(n.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconciliation {
    /// Bob's corrected key.
    pub key_b: Vec<u8>,
    /// Every parity Alice disclosed.
    pub leaked_bits: usize,
    pub corrections: usize,
}

struct Pass {
    order: Vec<usize>,
    /// `position → index in order`.
    index_of: Vec<usize>,
    block: usize,
}

impl Pass {
    fn block_of(&self, pos: usize) -> usize {
        self.index_of[pos] / self.block
    }

    fn range(&self, b: usize) -> std::ops::Range<usize> {
        let n = self.order.len();
        (b * self.block).min(n)..((b + 1) * self.block).min(n)
    }

    fn n_blocks(&self) -> usize {
        self.order.len().div_ceil(self.block)
    }
}

struct State<'a> {
    a: &'a [u8],
    b: Vec<u8>,
    leaked: usize,
    corrections: usize,
}

impl State<'_> {
    fn parity_a(&self, order: &[usize]) -> u8 {
        parity(order.iter().map(|&i| self.a[i]))
    }

    fn parity_b(&self, order: &[usize]) -> u8 {
        parity(order.iter().map(|&i| self.b[i]))
    }

    fn mismatched(&self, order: &[usize]) -> bool {
        self.parity_a(order) != self.parity_b(order)
    }

    /// Halves a block with odd parity difference until one position is
    /// left, disclosing one parity per step, and flips it.
    fn bisect(&mut self, order: &[usize]) -> usize {
        let (mut lo, mut hi) = (0, order.len());
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            self.leaked += 1;
            if self.mismatched(&order[lo..mid]) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let pos = order[lo];
        self.b[pos] ^= 1;
        self.corrections += 1;
        pos
    }
}

/// Reconciles Bob's key against Alice's. Pass 0 uses positions in order;
/// later passes use shuffles drawn from the public `rng`.
pub fn parity_reconcile<R: Rng + ?Sized>(
    key_a: &[u8],
    key_b: &[u8],
    schedule: &BlockSchedule,
    rng: &mut R,
) -> Result<Reconciliation, PostprocessError> {
    if key_a.len() != key_b.len() {
        return Err(PostprocessError::LengthMismatch(key_a.len(), key_b.len()));
    }
    let n = key_a.len();
    let mut st = State {
        a: key_a,
        b: key_b.to_vec(),
        leaked: 0,
        corrections: 0,
    };
    if n == 0 {
        return Ok(Reconciliation {
            key_b: st.b,
            leaked_bits: 0,
            corrections: 0,
        });
    }

    let mut passes: Vec<Pass> = Vec::with_capacity(schedule.passes);
    for p in 0..schedule.passes {
        let mut order: Vec<usize> = (0..n).collect();
        if p > 0 {
            order.shuffle(rng);
        }
        let mut index_of = vec![0; n];
        for (i, &pos) in order.iter().enumerate() {
            index_of[pos] = i;
        }
        passes.push(Pass {
            order,
            index_of,
            block: schedule.block_size(p, n),
        });
        let current = passes.len() - 1;

        for blk in 0..passes[current].n_blocks() {
            let range = passes[current].range(blk);
            st.leaked += 1;
            if !st.mismatched(&passes[current].order[range.clone()]) {
                continue;
            }
            let mut queue = vec![(current, blk)];
            while let Some((q, qb)) = queue.pop() {
                let pass = &passes[q];
                let members = &pass.order[pass.range(qb)];
                // Alice's parity of this block is already public.
                if !st.mismatched(members) {
                    continue;
                }
                let pos = st.bisect(members);
                for (r, other) in passes.iter().enumerate() {
                    if r == q {
                        continue;
                    }
                    // Blocks of the current pass not yet reached get their
                    // own top-level check.
                    let ob = other.block_of(pos);
                    if r == current && ob > blk {
                        continue;
                    }
                    queue.push((r, ob));
                }
            }
        }
    }

    Ok(Reconciliation {
        key_b: st.b,
        leaked_bits: st.leaked,
        corrections: st.corrections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{SeedStreams, StreamId};

    fn rng() -> crate::rng::SimRng {
        SeedStreams::new(4).stream(StreamId::Public)
    }

    #[test]
    fn equal_keys_leak_only_block_parities() {
        let a: Vec<u8> = (0..100).map(|i| (i * 7 % 3 == 0) as u8).collect();
        let s = BlockSchedule::new(10, 3).unwrap();
        let r = parity_reconcile(&a, &a, &s, &mut rng()).unwrap();
        assert_eq!(r.corrections, 0);
        // 10 + 5 + 3 blocks.
        assert_eq!(r.leaked_bits, 18);
    }

    #[test]
    fn single_error_block_of_eight() {
        let a = vec![0u8; 64];
        let mut b = a.clone();
        b[37] = 1;
        let s = BlockSchedule::new(8, 1).unwrap();
        let r = parity_reconcile(&a, &b, &s, &mut rng()).unwrap();
        assert_eq!(r.key_b, a);
        assert_eq!(r.corrections, 1);
        assert_eq!(r.leaked_bits, 8 + 3);
    }

    #[test]
    fn schedule_from_qber() {
        assert_eq!(BlockSchedule::for_qber(0.05, 4).initial_block, 15);
        assert_eq!(BlockSchedule::for_qber(0.0, 4).initial_block, 73);
        assert_eq!(BlockSchedule::for_qber(0.5, 4).initial_block, 4);
        assert!(BlockSchedule::new(0, 2).is_err());
        assert_eq!(BlockSchedule::new(8, 4).unwrap().block_size(3, 20), 20);
    }
}
