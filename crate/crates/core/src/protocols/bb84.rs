//! BB84 with rectilinear and diagonal bases, plus a replay mode that takes
//! every random choice from explicit sequences.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;

use crate::channel::{intercept_resend_with, AdversaryConfig, ChannelConfig, EveLog};
use crate::error::ReplayError;
use crate::quantum::{measure_photon_with, Basis, BasisLabel, Pulse};
use crate::rng::{SeedStreams, StreamId};

use super::physical::{PhysicalLayer, SlotSend};
use super::record::{PrepareSlot, ProtocolId, SessionRecord, Transcript};

fn random_basis<R: Rng + ?Sized>(rng: &mut R) -> Basis {
    if rng.random::<bool>() {
        Basis::DIAGONAL
    } else {
        Basis::RECTILINEAR
    }
}

/// Runs a BB84 session of `n_slots` slots.
pub fn run_bb84(n_slots: usize, channel: &ChannelConfig, adversary: &AdversaryConfig, seed: u64) -> SessionRecord {
    assert!(n_slots >= 1, "a session needs at least one slot");
    let streams = SeedStreams::new(seed);
    let mut alice_bits = streams.stream(StreamId::AliceBits);
    let mut alice_bases = streams.stream(StreamId::AliceBases);
    let mut bob_bases = streams.stream(StreamId::BobBases);
    let mut layer = PhysicalLayer::new(channel, adversary, &streams);
    let mut eve_log = EveLog::default();
    let mut slots = Vec::with_capacity(n_slots);

    for slot in 0..n_slots {
        let bit = u8::from(alice_bits.random::<bool>());
        let alice_basis = random_basis(&mut alice_bases);
        let bob_basis = random_basis(&mut bob_bases);
        let SlotSend {
            photons_sent,
            photons_received,
            bob_outcome,
            eve,
        } = layer.send(slot, alice_basis.encode(bit), bob_basis);

        let mut eve_guess = None;
        if let Some(mut rec) = eve {
            // A stored photon is measured once Alice's basis is public.
            if rec.stored_polarization.is_some() && bob_outcome.is_some() {
                rec.resolve_in_basis(&alice_basis, layer.eve_rng());
            }
            rec.stored_polarization = None;
            eve_guess = rec.bit;
            eve_log.push(rec);
        }

        slots.push(PrepareSlot {
            slot,
            alice_bit: bit,
            alice_basis: alice_basis.label(),
            sarg04_state: None,
            announcement: None,
            photons_sent,
            photons_received,
            bob_basis: bob_basis.label(),
            bob_outcome,
            eve_guess,
        });
    }

    SessionRecord::assemble(
        ProtocolId::Bb84,
        seed,
        Transcript::PrepareMeasure(slots),
        None,
        eve_log,
        !matches!(adversary, AdversaryConfig::None),
    )
}

/// Explicit per-slot choices for a replayed BB84 session.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayPlan {
    pub alice_bits: Vec<u8>,
    pub alice_bases: Vec<BasisLabel>,
    pub bob_bases: Vec<BasisLabel>,
    /// Eve's basis per slot, `None` where she leaves the photon alone.
    pub eve_bases: Vec<Option<BasisLabel>>,
    /// 1-based slots at which the channel flips the photon.
    pub error_slots: Vec<usize>,
}

fn parse_bits(s: &str) -> Result<Vec<u8>, ReplayError> {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(ReplayError::Symbol {
                name: "alice_bits",
                symbol: c,
            }),
        })
        .collect()
}

fn parse_bases(name: &'static str, s: &str) -> Result<Vec<BasisLabel>, ReplayError> {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| BasisLabel::from_symbol(c).ok_or(ReplayError::Symbol { name, symbol: c }))
        .collect()
}

fn parse_eve_bases(s: &str) -> Result<Vec<Option<BasisLabel>>, ReplayError> {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '-' | '.' => Ok(None),
            _ => BasisLabel::from_symbol(c).map(Some).ok_or(ReplayError::Symbol {
                name: "eve_bases",
                symbol: c,
            }),
        })
        .collect()
}

impl ReplayPlan {
    /// Validates lengths and error slots. An empty `eve_bases` means no Eve.
    pub fn new(
        alice_bits: Vec<u8>,
        alice_bases: Vec<BasisLabel>,
        bob_bases: Vec<BasisLabel>,
        eve_bases: Vec<Option<BasisLabel>>,
        error_slots: Vec<usize>,
    ) -> Result<Self, ReplayError> {
        let n = alice_bits.len();
        if n == 0 {
            return Err(ReplayError::Empty);
        }
        let check = |name, got| {
            if got == n {
                Ok(())
            } else {
                Err(ReplayError::LengthMismatch { name, got, expected: n })
            }
        };
        check("alice_bases", alice_bases.len())?;
        check("bob_bases", bob_bases.len())?;
        let eve_bases = if eve_bases.is_empty() { vec![None; n] } else { eve_bases };
        check("eve_bases", eve_bases.len())?;
        for (name, labels) in [("alice_bases", &alice_bases), ("bob_bases", &bob_bases)] {
            if labels.contains(&BasisLabel::Custom) {
                return Err(ReplayError::Symbol { name, symbol: '?' });
            }
        }
        if eve_bases.contains(&Some(BasisLabel::Custom)) {
            return Err(ReplayError::Symbol {
                name: "eve_bases",
                symbol: '?',
            });
        }
        if let Some(&slot) = error_slots.iter().find(|&&s| s == 0 || s > n) {
            return Err(ReplayError::SlotOutOfRange { slot, len: n });
        }
        Ok(Self {
            alice_bits,
            alice_bases,
            bob_bases,
            eve_bases,
            error_slots,
        })
    }

    /// Builds a plan from table-style strings: bits as `0`/`1`, bases as
    /// `+`/`x`, and Eve's bases with `-` for untouched slots. Whitespace is
    /// ignored.
    pub fn from_symbols(
        alice_bits: &str,
        alice_bases: &str,
        bob_bases: &str,
        eve_bases: Option<&str>,
        error_slots: Vec<usize>,
    ) -> Result<Self, ReplayError> {
        Self::new(
            parse_bits(alice_bits)?,
            parse_bases("alice_bases", alice_bases)?,
            parse_bases("bob_bases", bob_bases)?,
            eve_bases.map(parse_eve_bases).transpose()?.unwrap_or_default(),
            error_slots,
        )
    }

    pub fn len(&self) -> usize {
        self.alice_bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alice_bits.is_empty()
    }

    fn has_error(&self, slot: usize) -> bool {
        self.error_slots.contains(&(slot + 1))
    }
}

/// Replays a BB84 session over an ideal single-photon channel with the
/// plan's choices. A forced error rotates the photon by π/2 just before
/// Bob's detector. Only measurement outcomes are drawn from `seed`.
pub fn run_bb84_replay(plan: &ReplayPlan, seed: u64) -> SessionRecord {
    let streams = SeedStreams::new(seed);
    let mut eve_rng = streams.stream(StreamId::Eve);
    let mut detector = streams.stream(StreamId::BobDetector);
    let mut eve_log = EveLog::default();
    let mut slots = Vec::with_capacity(plan.len());

    for slot in 0..plan.len() {
        let bit = plan.alice_bits[slot];
        let alice_basis = plan.alice_bases[slot].basis().expect("validated basis");
        let bob_basis = plan.bob_bases[slot].basis().expect("validated basis");
        let mut pulse = Pulse::single(alice_basis.encode(bit), slot);
        let mut eve_guess = None;
        if let Some(label) = plan.eve_bases[slot] {
            let basis = label.basis().expect("validated basis");
            let (forwarded, rec) = intercept_resend_with(pulse, basis, eve_rng.random::<f64>());
            pulse = forwarded;
            eve_guess = rec.bit;
            eve_log.push(rec);
        }
        if plan.has_error(slot) {
            pulse.polarization = pulse.polarization.rotated(FRAC_PI_2);
        }
        let outcome = measure_photon_with(pulse.polarization, &bob_basis, detector.random::<f64>());
        slots.push(PrepareSlot {
            slot,
            alice_bit: bit,
            alice_basis: alice_basis.label(),
            sarg04_state: None,
            announcement: None,
            photons_sent: 1,
            photons_received: 1,
            bob_basis: bob_basis.label(),
            bob_outcome: Some(outcome),
            eve_guess,
        });
    }

    let eve_active = plan.eve_bases.iter().any(Option::is_some);
    SessionRecord::assemble(
        ProtocolId::Bb84,
        seed,
        Transcript::PrepareMeasure(slots),
        None,
        eve_log,
        eve_active,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_slot_replay_with_equal_bases() {
        let plan = ReplayPlan::from_symbols("1", "x", "x", None, vec![]).unwrap();
        let r = run_bb84_replay(&plan, 0);
        assert_eq!(r.sifted_key_a, vec![1]);
        assert_eq!(r.sifted_key_b, vec![1]);
    }

    #[test]
    fn replay_validation() {
        assert_eq!(
            ReplayPlan::from_symbols("10", "+", "++", None, vec![]),
            Err(ReplayError::LengthMismatch {
                name: "alice_bases",
                got: 1,
                expected: 2
            })
        );
        assert_eq!(
            ReplayPlan::from_symbols("10", "++", "++", None, vec![3]),
            Err(ReplayError::SlotOutOfRange { slot: 3, len: 2 })
        );
        assert!(matches!(
            ReplayPlan::from_symbols("12", "++", "++", None, vec![]),
            Err(ReplayError::Symbol { .. })
        ));
        assert_eq!(
            ReplayPlan::from_symbols("", "", "", None, vec![]),
            Err(ReplayError::Empty)
        );
    }

    #[test]
    fn clean_run_matches() {
        let r = run_bb84(2000, &ChannelConfig::ideal(), &AdversaryConfig::None, 9);
        assert_eq!(r.sifted_key_a, r.sifted_key_b);
        assert!(r.verify_transcript());
    }
}
