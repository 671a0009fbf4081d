//! SARG04: BB84 states, but the bit is carried by the basis family and
//! sifting uses announced non-orthogonal state pairs instead of bases.
//!
//! `|±x⟩` (diagonal polarizations π/4, 3π/4) encode 0 and `|±z⟩`
//! (rectilinear polarizations 0, π/2) encode 1. For each slot Alice
//! announces her state together with one state of the other family. Bob's
//! result is conclusive only when it is orthogonal to one of the two
//! announced states.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{AdversaryConfig, ChannelConfig, EveLog};
use crate::quantum::{Basis, BasisLabel, Polarization};
use crate::rng::{SeedStreams, StreamId};

use super::physical::{PhysicalLayer, SlotSend};
use super::record::{PrepareSlot, ProtocolId, SessionRecord, Transcript};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Diagonal states, bit 0.
    X,
    /// Rectilinear states, bit 1.
    Z,
}

impl Family {
    pub fn bit(self) -> u8 {
        match self {
            Family::X => 0,
            Family::Z => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 {
            Family::X
        } else {
            Family::Z
        }
    }

    pub fn basis(self) -> Basis {
        match self {
            Family::X => Basis::DIAGONAL,
            Family::Z => Basis::RECTILINEAR,
        }
    }

    pub fn other(self) -> Family {
        match self {
            Family::X => Family::Z,
            Family::Z => Family::X,
        }
    }

    fn from_label(label: BasisLabel) -> Option<Family> {
        match label {
            BasisLabel::Diagonal => Some(Family::X),
            BasisLabel::Rectilinear => Some(Family::Z),
            BasisLabel::Custom => None,
        }
    }
}

/// One of the four states `|±x⟩, |±z⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sarg04State {
    pub family: Family,
    /// `true` for the `+` state.
    pub plus: bool,
}

impl Sarg04State {
    pub const ALL: [Sarg04State; 4] = [
        Sarg04State {
            family: Family::X,
            plus: true,
        },
        Sarg04State {
            family: Family::X,
            plus: false,
        },
        Sarg04State {
            family: Family::Z,
            plus: true,
        },
        Sarg04State {
            family: Family::Z,
            plus: false,
        },
    ];

    pub fn bit(self) -> u8 {
        self.family.bit()
    }

    pub fn polarization(self) -> Polarization {
        self.family.basis().encode(u8::from(!self.plus))
    }

    /// The state a measurement in `basis` projected onto, given its outcome.
    pub fn from_measurement(basis: BasisLabel, outcome: u8) -> Self {
        let family = Family::from_label(basis).expect("SARG04 measurements use rectilinear or diagonal bases");
        Sarg04State {
            family,
            plus: outcome == 0,
        }
    }

    pub fn is_orthogonal_to(self, other: Sarg04State) -> bool {
        self.family == other.family && self.plus != other.plus
    }
}

/// The public pair `{|w x⟩, |w′ z⟩}`; one member is Alice's state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sarg04Announcement {
    pub x_state: Sarg04State,
    pub z_state: Sarg04State,
}

impl Sarg04Announcement {
    /// Pairs `sent` with `partner`; `None` unless exactly one is an x-state.
    pub fn new(sent: Sarg04State, partner: Sarg04State) -> Option<Self> {
        match (sent.family, partner.family) {
            (Family::X, Family::Z) => Some(Self {
                x_state: sent,
                z_state: partner,
            }),
            (Family::Z, Family::X) => Some(Self {
                x_state: partner,
                z_state: sent,
            }),
            _ => None,
        }
    }

    pub fn members(&self) -> [Sarg04State; 2] {
        [self.x_state, self.z_state]
    }

    pub fn contains(&self, s: Sarg04State) -> bool {
        self.x_state == s || self.z_state == s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sifting {
    Conclusive(u8),
    Inconclusive,
}

/// Bob's decision rule. An outcome orthogonal to one announced state rules
/// that state out, leaving the other.
pub fn sarg04_conclusive(observed: Sarg04State, announcement: &Sarg04Announcement) -> Sifting {
    let [x, z] = announcement.members();
    match (observed.is_orthogonal_to(x), observed.is_orthogonal_to(z)) {
        (true, false) => Sifting::Conclusive(z.bit()),
        (false, true) => Sifting::Conclusive(x.bit()),
        _ => Sifting::Inconclusive,
    }
}

/// Convenience form taking Bob's basis label and raw outcome bit.
pub fn sarg04_conclusive_measurement(
    bob_basis: BasisLabel,
    bob_outcome: u8,
    announcement: &Sarg04Announcement,
) -> Sifting {
    sarg04_conclusive(Sarg04State::from_measurement(bob_basis, bob_outcome), announcement)
}

/// Eve's guess of the key bit from an intercept-resend measurement: she
/// picks the announced state in the family she measured if her outcome
/// matches it, the other announced state otherwise.
fn eve_intercept_guess(announcement: &Sarg04Announcement, eve_basis: BasisLabel, eve_outcome: u8) -> u8 {
    let observed = Sarg04State::from_measurement(eve_basis, eve_outcome);
    let same_family = announcement
        .members()
        .into_iter()
        .find(|s| s.family == observed.family)
        .expect("announcement spans both families");
    if same_family == observed {
        observed.bit()
    } else {
        observed.family.other().bit()
    }
}

/// Runs a SARG04 session of `n_slots` slots.
pub fn run_sarg04(n_slots: usize, channel: &ChannelConfig, adversary: &AdversaryConfig, seed: u64) -> SessionRecord {
    assert!(n_slots >= 1, "a session needs at least one slot");
    let streams = SeedStreams::new(seed);
    let mut alice_bits = streams.stream(StreamId::AliceBits);
    let mut alice_choices = streams.stream(StreamId::AliceBases);
    let mut bob_bases = streams.stream(StreamId::BobBases);
    let mut layer = PhysicalLayer::new(channel, adversary, &streams);
    let mut eve_log = EveLog::default();
    let mut slots = Vec::with_capacity(n_slots);

    for slot in 0..n_slots {
        let family = Family::from_bit(u8::from(alice_bits.random::<bool>()));
        let sent = Sarg04State {
            family,
            plus: alice_choices.random::<bool>(),
        };
        let partner = Sarg04State {
            family: family.other(),
            plus: alice_choices.random::<bool>(),
        };
        let announcement = Sarg04Announcement::new(sent, partner).expect("families differ");
        let bob_basis = if bob_bases.random::<bool>() {
            Basis::DIAGONAL
        } else {
            Basis::RECTILINEAR
        };
        let SlotSend {
            photons_sent,
            photons_received,
            bob_outcome,
            eve,
        } = layer.send(slot, sent.polarization(), bob_basis);

        let mut eve_guess = None;
        if let Some(mut rec) = eve {
            if rec.stored_polarization.is_some() {
                if bob_outcome.is_some() {
                    let members = announcement.members();
                    if let Some(i) = rec.resolve_between(members.map(|s| s.polarization()), layer.eve_rng()) {
                        rec.bit = Some(members[i].bit());
                        eve_guess = rec.bit;
                    }
                }
            } else if let (Some(basis), Some(bit)) = (rec.basis, rec.bit) {
                eve_guess = Some(eve_intercept_guess(&announcement, basis, bit));
            }
            eve_log.push(rec);
        }

        slots.push(PrepareSlot {
            slot,
            alice_bit: sent.bit(),
            alice_basis: family.basis().label(),
            sarg04_state: Some(sent),
            announcement: Some(announcement),
            photons_sent,
            photons_received,
            bob_basis: bob_basis.label(),
            bob_outcome,
            eve_guess,
        });
    }

    SessionRecord::assemble(
        ProtocolId::Sarg04,
        seed,
        Transcript::PrepareMeasure(slots),
        None,
        eve_log,
        !matches!(adversary, AdversaryConfig::None),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{born_probability_zero, measure_photon};

    fn st(family: Family, plus: bool) -> Sarg04State {
        Sarg04State { family, plus }
    }

    #[test]
    fn worked_rule_examples() {
        let a = Sarg04Announcement::new(st(Family::X, true), st(Family::Z, true)).unwrap();
        // Bob measured z and saw −z: the +z member is excluded, so Alice sent +x.
        assert_eq!(
            sarg04_conclusive_measurement(BasisLabel::Rectilinear, 1, &a),
            Sifting::Conclusive(0)
        );
        assert_eq!(
            sarg04_conclusive_measurement(BasisLabel::Rectilinear, 0, &a),
            Sifting::Inconclusive
        );
        assert_eq!(
            sarg04_conclusive_measurement(BasisLabel::Diagonal, 1, &a),
            Sifting::Conclusive(1)
        );
    }

    #[test]
    fn announcement_requires_both_families() {
        assert!(Sarg04Announcement::new(st(Family::X, true), st(Family::X, false)).is_none());
    }

    /// Independent discriminator: an announced state is ruled out when the
    /// Born probability of Bob's observed outcome is zero for it.
    fn brute_force(basis: Basis, outcome: u8, a: &Sarg04Announcement) -> Sifting {
        let possible: Vec<Sarg04State> = a
            .members()
            .into_iter()
            .filter(|s| {
                let p0 = born_probability_zero(s.polarization(), &basis);
                let p = if outcome == 0 { p0 } else { 1.0 - p0 };
                p > 1e-12
            })
            .collect();
        match possible.as_slice() {
            [only] => Sifting::Conclusive(only.bit()),
            _ => Sifting::Inconclusive,
        }
    }

    #[test]
    fn exhaustive_truth_table_matches_brute_force() {
        let mut conclusive = 0;
        for sent in Sarg04State::ALL {
            for partner in Sarg04State::ALL.into_iter().filter(|p| p.family != sent.family) {
                let a = Sarg04Announcement::new(sent, partner).unwrap();
                for basis in [Basis::RECTILINEAR, Basis::DIAGONAL] {
                    for outcome in 0..2 {
                        let rule = sarg04_conclusive_measurement(basis.label(), outcome, &a);
                        assert_eq!(rule, brute_force(basis, outcome, &a));
                        // Whenever the outcome can occur for the sent state, a
                        // conclusive result names Alice's bit.
                        let p0 = born_probability_zero(sent.polarization(), &basis);
                        let possible = if outcome == 0 { p0 > 1e-12 } else { p0 < 1.0 - 1e-12 };
                        if let (Sifting::Conclusive(bit), true) = (rule, possible) {
                            assert_eq!(bit, sent.bit());
                            conclusive += 1;
                        }
                    }
                }
            }
        }
        // 4 states × 2 partners, each conclusive in exactly one reachable case.
        assert_eq!(conclusive, 8);
    }

    #[test]
    fn state_encoding() {
        let mut rng = SeedStreams::new(3).stream(StreamId::BobDetector);
        for s in Sarg04State::ALL {
            let basis = s.family.basis();
            let out = measure_photon(s.polarization(), &basis, &mut rng);
            assert_eq!(Sarg04State::from_measurement(basis.label(), out), s);
        }
    }

    #[test]
    fn clean_run_is_error_free() {
        let r = run_sarg04(4000, &ChannelConfig::ideal(), &AdversaryConfig::None, 5);
        assert_eq!(r.sifted_key_a, r.sifted_key_b);
        assert!(r.statistics.sifted_len > 0);
        assert!(r.verify_transcript());
    }
}
