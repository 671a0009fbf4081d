//! AGM06: Alice picks one of three measurements, Bob one of two. The pair
//! `(A0, B1)` yields the raw key; the other combinations of `{A1, A2}` and
//! `{B1, B2}` estimate a CHSH value.
//!
//! Bob inverts every outcome, so on a singlet his results are correlated
//! with Alice's: `E′(a, b) = cos(a − b)`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bell::ChshSettings;
use crate::channel::{AdversaryConfig, ChannelConfig, EveLog};
use crate::quantum::MeasurementSetting;
use crate::rng::{SeedStreams, StreamId};

use super::decision::bell_decision;
use super::physical::{eve_pair_guess, PairLayer, PairSource};
use super::record::{PairPhase, PairSlot, ProtocolId, SessionRecord, Transcript};

/// Spin measurement angles for `A0, A1, A2` and `B1, B2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agm06Settings {
    pub alice: [MeasurementSetting; 3],
    pub bob: [MeasurementSetting; 2],
}

impl Default for Agm06Settings {
    /// `A0 = B1 = π/4` for key agreement; `A1 = 0, A2 = π/2, B2 = −π/4`
    /// spaced for the maximal CHSH value `2√2`.
    fn default() -> Self {
        let s = MeasurementSetting::from_const;
        Self {
            alice: [s(FRAC_PI_4), s(0.0), s(FRAC_PI_2)],
            bob: [s(FRAC_PI_4), s(-FRAC_PI_4)],
        }
    }
}

impl Agm06Settings {
    /// `a = A1, a′ = A2, b = B1, b′ = B2`.
    pub fn chsh(&self) -> ChshSettings {
        ChshSettings {
            a: self.alice[1],
            a_prime: self.alice[2],
            b: self.bob[0],
            b_prime: self.bob[1],
        }
    }
}

/// Runs AGM06 with the default angles.
pub fn run_agm06(
    n_pairs: usize,
    source: &PairSource,
    channel: &ChannelConfig,
    adversary: &AdversaryConfig,
    seed: u64,
) -> SessionRecord {
    run_agm06_with(n_pairs, source, channel, adversary, &Agm06Settings::default(), seed)
}

/// Runs an AGM06 session: `x ∈ {0,1,2}` and `y ∈ {1,2}` uniformly per pair.
/// `Q` is taken from `(x=0, y=1)` pairs only. The session aborts unless the
/// CHSH estimate on `{A1, A2} × {B1, B2}` violates the local bound beyond
/// its statistical band.
pub fn run_agm06_with(
    n_pairs: usize,
    source: &PairSource,
    channel: &ChannelConfig,
    adversary: &AdversaryConfig,
    settings: &Agm06Settings,
    seed: u64,
) -> SessionRecord {
    assert!(n_pairs >= 1, "a session needs at least one pair");
    let streams = SeedStreams::new(seed);
    let mut alice_rng = streams.stream(StreamId::AliceBases);
    let mut bob_rng = streams.stream(StreamId::BobBases);
    let mut layer = PairLayer::new(source, channel, adversary, &streams);
    let mut eve_log = EveLog::default();
    let mut slots = Vec::with_capacity(n_pairs);

    for slot in 0..n_pairs {
        let x = alice_rng.random_range(0..3u8);
        let y = bob_rng.random_range(1..3u8);
        let a = settings.alice[usize::from(x)];
        let b = settings.bob[usize::from(y - 1)];
        let sent = layer.send(slot, a, b);
        let eve_guess = sent.eve.as_ref().and_then(eve_pair_guess);
        if let Some(rec) = sent.eve {
            eve_log.push(rec);
        }
        slots.push(PairSlot {
            slot,
            phase: PairPhase::Normal,
            alice_choice: x,
            bob_choice: y,
            alice_setting: a,
            bob_setting: b,
            alice_outcome: sent.alice,
            bob_outcome: sent.bob.map(|s| s.flipped()),
            eve_guess,
        });
    }

    let mut record = SessionRecord::assemble(
        ProtocolId::Agm06,
        seed,
        Transcript::EntangledPairs(slots),
        Some(settings.chsh()),
        eve_log,
        !matches!(adversary, AdversaryConfig::None),
    );
    let decision = bell_decision(&record);
    record.apply_decision(decision);
    record
}
