//! E91: key from equal-angle measurements on entangled pairs, security from
//! a CHSH test on a publicly chosen subset of pairs.

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

/// Spin measurement angles. Polarization analyzers at `φ` correspond to
/// spin directions `2φ`; the angles here are spin angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct E91Settings {
    pub alice: [MeasurementSetting; 3],
    pub bob: [MeasurementSetting; 3],
    /// Settings used on check pairs.
    pub chsh: ChshSettings,
}

impl Default for E91Settings {
    /// Alice `{0, π/4, π/2}`, Bob `{π/4, π/2, 3π/4}`. Key pairs are the
    /// equal angles π/4 and π/2; the check uses `a = π/2, a′ = 0, b = π/4,
    /// b′ = 3π/4`, where the singlet gives `S = −2√2`.
    fn default() -> Self {
        let s = MeasurementSetting::from_const;
        Self {
            alice: [s(0.0), s(FRAC_PI_4), s(FRAC_PI_2)],
            bob: [s(FRAC_PI_4), s(FRAC_PI_2), s(3.0 * FRAC_PI_4)],
            chsh: ChshSettings {
                a: s(FRAC_PI_2),
                a_prime: s(0.0),
                b: s(FRAC_PI_4),
                b_prime: s(3.0 * FRAC_PI_4),
            },
        }
    }
}

impl E91Settings {
    /// `(alice, bob)` index pairs with equal angles.
    pub fn key_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, a) in self.alice.iter().enumerate() {
            for (j, b) in self.bob.iter().enumerate() {
                if a == b {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct E91Options {
    pub settings: E91Settings,
    /// Probability that a pair is publicly assigned to the check phase.
    pub check_fraction: f64,
}

impl Default for E91Options {
    fn default() -> Self {
        Self {
            settings: E91Settings::default(),
            check_fraction: 0.5,
        }
    }
}

/// Runs E91 with default settings.
pub fn run_e91(
    n_pairs: usize,
    source: &PairSource,
    channel: &ChannelConfig,
    adversary: &AdversaryConfig,
    seed: u64,
) -> SessionRecord {
    run_e91_with(n_pairs, source, channel, adversary, &E91Options::default(), seed)
}

/// Runs an E91 session. A public coin assigns each pair to the check phase
/// (settings drawn from `a, a′` and `b, b′`) or the normal phase (settings
/// drawn from the three per side; equal angles give key bits). The session
/// aborts unless the CHSH estimate violates the local bound beyond its
/// statistical band.
pub fn run_e91_with(
    n_pairs: usize,
    source: &PairSource,
    channel: &ChannelConfig,
    adversary: &AdversaryConfig,
    options: &E91Options,
    seed: u64,
) -> SessionRecord {
    assert!(n_pairs >= 1, "a session needs at least one pair");
    let streams = SeedStreams::new(seed);
    let mut public = streams.stream(StreamId::Public);
    let mut alice_rng = streams.stream(StreamId::AliceBases);
    let mut bob_rng = streams.stream(StreamId::BobBases);
    let mut layer = PairLayer::new(source, channel, adversary, &streams);
    let settings = &options.settings;
    let mut eve_log = EveLog::default();
    let mut slots = Vec::with_capacity(n_pairs);

    for slot in 0..n_pairs {
        let check = public.random::<f64>() < options.check_fraction;
        let (phase, alice_choice, bob_choice, a, b) = if check {
            let i = alice_rng.random_range(0..2u8);
            let j = bob_rng.random_range(0..2u8);
            let a = if i == 0 { settings.chsh.a } else { settings.chsh.a_prime };
            let b = if j == 0 { settings.chsh.b } else { settings.chsh.b_prime };
            (PairPhase::Check, i, j, a, b)
        } else {
            let i = alice_rng.random_range(0..3u8);
            let j = bob_rng.random_range(0..3u8);
            (
                PairPhase::Normal,
                i,
                j,
                settings.alice[usize::from(i)],
                settings.bob[usize::from(j)],
            )
        };
        let sent = layer.send(slot, a, b);
        let eve_guess = sent.eve.as_ref().and_then(eve_pair_guess);
        if let Some(rec) = sent.eve {
            eve_log.push(rec);
        }
        slots.push(PairSlot {
            slot,
            phase,
            alice_choice,
            bob_choice,
            alice_setting: a,
            bob_setting: b,
            alice_outcome: sent.alice,
            bob_outcome: sent.bob,
            eve_guess,
        });
    }

    let mut record = SessionRecord::assemble(
        ProtocolId::E91,
        seed,
        Transcript::EntangledPairs(slots),
        Some(settings.chsh),
        eve_log,
        !matches!(adversary, AdversaryConfig::None),
    );
    let decision = bell_decision(&record);
    record.apply_decision(decision);
    record
}
