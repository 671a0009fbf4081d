//! Session transcripts and the statistics derived from them.

use serde::{Deserialize, Serialize};

use crate::bell::{estimate_agm06_s, estimate_chsh, ChshEstimate, ChshSettings, CorrelationTally};
use crate::channel::EveLog;
use crate::quantum::{BasisLabel, MeasurementSetting, Spin};

use super::sarg04::{sarg04_conclusive, Sarg04Announcement, Sarg04State, Sifting};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolId {
    Bb84,
    Sarg04,
    E91,
    Agm06,
}

impl ProtocolId {
    pub fn name(self) -> &'static str {
        match self {
            ProtocolId::Bb84 => "bb84",
            ProtocolId::Sarg04 => "sarg04",
            ProtocolId::E91 => "e91",
            ProtocolId::Agm06 => "agm06",
        }
    }

    pub fn uses_pairs(self) -> bool {
        matches!(self, ProtocolId::E91 | ProtocolId::Agm06)
    }
}

impl std::fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One prepare-and-measure slot (BB84 or SARG04).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepareSlot {
    pub slot: usize,
    pub alice_bit: u8,
    /// Preparation basis. For SARG04 this is the family of Alice's state.
    pub alice_basis: BasisLabel,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sarg04_state: Option<Sarg04State>,
    /// SARG04 public announcement.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub announcement: Option<Sarg04Announcement>,
    pub photons_sent: u32,
    pub photons_received: u32,
    pub bob_basis: BasisLabel,
    /// `None` when Bob detected nothing.
    pub bob_outcome: Option<u8>,
    /// Eve's best guess at Alice's key bit for this slot, if she has one.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eve_guess: Option<u8>,
}

impl PrepareSlot {
    pub fn detected(&self) -> bool {
        self.bob_outcome.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairPhase {
    /// Key-generation pairs (E91 normal phase, every AGM06 pair).
    Normal,
    /// E91 Bell-test pairs.
    Check,
}

/// One entangled-pair slot (E91 or AGM06).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSlot {
    pub slot: usize,
    pub phase: PairPhase,
    /// Index into the protocol's setting list (AGM06: `x`, `y`).
    pub alice_choice: u8,
    pub bob_choice: u8,
    pub alice_setting: MeasurementSetting,
    pub bob_setting: MeasurementSetting,
    pub alice_outcome: Spin,
    /// Bob's recorded outcome; `None` if lost. AGM06 records it with Bob's
    /// sign flip applied, E91 records the raw outcome and inverts key bits.
    pub bob_outcome: Option<Spin>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eve_guess: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "slots", rename_all = "kebab-case")]
pub enum Transcript {
    PrepareMeasure(Vec<PrepareSlot>),
    EntangledPairs(Vec<PairSlot>),
}

impl Transcript {
    pub fn len(&self) -> usize {
        match self {
            Transcript::PrepareMeasure(s) => s.len(),
            Transcript::EntangledPairs(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum AbortReason {
    /// The configured error metric exceeded the threshold.
    ErrorThreshold { metric: String, value: f64, threshold: f64 },
    /// The Bell test did not show a violation beyond the statistical band.
    BellNotViolated { s: f64, sigma: f64 },
    /// No sifted key survived.
    NoSiftedKey,
}

impl std::fmt::Display for AbortReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AbortReason::ErrorThreshold {
                metric,
                value,
                threshold,
            } => {
                write!(f, "{metric} {value:.6} exceeds threshold {threshold}")
            }
            AbortReason::BellNotViolated { s, sigma } => {
                write!(f, "no Bell violation: |S| = {:.6} ± {:.6}", s.abs(), sigma)
            }
            AbortReason::NoSiftedKey => f.write_str("no sifted key"),
        }
    }
}

/// AGM06-specific estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agm06Statistics {
    /// `Q = P(a ≠ b | x = 0, y = 1)`, from key-pair slots only.
    pub q: Option<f64>,
    pub q_samples: usize,
    /// The probability-form statistic over `{A1, A2} × {B1, B2}`.
    pub probability_s: f64,
    pub probability_s_sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EveStatistics {
    /// Sifted slots on which Eve holds a guess.
    pub known: usize,
    /// Fraction of those guesses equal to Alice's sifted bit.
    pub agreement: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStatistics {
    pub n_slots: usize,
    pub detected: usize,
    pub raw_len: usize,
    pub sifted_len: usize,
    /// Sifted bits per transmitted slot.
    pub sift_fraction: f64,
    pub sifted_errors: usize,
    /// Mismatch fraction of the sifted keys; `None` if nothing was sifted.
    pub qber: Option<f64>,
    /// Fraction of all transmitted slots that did not yield a correct
    /// sifted bit (basis mismatches, losses and errors all count).
    pub aggregate_error_rate: f64,
    pub chsh: Option<ChshEstimate>,
    pub agm06: Option<Agm06Statistics>,
    pub eve: Option<EveStatistics>,
}

/// Full record of one protocol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub protocol: ProtocolId,
    pub seed: u64,
    pub transcript: Transcript,
    pub raw_key_a: Vec<u8>,
    pub raw_key_b: Vec<u8>,
    pub sifted_key_a: Vec<u8>,
    pub sifted_key_b: Vec<u8>,
    /// Slot index of each sifted bit.
    pub sifted_slots: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tally: Option<CorrelationTally>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub chsh_settings: Option<ChshSettings>,
    pub eve: EveLog,
    pub statistics: SessionStatistics,
    pub abort: Option<AbortReason>,
}

/// Keys and tallies rebuilt from a transcript.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedKeys {
    pub raw_key_a: Vec<u8>,
    pub raw_key_b: Vec<u8>,
    pub sifted_key_a: Vec<u8>,
    pub sifted_key_b: Vec<u8>,
    pub sifted_slots: Vec<usize>,
    pub eve_guesses: Vec<Option<u8>>,
    pub tally: Option<CorrelationTally>,
    pub q_counts: Option<(usize, usize)>,
    pub detected: usize,
}

/// Rebuilds keys, tallies and Eve's guesses from the per-slot transcript.
pub fn derive_keys(protocol: ProtocolId, transcript: &Transcript) -> DerivedKeys {
    let mut d = DerivedKeys {
        raw_key_a: Vec::new(),
        raw_key_b: Vec::new(),
        sifted_key_a: Vec::new(),
        sifted_key_b: Vec::new(),
        sifted_slots: Vec::new(),
        eve_guesses: Vec::new(),
        tally: None,
        q_counts: None,
        detected: 0,
    };
    match transcript {
        Transcript::PrepareMeasure(slots) => {
            for s in slots {
                let Some(outcome) = s.bob_outcome else { continue };
                d.detected += 1;
                d.raw_key_a.push(s.alice_bit);
                d.raw_key_b.push(outcome);
                let bob_bit = match protocol {
                    ProtocolId::Sarg04 => {
                        let announcement = s.announcement.expect("sarg04 slot carries announcement");
                        let observed = Sarg04State::from_measurement(s.bob_basis, outcome);
                        match sarg04_conclusive(observed, &announcement) {
                            Sifting::Conclusive(bit) => Some(bit),
                            Sifting::Inconclusive => None,
                        }
                    }
                    _ => (s.bob_basis == s.alice_basis).then_some(outcome),
                };
                if let Some(bit) = bob_bit {
                    d.sifted_key_a.push(s.alice_bit);
                    d.sifted_key_b.push(bit);
                    d.sifted_slots.push(s.slot);
                    d.eve_guesses.push(s.eve_guess);
                }
            }
        }
        Transcript::EntangledPairs(slots) => {
            let mut tally = CorrelationTally::new();
            let mut q = (0usize, 0usize);
            for s in slots {
                let Some(bob) = s.bob_outcome else { continue };
                d.detected += 1;
                match protocol {
                    ProtocolId::E91 => {
                        if s.phase == PairPhase::Check {
                            tally.record(s.alice_setting, s.bob_setting, s.alice_outcome, bob);
                            continue;
                        }
                        // Anticorrelated source: Bob inverts his bits.
                        let bob_bit = bob.flipped().bit();
                        d.raw_key_a.push(s.alice_outcome.bit());
                        d.raw_key_b.push(bob_bit);
                        if s.alice_setting == s.bob_setting {
                            d.sifted_key_a.push(s.alice_outcome.bit());
                            d.sifted_key_b.push(bob_bit);
                            d.sifted_slots.push(s.slot);
                            d.eve_guesses.push(s.eve_guess);
                        }
                    }
                    _ => {
                        d.raw_key_a.push(s.alice_outcome.bit());
                        d.raw_key_b.push(bob.bit());
                        if s.alice_choice == 0 && s.bob_choice == 1 {
                            d.sifted_key_a.push(s.alice_outcome.bit());
                            d.sifted_key_b.push(bob.bit());
                            d.sifted_slots.push(s.slot);
                            d.eve_guesses.push(s.eve_guess);
                            q.1 += 1;
                            if s.alice_outcome != bob {
                                q.0 += 1;
                            }
                        } else if s.alice_choice != 0 {
                            tally.record(s.alice_setting, s.bob_setting, s.alice_outcome, bob);
                        }
                    }
                }
            }
            d.tally = Some(tally);
            if protocol == ProtocolId::Agm06 {
                d.q_counts = Some(q);
            }
        }
    }
    d
}

/// Computes session statistics from derived keys.
pub fn compute_statistics(
    protocol: ProtocolId,
    n_slots: usize,
    keys: &DerivedKeys,
    chsh_settings: Option<&ChshSettings>,
    eve_active: bool,
) -> SessionStatistics {
    let sifted_len = keys.sifted_key_a.len();
    let sifted_errors = keys
        .sifted_key_a
        .iter()
        .zip(&keys.sifted_key_b)
        .filter(|(a, b)| a != b)
        .count();
    let qber = (sifted_len > 0).then(|| sifted_errors as f64 / sifted_len as f64);
    let n = n_slots.max(1) as f64;
    let correct = (sifted_len - sifted_errors) as f64;

    let chsh = match (keys.tally.as_ref(), chsh_settings) {
        (Some(t), Some(cs)) => estimate_chsh(t, cs).ok(),
        _ => None,
    };
    let agm06 = if protocol == ProtocolId::Agm06 {
        let (errors, samples) = keys.q_counts.unwrap_or((0, 0));
        let (probability_s, probability_s_sigma) = match (keys.tally.as_ref(), chsh_settings) {
            (Some(t), Some(cs)) => estimate_agm06_s(t, cs).unwrap_or((f64::NAN, f64::NAN)),
            _ => (f64::NAN, f64::NAN),
        };
        Some(Agm06Statistics {
            q: (samples > 0).then(|| errors as f64 / samples as f64),
            q_samples: samples,
            probability_s,
            probability_s_sigma,
        })
    } else {
        None
    };
    let eve = eve_active.then(|| {
        let mut known = 0;
        let mut agree = 0;
        for (guess, alice) in keys.eve_guesses.iter().zip(&keys.sifted_key_a) {
            if let Some(g) = guess {
                known += 1;
                if g == alice {
                    agree += 1;
                }
            }
        }
        EveStatistics {
            known,
            agreement: (known > 0).then(|| agree as f64 / known as f64),
        }
    });

    SessionStatistics {
        n_slots,
        detected: keys.detected,
        raw_len: keys.raw_key_a.len(),
        sifted_len,
        sift_fraction: sifted_len as f64 / n,
        sifted_errors,
        qber,
        aggregate_error_rate: (n - correct) / n,
        chsh,
        agm06,
        eve,
    }
}

impl SessionRecord {
    /// Assembles a record, deriving keys and statistics from the transcript.
    pub(crate) fn assemble(
        protocol: ProtocolId,
        seed: u64,
        transcript: Transcript,
        chsh_settings: Option<ChshSettings>,
        eve: EveLog,
        eve_active: bool,
    ) -> Self {
        let keys = derive_keys(protocol, &transcript);
        let statistics = compute_statistics(protocol, transcript.len(), &keys, chsh_settings.as_ref(), eve_active);
        SessionRecord {
            protocol,
            seed,
            transcript,
            raw_key_a: keys.raw_key_a,
            raw_key_b: keys.raw_key_b,
            sifted_key_a: keys.sifted_key_a,
            sifted_key_b: keys.sifted_key_b,
            sifted_slots: keys.sifted_slots,
            tally: keys.tally,
            chsh_settings,
            eve,
            statistics,
            abort: None,
        }
    }

    pub fn n_slots(&self) -> usize {
        self.transcript.len()
    }

    /// Re-derives keys and statistics from the transcript and checks that they
    /// match what the record reports.
    pub fn verify_transcript(&self) -> bool {
        let keys = derive_keys(self.protocol, &self.transcript);
        let stats = compute_statistics(
            self.protocol,
            self.transcript.len(),
            &keys,
            self.chsh_settings.as_ref(),
            self.statistics.eve.is_some(),
        );
        keys.raw_key_a == self.raw_key_a
            && keys.raw_key_b == self.raw_key_b
            && keys.sifted_key_a == self.sifted_key_a
            && keys.sifted_key_b == self.sifted_key_b
            && keys.sifted_slots == self.sifted_slots
            && keys.tally == self.tally
            && same_statistics(&stats, &self.statistics)
    }
}

// NaN-tolerant comparison: AGM06 statistics are NaN when a setting pair is empty.
fn same_statistics(a: &SessionStatistics, b: &SessionStatistics) -> bool {
    let a = serde_json::to_string(a).unwrap_or_default();
    let b = serde_json::to_string(b).unwrap_or_default();
    a == b
}
