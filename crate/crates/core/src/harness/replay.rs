//! Replays of explicit BB84 sequences, for table-style walkthroughs.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::protocols::{
    bb84_decision, run_bb84_replay, DecisionRule, PrepareSlot, ReplayPlan, SessionRecord, Transcript,
};

use super::run::{TrialSummary, VERSION};

/// Replay input. Bits are `0`/`1`, bases `+`/`x`; in `eve_bases` a `-`
/// marks slots Eve leaves alone. Error slots are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayFile {
    pub alice_bits: String,
    pub alice_bases: String,
    pub bob_bases: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eve_bases: Option<String>,
    #[serde(default)]
    pub error_slots: Vec<usize>,
    /// Seeds the measurement draws that the sequences leave open.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub decision: DecisionRule,
}

impl ReplayFile {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::new("", e.message().to_string()))?;
        let file: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." { String::new() } else { path };
            ConfigError::new(path, e.into_inner().message().to_string())
        })?;
        file.plan()?;
        crate::channel::check_probability("decision.threshold", file.decision.threshold)?;
        Ok(file)
    }

    pub fn plan(&self) -> Result<ReplayPlan, ConfigError> {
        ReplayPlan::from_symbols(
            &self.alice_bits,
            &self.alice_bases,
            &self.bob_bases,
            self.eve_bases.as_deref(),
            self.error_slots.clone(),
        )
        .map_err(|e| ConfigError::new("replay", e.to_string()))
    }
}

/// One row of the per-slot walkthrough.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRow {
    /// 1-based.
    pub slot: usize,
    pub alice_bit: u8,
    pub alice_basis: char,
    pub eve_basis: Option<char>,
    pub eve_bit: Option<u8>,
    pub forced_error: bool,
    pub bob_basis: char,
    pub bob_outcome: Option<u8>,
    pub bases_match: bool,
    /// Whether Bob's sifted bit equals Alice's; `None` for discarded slots.
    pub correct: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub version: String,
    pub replay: ReplayFile,
    pub rows: Vec<ReplayRow>,
    pub summary: TrialSummary,
}

impl ReplayReport {
    /// 0 when the decision is to continue, 2 on abort.
    pub fn exit_code(&self) -> i32 {
        if self.summary.aborted {
            2
        } else {
            0
        }
    }
}

fn rows(record: &SessionRecord, file: &ReplayFile) -> Vec<ReplayRow> {
    let Transcript::PrepareMeasure(slots) = &record.transcript else {
        unreachable!("replays are BB84 sessions");
    };
    slots
        .iter()
        .map(|s: &PrepareSlot| {
            let eve = record.eve.get(s.slot);
            let bases_match = s.alice_basis == s.bob_basis;
            ReplayRow {
                slot: s.slot + 1,
                alice_bit: s.alice_bit,
                alice_basis: s.alice_basis.symbol(),
                eve_basis: eve.and_then(|e| e.basis).map(|b| b.symbol()),
                eve_bit: eve.and_then(|e| e.bit),
                forced_error: file.error_slots.contains(&(s.slot + 1)),
                bob_basis: s.bob_basis.symbol(),
                bob_outcome: s.bob_outcome,
                bases_match,
                correct: (bases_match && s.bob_outcome.is_some()).then(|| s.bob_outcome == Some(s.alice_bit)),
            }
        })
        .collect()
}

/// Replays the sequences and applies the replay's decision rule (aggregate
/// error rate, threshold 0.5, unless the file says otherwise).
pub fn run_replay(file: &ReplayFile) -> Result<ReplayReport, ConfigError> {
    let plan = file.plan()?;
    let mut record = run_bb84_replay(&plan, file.seed);
    let decision = bb84_decision(&record, &file.decision);
    record.apply_decision(decision);
    Ok(ReplayReport {
        version: VERSION.to_string(),
        replay: file.clone(),
        rows: rows(&record, file),
        summary: TrialSummary::from_record(0, &record, None),
    })
}
