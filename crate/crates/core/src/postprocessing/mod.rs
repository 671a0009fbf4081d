//! Classical post-processing: error estimation, reconciliation, privacy
//! amplification and key confirmation.

mod amplify;
mod cascade;
mod estimate;
mod pipeline;

use serde::{Deserialize, Serialize};

use crate::error::PostprocessError;

pub use amplify::{
    confirm_key, key_digest, privacy_amplify, privacy_amplify_with_subsets, EveBound, CONFIRMATION_BITS,
};
pub use cascade::{parity_reconcile, BlockSchedule, Reconciliation};
pub use estimate::{estimate_qber, QberEstimate};
pub use pipeline::{run_pipeline, PipelineOutcome, PostprocessConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KeyStage {
    Raw,
    Sifted,
    Reconciled,
    Final,
}

impl std::fmt::Display for KeyStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KeyStage::Raw => "raw",
            KeyStage::Sifted => "sifted",
            KeyStage::Reconciled => "reconciled",
            KeyStage::Final => "final",
        })
    }
}

/// A key at some pipeline stage, with the parity information disclosed so far.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyMaterial {
    bits: Vec<u8>,
    stage: KeyStage,
    leaked_bits: usize,
}

impl KeyMaterial {
    pub fn new(bits: Vec<u8>, stage: KeyStage) -> Self {
        Self {
            bits,
            stage,
            leaked_bits: 0,
        }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn stage(&self) -> KeyStage {
        self.stage
    }

    pub fn leaked_bits(&self) -> usize {
        self.leaked_bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Moves to a later stage with new bits. Keys never grow and stages
    /// never go backwards.
    pub fn advance(self, stage: KeyStage, bits: Vec<u8>, extra_leak: usize) -> Result<Self, PostprocessError> {
        if stage <= self.stage {
            return Err(PostprocessError::StageOrder {
                from: self.stage.to_string(),
                to: stage.to_string(),
            });
        }
        assert!(bits.len() <= self.bits.len(), "post-processing never lengthens a key");
        Ok(Self {
            bits,
            stage,
            leaked_bits: self.leaked_bits + extra_leak,
        })
    }
}

pub(crate) fn parity(bits: impl IntoIterator<Item = u8>) -> u8 {
    bits.into_iter().fold(0, |acc, b| acc ^ (b & 1))
}
