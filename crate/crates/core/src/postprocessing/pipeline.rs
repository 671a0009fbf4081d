//! Sifted keys to confirmed final keys.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::PostprocessError;

use super::{
    confirm_key, estimate_qber, parity_reconcile, privacy_amplify, BlockSchedule, EveBound, KeyMaterial, KeyStage,
    CONFIRMATION_BITS,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PostprocessConfig {
    /// Fraction of the sifted key sacrificed to estimate the QBER.
    pub sample_fraction: f64,
    /// First-pass block size; derived from the QBER estimate when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_block: Option<usize>,
    pub passes: usize,
    /// Multiplier in the Eve bound `t = ⌈n · factor · qber⌉ + leaked`.
    pub eve_factor: f64,
    pub safety_margin: usize,
}

impl Default for PostprocessConfig {
    fn default() -> Self {
        Self {
            sample_fraction: 0.1,
            initial_block: None,
            passes: BlockSchedule::DEFAULT_PASSES,
            eve_factor: 2.0,
            safety_margin: 0,
        }
    }
}

/// What the pipeline did to one pair of sifted keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutcome {
    pub qber_estimate: Option<f64>,
    pub sample_size: usize,
    pub reconciled_len: usize,
    /// Parities disclosed during reconciliation.
    pub reconciliation_leak: usize,
    pub corrections: usize,
    /// Mismatches left after reconciliation (known only to the simulator).
    pub residual_errors: usize,
    pub eve_bound: usize,
    pub final_len: usize,
    pub confirmed: bool,
    /// All disclosed information, including the confirmation digest.
    pub leaked_bits: usize,
    #[serde(skip)]
    pub final_key_a: Vec<u8>,
    #[serde(skip)]
    pub final_key_b: Vec<u8>,
    /// Why no final key was produced, if none was.
    pub failure: Option<String>,
}

impl PipelineOutcome {
    pub fn established(&self) -> bool {
        self.failure.is_none() && self.final_len > 0 && self.confirmed
    }

    fn failed(failure: PostprocessError) -> Self {
        Self {
            qber_estimate: None,
            sample_size: 0,
            reconciled_len: 0,
            reconciliation_leak: 0,
            corrections: 0,
            residual_errors: 0,
            eve_bound: 0,
            final_len: 0,
            confirmed: false,
            leaked_bits: 0,
            final_key_a: Vec::new(),
            final_key_b: Vec::new(),
            failure: Some(failure.to_string()),
        }
    }
}

/// Estimation, reconciliation, privacy amplification and confirmation.
/// Every public random choice comes from `rng`, which both parties share.
pub fn run_pipeline<R: Rng + Clone>(
    sifted_a: &[u8],
    sifted_b: &[u8],
    config: &PostprocessConfig,
    rng: &mut R,
) -> PipelineOutcome {
    let estimate = match estimate_qber(sifted_a, sifted_b, config.sample_fraction, rng) {
        Ok(e) => e,
        Err(e) => return PipelineOutcome::failed(e),
    };
    let schedule = match config.initial_block {
        Some(k) => match BlockSchedule::new(k, config.passes) {
            Ok(s) => s,
            Err(e) => return PipelineOutcome::failed(e),
        },
        None => BlockSchedule::for_qber(estimate.qber, config.passes),
    };

    let alice = KeyMaterial::new(estimate.key_a.clone(), KeyStage::Sifted);
    let rec = match parity_reconcile(&estimate.key_a, &estimate.key_b, &schedule, rng) {
        Ok(r) => r,
        Err(e) => return PipelineOutcome::failed(e),
    };
    let residual_errors = estimate.key_a.iter().zip(&rec.key_b).filter(|(a, b)| a != b).count();
    let alice = alice
        .advance(KeyStage::Reconciled, estimate.key_a.clone(), rec.leaked_bits)
        .expect("sifted precedes reconciled");

    let bound = EveBound::from_qber(alice.len(), estimate.qber, config.eve_factor, alice.leaked_bits());
    let mut outcome = PipelineOutcome {
        qber_estimate: Some(estimate.qber),
        sample_size: estimate.sample_size,
        reconciled_len: alice.len(),
        reconciliation_leak: rec.leaked_bits,
        corrections: rec.corrections,
        residual_errors,
        eve_bound: bound.t,
        final_len: 0,
        confirmed: false,
        leaked_bits: alice.leaked_bits(),
        final_key_a: Vec::new(),
        final_key_b: Vec::new(),
        failure: None,
    };

    // Each side hashes with the same public subsets.
    let mut bob_rng = rng.clone();
    let final_a = match privacy_amplify(alice.bits(), bound, config.safety_margin, rng) {
        Ok(k) => k,
        Err(e) => {
            outcome.failure = Some(e.to_string());
            return outcome;
        }
    };
    let final_b =
        privacy_amplify(&rec.key_b, bound, config.safety_margin, &mut bob_rng).expect("same length and bound as Alice");
    let alice = alice
        .advance(KeyStage::Final, final_a, CONFIRMATION_BITS)
        .expect("reconciled precedes final");

    outcome.confirmed = confirm_key(alice.bits(), &final_b);
    outcome.final_len = alice.len();
    outcome.leaked_bits = alice.leaked_bits();
    if !outcome.confirmed {
        outcome.failure = Some("key confirmation failed".into());
    }
    outcome.final_key_a = alice.bits().to_vec();
    outcome.final_key_b = final_b;
    outcome
}
