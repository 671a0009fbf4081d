//! Batch execution of independent trials.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::BellVerdict;
use crate::postprocessing::{run_pipeline, PipelineOutcome};
use crate::protocols::{
    run_agm06, run_bb84, run_e91_with, run_sarg04, session_decision, E91Options, ProtocolId, SessionRecord,
};
use crate::rng::{SeedStreams, StreamId};
use crate::stats::mean_std;

use super::config::ExperimentConfig;

/// Version stamped into every report.
pub const VERSION: &str = concat!("qkdsim ", env!("CARGO_PKG_VERSION"));

/// One trial's outcome, flattened for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub seed: u64,
    pub protocol: ProtocolId,
    pub n_slots: usize,
    pub detected: usize,
    pub sifted_len: usize,
    pub sift_fraction: f64,
    pub sifted_errors: usize,
    pub qber: Option<f64>,
    pub aggregate_error_rate: f64,
    pub chsh_s: Option<f64>,
    pub chsh_sigma: Option<f64>,
    pub bell_verdict: Option<BellVerdict>,
    pub agm06_q: Option<f64>,
    pub agm06_probability_s: Option<f64>,
    pub eve_agreement: Option<f64>,
    pub aborted: bool,
    pub abort_reason: Option<String>,
    pub postprocessing: Option<PipelineOutcome>,
    pub final_len: usize,
    /// Final key bits per transmitted slot.
    pub final_key_rate: f64,
    pub key_established: bool,
}

impl TrialSummary {
    pub fn from_record(trial: usize, record: &SessionRecord, postprocessing: Option<PipelineOutcome>) -> Self {
        let s = &record.statistics;
        let final_len = postprocessing
            .as_ref()
            .filter(|p| p.established())
            .map_or(0, |p| p.final_len);
        let key_established = record.abort.is_none() && final_len > 0;
        Self {
            trial,
            seed: record.seed,
            protocol: record.protocol,
            n_slots: s.n_slots,
            detected: s.detected,
            sifted_len: s.sifted_len,
            sift_fraction: s.sift_fraction,
            sifted_errors: s.sifted_errors,
            qber: s.qber,
            aggregate_error_rate: s.aggregate_error_rate,
            chsh_s: s.chsh.map(|c| c.s),
            chsh_sigma: s.chsh.map(|c| c.sigma),
            bell_verdict: s.chsh.map(|c| c.verdict),
            agm06_q: s.agm06.and_then(|a| a.q),
            agm06_probability_s: s.agm06.map(|a| a.probability_s).filter(|v| v.is_finite()),
            eve_agreement: s.eve.and_then(|e| e.agreement),
            aborted: record.abort.is_some(),
            abort_reason: record.abort.as_ref().map(ToString::to_string),
            postprocessing,
            final_len,
            final_key_rate: final_len as f64 / s.n_slots.max(1) as f64,
            key_established,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
    pub count: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        mean_std(values).map(|(mean, std)| Self {
            mean,
            std,
            count: values.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub trials: usize,
    pub established: usize,
    pub aborted: usize,
    pub sift_fraction: Option<MeanStd>,
    pub qber: Option<MeanStd>,
    pub aggregate_error_rate: Option<MeanStd>,
    pub chsh_s: Option<MeanStd>,
    pub final_key_rate: Option<MeanStd>,
}

impl Aggregate {
    /// Recomputes every aggregate from per-trial data. Trials without a
    /// value (e.g. no sifted key) are left out of that statistic.
    pub fn from_trials(trials: &[TrialSummary]) -> Self {
        let collect = |f: &dyn Fn(&TrialSummary) -> Option<f64>| -> Option<MeanStd> {
            MeanStd::of(&trials.iter().filter_map(f).collect::<Vec<_>>())
        };
        Self {
            trials: trials.len(),
            established: trials.iter().filter(|t| t.key_established).count(),
            aborted: trials.iter().filter(|t| t.aborted).count(),
            sift_fraction: collect(&|t| Some(t.sift_fraction)),
            qber: collect(&|t| t.qber),
            aggregate_error_rate: collect(&|t| Some(t.aggregate_error_rate)),
            chsh_s: collect(&|t| t.chsh_s),
            final_key_rate: collect(&|t| Some(t.final_key_rate)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub config: ExperimentConfig,
    pub trials: Vec<TrialSummary>,
    pub aggregate: Aggregate,
}

impl RunReport {
    /// 0 when every trial established a key, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.trials.iter().all(|t| t.key_established) {
            0
        } else {
            2
        }
    }
}

/// Runs one protocol session with the given root seed and applies the
/// configured decision rule.
pub fn run_session(config: &ExperimentConfig, seed: u64) -> SessionRecord {
    let mut record = match config.protocol {
        ProtocolId::Bb84 => run_bb84(config.slots, &config.channel, &config.adversary, seed),
        ProtocolId::Sarg04 => run_sarg04(config.slots, &config.channel, &config.adversary, seed),
        ProtocolId::E91 => {
            let options = E91Options {
                check_fraction: config.source.check_fraction,
                ..E91Options::default()
            };
            run_e91_with(
                config.slots,
                &config.source.pair_source(),
                &config.channel,
                &config.adversary,
                &options,
                seed,
            )
        }
        ProtocolId::Agm06 => run_agm06(
            config.slots,
            &config.source.pair_source(),
            &config.channel,
            &config.adversary,
            seed,
        ),
    };
    let decision = session_decision(&record, &config.decision);
    record.apply_decision(decision);
    record
}

/// Trial `index`: its own seed, a session, and post-processing unless the
/// session aborted.
pub fn run_trial(config: &ExperimentConfig, index: usize) -> (SessionRecord, TrialSummary) {
    let seed = SeedStreams::new(config.seed).trial_seed(index as u64);
    let record = run_session(config, seed);
    let post = record.abort.is_none().then(|| {
        let mut rng = SeedStreams::new(seed).stream(StreamId::Postprocess);
        run_pipeline(
            &record.sifted_key_a,
            &record.sifted_key_b,
            &config.postprocessing,
            &mut rng,
        )
    });
    let summary = TrialSummary::from_record(index, &record, post);
    (record, summary)
}

/// Runs every trial, in parallel, and assembles the report in trial order.
pub fn run_experiment(config: &ExperimentConfig) -> crate::Result<RunReport> {
    config.validate()?;
    let trials: Vec<TrialSummary> = (0..config.trials)
        .into_par_iter()
        .map(|i| run_trial(config, i).1)
        .collect();
    Ok(RunReport {
        version: VERSION.to_string(),
        config: config.clone(),
        aggregate: Aggregate::from_trials(&trials),
        trials,
    })
}
