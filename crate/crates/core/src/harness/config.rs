//! Experiment configuration, read from TOML.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{check_probability, AdversaryConfig, ChannelConfig, SourceMode};
use crate::error::ConfigError;
use crate::postprocessing::PostprocessConfig;
use crate::protocols::{DecisionRule, PairSource, ProtocolId};
use crate::quantum::TwoQubitState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    JsonLines,
    Csv,
    Human,
}

impl OutputFormat {
    pub fn name(self) -> &'static str {
        match self {
            OutputFormat::JsonLines => "json-lines",
            OutputFormat::Csv => "csv",
            OutputFormat::Human => "human",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json-lines" | "jsonl" => Ok(OutputFormat::JsonLines),
            "csv" => Ok(OutputFormat::Csv),
            "human" | "human-summary" => Ok(OutputFormat::Human),
            _ => Err(ConfigError::new(
                "format",
                format!("unknown format `{s}` (expected json-lines, csv or human)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceState {
    /// `(|01⟩ − |10⟩)/√2`.
    #[default]
    Singlet,
    /// `(|01⟩ + |10⟩)/√2`.
    PsiPlus,
    /// The separable state `|0⟩|1⟩`.
    Product,
    /// Local hidden-variable source with fixed hidden axes.
    Local,
}

/// Entangled-pair source and E91 check-phase settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    pub state: SourceState,
    /// Hidden axes of the local source, as spin angles in radians.
    pub alice_axis: f64,
    pub bob_axis: f64,
    /// E91: probability that a pair is assigned to the check phase.
    pub check_fraction: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            state: SourceState::Singlet,
            alice_axis: 0.0,
            bob_axis: 0.0,
            check_fraction: 0.5,
        }
    }
}

impl SourceConfig {
    pub fn pair_source(&self) -> PairSource {
        match self.state {
            SourceState::Singlet => PairSource::Quantum(TwoQubitState::singlet()),
            SourceState::PsiPlus => PairSource::Quantum(TwoQubitState::psi_plus()),
            SourceState::Product => PairSource::Quantum(TwoQubitState::basis_product(0, 1)),
            SourceState::Local => PairSource::LocalDeterministic {
                alice_axis: self.alice_axis,
                bob_axis: self.bob_axis,
            },
        }
    }
}

fn default_trials() -> usize {
    1
}

fn harness_decision() -> DecisionRule {
    DecisionRule::sifted_qber(0.11)
}

/// A full experiment. `seed` is required; everything else has defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: ProtocolId,
    /// Slots (prepare-and-measure) or pairs (entangled protocols) per trial.
    pub slots: usize,
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub adversary: AdversaryConfig,
    #[serde(default)]
    pub source: SourceConfig,
    #[serde(default)]
    pub postprocessing: PostprocessConfig,
    #[serde(default = "harness_decision")]
    pub decision: DecisionRule,
}

/// Command-line values that replace config fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub format: Option<OutputFormat>,
}

impl ExperimentConfig {
    /// A config with defaults for everything but the essentials.
    pub fn new(protocol: ProtocolId, slots: usize, seed: u64) -> Self {
        Self {
            protocol,
            slots,
            seed,
            trials: 1,
            format: OutputFormat::default(),
            channel: ChannelConfig::default(),
            adversary: AdversaryConfig::default(),
            source: SourceConfig::default(),
            postprocessing: PostprocessConfig::default(),
            decision: harness_decision(),
        }
    }

    /// Parses and validates. Errors carry the dotted path of the field.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::new("", e.message().to_string()))?;
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." { String::new() } else { path };
            ConfigError::new(path, e.into_inner().message().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(trials) = overrides.trials {
            self.trials = trials;
        }
        if let Some(format) = overrides.format {
            self.format = format;
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.slots == 0 {
            return Err(ConfigError::new("slots", "must be at least 1"));
        }
        if self.trials == 0 {
            return Err(ConfigError::new("trials", "must be at least 1"));
        }
        self.channel.validate()?;
        self.adversary.validate()?;

        if self.protocol.uses_pairs() {
            if matches!(self.adversary, AdversaryConfig::Pns(_)) {
                return Err(ConfigError::new(
                    "adversary.strategy",
                    format!(
                        "photon-number splitting needs weak-coherent pulses; {} uses entangled pairs",
                        self.protocol
                    ),
                ));
            }
            if !matches!(self.channel.source, SourceMode::SinglePhoton) {
                return Err(ConfigError::new(
                    "channel.source",
                    format!(
                        "{} distributes entangled pairs, not weak-coherent pulses",
                        self.protocol
                    ),
                ));
            }
            if self.source.state == SourceState::Local && !matches!(self.adversary, AdversaryConfig::None) {
                return Err(ConfigError::new(
                    "adversary.strategy",
                    "the local hidden-variable source has no quantum state for Eve to intercept",
                ));
            }
            if !(self.source.alice_axis.is_finite() && self.source.bob_axis.is_finite()) {
                return Err(ConfigError::new("source", "hidden axes must be finite"));
            }
            let f = self.source.check_fraction;
            if !(f > 0.0 && f < 1.0) {
                return Err(ConfigError::new("source.check_fraction", format!("{f} outside (0, 1)")));
            }
        }

        let pp = &self.postprocessing;
        if !(pp.sample_fraction > 0.0 && pp.sample_fraction < 1.0) {
            return Err(ConfigError::new(
                "postprocessing.sample_fraction",
                format!("{} outside (0, 1)", pp.sample_fraction),
            ));
        }
        if pp.passes == 0 {
            return Err(ConfigError::new("postprocessing.passes", "at least one pass required"));
        }
        if pp.initial_block == Some(0) {
            return Err(ConfigError::new("postprocessing.initial_block", "must be positive"));
        }
        if !(pp.eve_factor.is_finite() && pp.eve_factor >= 0.0) {
            return Err(ConfigError::new(
                "postprocessing.eve_factor",
                "must be a nonnegative finite number",
            ));
        }
        check_probability("decision.threshold", self.decision.threshold)?;
        Ok(())
    }
}
