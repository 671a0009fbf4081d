//! Quantum channel and eavesdropper models.
//!
//! Channel imperfections (background photons, detector noise, polarization
//! drift) are folded into two numbers: a per-photon loss probability and a
//! per-pulse flip probability. A flip rotates the polarization by π/2, i.e.
//! it is a bit error within the preparation basis.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::quantum::{measure_photon, Basis, BasisLabel, MeasurementSetting, Polarization, Pulse, Spin, TwoQubitState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SourceMode {
    #[default]
    SinglePhoton,
    WeakCoherent {
        mean_photon_number: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub flip_probability: f64,
    pub loss_probability: f64,
    pub source: SourceMode,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self::ideal()
    }
}

impl ChannelConfig {
    pub fn ideal() -> Self {
        Self {
            flip_probability: 0.0,
            loss_probability: 0.0,
            source: SourceMode::SinglePhoton,
        }
    }

    pub fn with_flip(mut self, p: f64) -> Self {
        self.flip_probability = p;
        self
    }

    pub fn with_loss(mut self, p: f64) -> Self {
        self.loss_probability = p;
        self
    }

    pub fn weak_coherent(mut self, mean_photon_number: f64) -> Self {
        self.source = SourceMode::WeakCoherent { mean_photon_number };
        self
    }

    pub fn is_ideal(&self) -> bool {
        *self == Self::ideal()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check_probability("channel.flip_probability", self.flip_probability)?;
        check_probability("channel.loss_probability", self.loss_probability)?;
        if let SourceMode::WeakCoherent { mean_photon_number } = self.source {
            if !(mean_photon_number.is_finite() && mean_photon_number > 0.0) {
                return Err(ConfigError::new(
                    "channel.source.mean_photon_number",
                    format!("must be a positive finite number, got {mean_photon_number}"),
                ));
            }
        }
        Ok(())
    }
}

pub(crate) fn check_probability(path: &str, p: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(ConfigError::new(path, format!("probability {p} outside [0, 1]")))
    }
}

fn default_eve_bases() -> Vec<BasisLabel> {
    vec![BasisLabel::Rectilinear, BasisLabel::Diagonal]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterceptResendConfig {
    /// Bases Eve picks from uniformly. On entangled pairs a polarization
    /// basis at analyzer angle `φ` becomes the spin direction `2φ`.
    pub bases: Vec<BasisLabel>,
    /// Fraction of non-vacuum pulses Eve intercepts.
    pub fraction: f64,
}

impl Default for InterceptResendConfig {
    fn default() -> Self {
        Self {
            bases: default_eve_bases(),
            fraction: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PnsConfig {
    /// Probability of blocking a non-vacuum pulse too small to split.
    pub blocking_fraction: f64,
    /// Smallest photon number Eve splits; pulses with fewer photons are
    /// subject to blocking instead.
    pub split_threshold: u32,
    /// Eve replaces the lossy line with a lossless one: forwarded pulses skip
    /// channel loss (but not channel flips).
    pub owns_channel: bool,
}

impl Default for PnsConfig {
    fn default() -> Self {
        Self {
            blocking_fraction: 0.0,
            split_threshold: 2,
            owns_channel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "strategy", rename_all = "kebab-case")]
pub enum AdversaryConfig {
    #[default]
    None,
    InterceptResend(InterceptResendConfig),
    Pns(PnsConfig),
}

impl AdversaryConfig {
    pub fn intercept_resend() -> Self {
        AdversaryConfig::InterceptResend(InterceptResendConfig::default())
    }

    pub fn pns() -> Self {
        AdversaryConfig::Pns(PnsConfig::default())
    }

    pub fn name(&self) -> &'static str {
        match self {
            AdversaryConfig::None => "none",
            AdversaryConfig::InterceptResend(_) => "intercept-resend",
            AdversaryConfig::Pns(_) => "pns",
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self {
            AdversaryConfig::None => Ok(()),
            AdversaryConfig::InterceptResend(c) => {
                if c.bases.is_empty() {
                    return Err(ConfigError::new("adversary.bases", "at least one basis required"));
                }
                if c.bases.contains(&BasisLabel::Custom) {
                    return Err(ConfigError::new(
                        "adversary.bases",
                        "only rectilinear and diagonal bases are supported",
                    ));
                }
                check_probability("adversary.fraction", c.fraction)
            }
            AdversaryConfig::Pns(c) => {
                check_probability("adversary.blocking_fraction", c.blocking_fraction)?;
                if c.split_threshold < 2 {
                    return Err(ConfigError::new(
                        "adversary.split_threshold",
                        "Eve needs at least two photons to split one off",
                    ));
                }
                Ok(())
            }
        }
    }
}

/// One slot of Eve's knowledge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EveRecord {
    pub slot: usize,
    /// Basis Eve measured in. `Custom` marks an optimal two-state
    /// discrimination measurement.
    pub basis: Option<BasisLabel>,
    pub bit: Option<u8>,
    pub stored_photons: u32,
    /// The pulse was blocked (PNS only).
    pub blocked: bool,
    /// Polarization of the stored photon, awaiting a deferred measurement.
    #[serde(skip)]
    pub stored_polarization: Option<Polarization>,
}

impl EveRecord {
    fn empty(slot: usize) -> Self {
        Self {
            slot,
            basis: None,
            bit: None,
            stored_photons: 0,
            blocked: false,
            stored_polarization: None,
        }
    }

    /// Deferred measurement of a stored photon in an announced basis.
    pub fn resolve_in_basis<R: Rng + ?Sized>(&mut self, basis: &Basis, rng: &mut R) {
        if let Some(pol) = self.stored_polarization.take() {
            self.bit = Some(measure_photon(pol, basis, rng));
            self.basis = Some(basis.label());
        }
    }

    /// Deferred minimum-error discrimination of a stored photon between two
    /// announced candidate polarizations. Returns the index of the guess.
    pub fn resolve_between<R: Rng + ?Sized>(&mut self, candidates: [Polarization; 2], rng: &mut R) -> Option<usize> {
        let pol = self.stored_polarization.take()?;
        let guess = helstrom_guess(pol, candidates, rng.random::<f64>());
        self.basis = Some(BasisLabel::Custom);
        Some(guess)
    }
}

/// Eve's per-session log; slots strictly increase.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EveLog {
    entries: Vec<EveRecord>,
}

impl EveLog {
    pub fn push(&mut self, record: EveRecord) {
        if let Some(last) = self.entries.last() {
            assert!(
                record.slot > last.slot,
                "eve records must have strictly increasing slots ({} after {})",
                record.slot,
                last.slot
            );
        }
        self.entries.push(record);
    }

    pub fn entries(&self) -> &[EveRecord] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [EveRecord] {
        &mut self.entries
    }

    pub fn get(&self, slot: usize) -> Option<&EveRecord> {
        self.entries
            .binary_search_by_key(&slot, |r| r.slot)
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn get_mut(&mut self, slot: usize) -> Option<&mut EveRecord> {
        self.entries
            .binary_search_by_key(&slot, |r| r.slot)
            .ok()
            .map(move |i| &mut self.entries[i])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Emits one pulse from the source. Weak-coherent sources draw the photon
/// number from a Poisson distribution; single-photon sources draw nothing.
pub fn emit_pulse<R: Rng + ?Sized>(config: &ChannelConfig, pol: Polarization, slot: usize, rng: &mut R) -> Pulse {
    let photon_count = match config.source {
        SourceMode::SinglePhoton => 1,
        SourceMode::WeakCoherent { mean_photon_number } => {
            let poisson = Poisson::new(mean_photon_number).expect("validated mean photon number");
            poisson.sample(rng) as u32
        }
    };
    Pulse {
        photon_count,
        polarization: pol,
        slot,
    }
}

/// Sends a pulse through the channel: each photon is dropped independently,
/// then the surviving pulse is flipped by π/2 with the flip probability.
/// Draws one value per photon plus one flip draw.
pub fn transmit<R: Rng + ?Sized>(pulse: Pulse, config: &ChannelConfig, rng: &mut R) -> Pulse {
    let survivors = (0..pulse.photon_count)
        .filter(|_| rng.random::<f64>() >= config.loss_probability)
        .count() as u32;
    apply_flip(
        Pulse {
            photon_count: survivors,
            ..pulse
        },
        config,
        rng,
    )
}

/// The flip half of [`transmit`], used when Eve owns a lossless line.
pub fn apply_flip<R: Rng + ?Sized>(pulse: Pulse, config: &ChannelConfig, rng: &mut R) -> Pulse {
    let flip = rng.random::<f64>() < config.flip_probability;
    if flip && !pulse.is_vacuum() {
        Pulse {
            polarization: pulse.polarization.rotated(FRAC_PI_2),
            ..pulse
        }
    } else {
        pulse
    }
}

/// Intercept-resend with an explicit basis and measurement draw.
pub fn intercept_resend_with(pulse: Pulse, basis: Basis, u: f64) -> (Pulse, EveRecord) {
    let bit = crate::quantum::measure_photon_with(pulse.polarization, &basis, u);
    let forwarded = Pulse {
        polarization: basis.encode(bit),
        ..pulse
    };
    let record = EveRecord {
        basis: Some(basis.label()),
        bit: Some(bit),
        ..EveRecord::empty(pulse.slot)
    };
    (forwarded, record)
}

/// Eve measures the pulse in a basis drawn from her set and re-emits a fresh
/// pulse of the same photon number carrying her outcome. Vacuum pulses pass
/// unchanged and leave no record.
pub fn eve_intercept_resend<R: Rng + ?Sized>(
    pulse: Pulse,
    config: &InterceptResendConfig,
    rng: &mut R,
) -> (Pulse, Option<EveRecord>) {
    if pulse.is_vacuum() || config.bases.is_empty() {
        return (pulse, None);
    }
    if config.fraction < 1.0 && rng.random::<f64>() >= config.fraction {
        return (pulse, None);
    }
    let label = config.bases[rng.random_range(0..config.bases.len())];
    let basis = label.basis().expect("validated eve basis");
    let (forwarded, record) = intercept_resend_with(pulse, basis, rng.random::<f64>());
    (forwarded, Some(record))
}

/// Photon-number splitting. Pulses at or above the split threshold lose one
/// photon to Eve's memory and travel on; smaller non-vacuum pulses are
/// blocked with the configured probability.
pub fn eve_pns<R: Rng + ?Sized>(pulse: Pulse, config: &PnsConfig, rng: &mut R) -> (Pulse, Option<EveRecord>) {
    if pulse.is_vacuum() {
        return (pulse, None);
    }
    if pulse.photon_count >= config.split_threshold {
        let record = EveRecord {
            stored_photons: 1,
            stored_polarization: Some(pulse.polarization),
            ..EveRecord::empty(pulse.slot)
        };
        let forwarded = Pulse {
            photon_count: pulse.photon_count - 1,
            ..pulse
        };
        return (forwarded, Some(record));
    }
    if config.blocking_fraction > 0.0 && rng.random::<f64>() < config.blocking_fraction {
        let record = EveRecord {
            blocked: true,
            ..EveRecord::empty(pulse.slot)
        };
        return (pulse.vacuum(), Some(record));
    }
    (pulse, None)
}

/// Wraps an angle difference into `(−π/2, π/2]`.
fn wrap_half_turn(d: f64) -> f64 {
    let r = d.rem_euclid(PI);
    if r > FRAC_PI_2 {
        r - PI
    } else {
        r
    }
}

/// Analyzer direction of the minimum-error measurement separating two
/// equiprobable polarizations: outcome "along" means candidate 0.
pub fn helstrom_direction(candidates: [Polarization; 2]) -> f64 {
    let p = candidates[0].angle();
    let d = wrap_half_turn(candidates[1].angle() - p);
    p - d.signum() * (FRAC_PI_4 - d.abs() / 2.0)
}

/// Probability that the minimum-error measurement identifies the true state.
pub fn helstrom_success(candidates: [Polarization; 2]) -> f64 {
    let d = wrap_half_turn(candidates[1].angle() - candidates[0].angle());
    (FRAC_PI_4 - d.abs() / 2.0).cos().powi(2)
}

/// Guess which of two candidates `stored` is, using one uniform draw.
pub fn helstrom_guess(stored: Polarization, candidates: [Polarization; 2], u: f64) -> usize {
    let direction = helstrom_direction(candidates);
    let p_other = (stored.angle() - direction).sin().powi(2);
    usize::from(u < p_other)
}

/// Bob's half of an entangled pair crossing the channel. `None` if lost.
pub fn transmit_pair<R: Rng + ?Sized>(
    state: TwoQubitState,
    config: &ChannelConfig,
    rng: &mut R,
) -> Option<TwoQubitState> {
    let lost = rng.random::<f64>() < config.loss_probability;
    let flipped = rng.random::<f64>() < config.flip_probability;
    if lost {
        None
    } else if flipped {
        Some(state.flip_second())
    } else {
        Some(state)
    }
}

/// Intercept-resend on Bob's particle: Eve measures it along a spin
/// direction drawn from her set and sends Bob a fresh eigenstate. The pair
/// leaves as a product state.
pub fn eve_intercept_pair<R: Rng + ?Sized>(
    state: TwoQubitState,
    slot: usize,
    config: &InterceptResendConfig,
    rng: &mut R,
) -> (TwoQubitState, Option<EveRecord>) {
    if config.bases.is_empty() {
        return (state, None);
    }
    if config.fraction < 1.0 && rng.random::<f64>() >= config.fraction {
        return (state, None);
    }
    let label = config.bases[rng.random_range(0..config.bases.len())];
    let basis = label.basis().expect("validated eve basis");
    let direction = MeasurementSetting::from_const(2.0 * basis.analyzer_angle());
    let (outcome, alice) = state.measure_second_with(direction, rng.random::<f64>());
    let resent =
        TwoQubitState::product(alice, direction.eigenvector(outcome)).expect("conditional state is normalized");
    let record = EveRecord {
        basis: Some(label),
        bit: Some(outcome.bit()),
        ..EveRecord::empty(slot)
    };
    (resent, Some(record))
}

/// Eve's record bit as a spin outcome, for pair protocols.
pub fn record_spin(record: &EveRecord) -> Option<Spin> {
    record.bit.map(|b| if b == 0 { Spin::Plus } else { Spin::Minus })
}
