//! Per-slot physics shared by the protocols: source, adversary, channel and
//! detectors, each fed from its own random stream.

use rand::Rng;

use crate::channel::{
    apply_flip, emit_pulse, eve_intercept_pair, eve_intercept_resend, eve_pns, record_spin, transmit, transmit_pair,
    AdversaryConfig, ChannelConfig, EveRecord,
};
use crate::quantum::{measure_photon_with, sample_pair, Basis, MeasurementSetting, Polarization, Spin, TwoQubitState};
use crate::rng::{SeedStreams, SimRng, StreamId};

/// What happened to one prepare-and-measure slot on the wire.
#[derive(Debug, Clone)]
pub struct SlotSend {
    pub photons_sent: u32,
    pub photons_received: u32,
    pub bob_outcome: Option<u8>,
    pub eve: Option<EveRecord>,
}

pub(crate) struct PhysicalLayer<'a> {
    channel: &'a ChannelConfig,
    adversary: &'a AdversaryConfig,
    source: SimRng,
    line: SimRng,
    eve: SimRng,
    detector: SimRng,
}

impl<'a> PhysicalLayer<'a> {
    pub(crate) fn new(channel: &'a ChannelConfig, adversary: &'a AdversaryConfig, streams: &SeedStreams) -> Self {
        Self {
            channel,
            adversary,
            source: streams.stream(StreamId::Source),
            line: streams.stream(StreamId::Channel),
            eve: streams.stream(StreamId::Eve),
            detector: streams.stream(StreamId::BobDetector),
        }
    }

    pub(crate) fn eve_rng(&mut self) -> &mut SimRng {
        &mut self.eve
    }

    /// Emits a pulse, lets Eve act on it, sends it down the line and
    /// measures it in `bob_basis`. Bob's detector consumes one draw per slot
    /// whether or not anything arrives.
    pub(crate) fn send(&mut self, slot: usize, pol: Polarization, bob_basis: Basis) -> SlotSend {
        let pulse = emit_pulse(self.channel, pol, slot, &mut self.source);
        let photons_sent = pulse.photon_count;
        let (pulse, eve, lossless) = match self.adversary {
            AdversaryConfig::None => (pulse, None, false),
            AdversaryConfig::InterceptResend(c) => {
                let (p, r) = eve_intercept_resend(pulse, c, &mut self.eve);
                (p, r, false)
            }
            AdversaryConfig::Pns(c) => {
                let (p, r) = eve_pns(pulse, c, &mut self.eve);
                (p, r, c.owns_channel)
            }
        };
        let arrived = if lossless {
            apply_flip(pulse, self.channel, &mut self.line)
        } else {
            transmit(pulse, self.channel, &mut self.line)
        };
        let u = self.detector.random::<f64>();
        let bob_outcome = (!arrived.is_vacuum()).then(|| measure_photon_with(arrived.polarization, &bob_basis, u));
        SlotSend {
            photons_sent,
            photons_received: arrived.photon_count,
            bob_outcome,
            eve,
        }
    }
}

/// Where entangled pairs come from.
#[derive(Debug, Clone, PartialEq)]
pub enum PairSource {
    Quantum(TwoQubitState),
    /// A local hidden-variable source: each side answers `+` when its
    /// setting lies within a quarter turn of a fixed hidden axis (spin
    /// angles), `−` otherwise.
    LocalDeterministic {
        alice_axis: f64,
        bob_axis: f64,
    },
}

impl PairSource {
    pub fn singlet() -> Self {
        PairSource::Quantum(TwoQubitState::singlet())
    }

    pub fn is_quantum(&self) -> bool {
        matches!(self, PairSource::Quantum(_))
    }
}

fn hidden_axis_outcome(setting: MeasurementSetting, axis: f64) -> Spin {
    if (setting.angle() - axis).cos() >= 0.0 {
        Spin::Plus
    } else {
        Spin::Minus
    }
}

/// Outcome of one entangled-pair slot, before any protocol convention.
#[derive(Debug, Clone)]
pub struct PairSend {
    pub alice: Spin,
    pub bob: Option<Spin>,
    pub eve: Option<EveRecord>,
}

pub(crate) struct PairLayer<'a> {
    source: &'a PairSource,
    channel: &'a ChannelConfig,
    adversary: &'a AdversaryConfig,
    line: SimRng,
    eve: SimRng,
    detector: SimRng,
}

impl<'a> PairLayer<'a> {
    pub(crate) fn new(
        source: &'a PairSource,
        channel: &'a ChannelConfig,
        adversary: &'a AdversaryConfig,
        streams: &SeedStreams,
    ) -> Self {
        Self {
            source,
            channel,
            adversary,
            line: streams.stream(StreamId::Channel),
            eve: streams.stream(StreamId::Eve),
            detector: streams.stream(StreamId::BobDetector),
        }
    }

    /// Distributes one pair and measures it along `(a, b)`. The detectors
    /// share one joint draw per slot; the channel takes two draws.
    pub(crate) fn send(&mut self, slot: usize, a: MeasurementSetting, b: MeasurementSetting) -> PairSend {
        match self.source {
            PairSource::Quantum(state) => {
                let (state, eve) = match self.adversary {
                    AdversaryConfig::InterceptResend(c) => eve_intercept_pair(*state, slot, c, &mut self.eve),
                    _ => (*state, None),
                };
                let delivered = transmit_pair(state, self.channel, &mut self.line);
                let measured = delivered.as_ref().unwrap_or(&state);
                let (alice, bob) = sample_pair(measured, a, b, &mut self.detector);
                PairSend {
                    alice,
                    bob: delivered.map(|_| bob),
                    eve,
                }
            }
            PairSource::LocalDeterministic { alice_axis, bob_axis } => {
                let lost = self.line.random::<f64>() < self.channel.loss_probability;
                let flipped = self.line.random::<f64>() < self.channel.flip_probability;
                let _ = self.detector.random::<f64>();
                let alice = hidden_axis_outcome(a, *alice_axis);
                let bob = hidden_axis_outcome(b, *bob_axis);
                PairSend {
                    alice,
                    bob: (!lost).then(|| if flipped { bob.flipped() } else { bob }),
                    eve: None,
                }
            }
        }
    }
}

/// Eve's guess at Alice's bit after measuring Bob's particle of an
/// anticorrelated pair.
pub(crate) fn eve_pair_guess(record: &EveRecord) -> Option<u8> {
    record_spin(record).map(|s| s.flipped().bit())
}
