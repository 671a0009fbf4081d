//! The four protocol state machines and the session record they produce.

mod agm06;
mod bb84;
mod decision;
mod e91;
mod physical;
mod record;
mod sarg04;

pub use agm06::{run_agm06, run_agm06_with, Agm06Settings};
pub use bb84::{run_bb84, run_bb84_replay, ReplayPlan};
pub use decision::{bb84_decision, bell_decision, session_decision, Decision, DecisionMetric, DecisionRule};
pub use e91::{run_e91, run_e91_with, E91Options, E91Settings};
pub use physical::PairSource;
pub use record::{
    compute_statistics, derive_keys, AbortReason, Agm06Statistics, DerivedKeys, EveStatistics, PairPhase, PairSlot,
    PrepareSlot, ProtocolId, SessionRecord, SessionStatistics, Transcript,
};
pub use sarg04::{
    run_sarg04, sarg04_conclusive, sarg04_conclusive_measurement, Family, Sarg04Announcement, Sarg04State, Sifting,
};
