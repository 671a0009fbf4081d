//! Seeded Monte-Carlo simulator for quantum key distribution.
//!
//! The crate models four protocols over a noisy, lossy channel that an
//! eavesdropper may control:
//!
//! * prepare-and-measure: [`protocols::run_bb84`], [`protocols::run_sarg04`]
//! * entangled pairs: [`protocols::run_e91`], [`protocols::run_agm06`]
//!
//! Every session produces a [`protocols::SessionRecord`] holding the full
//! per-slot transcript. The classical post-processing chain (error
//! estimation, Cascade-style reconciliation, privacy amplification and key
//! confirmation) lives in [`postprocessing`], and the CHSH machinery in
//! [`bell`]. [`harness`] ties everything together into reproducible,
//! config-driven experiments.
//!
//! All randomness flows from a single root seed through [`rng::SeedStreams`],
//! which splits it into independent named streams. Two runs with the same
//! seed produce identical transcripts, and enabling an adversary never
//! perturbs the honest parties' random choices.

pub mod bell;
pub mod channel;
pub mod error;
pub mod harness;
pub mod postprocessing;
pub mod protocols;
pub mod quantum;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
