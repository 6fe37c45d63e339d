//! PAPR reduction for non-coherent OFDM with index modulation.
//!
//! In non-coherent OFDM-IM the information sits entirely in which subcarriers
//! are active, so the value loaded on an active subcarrier is free as long as
//! its modulus stays `beta`. With all active entries equal the first
//! time-domain sample always carries the full coherent sum and the PAPR is
//! exactly `B K`. This crate picks per-frame phases or signs for the active
//! entries to flatten the envelope, without changing what the energy
//! detector sees.
//!
//! * [`frame`]: numerology, combinadic bit mapping, frame construction
//! * [`dsp`]: oversampled transform and PAPR
//! * [`phase`]: per-frame phase optimization
//! * [`integer`]: exact and discretized binary sign optimization
//! * [`heuristic`]: sign-exchange heuristic
//! * [`baselines`]: SLM and PTS
//! * [`channel`]: Rayleigh channel, detector, index error simulation
//! * [`harness`]: Monte Carlo CCDF, timing and error-rate experiments

pub mod baselines;
pub mod channel;
pub mod dsp;
pub mod error;
pub mod frame;
pub mod harness;
pub mod heuristic;
pub mod integer;
pub mod par;
pub mod phase;
pub mod report;
pub mod scheme;

pub use error::{Error, Result};
pub use frame::{Frame, FrameConfig, IndexPattern, Loading};
pub use integer::SignVector;
pub use par::Execution;
pub use phase::PhaseVector;
pub use report::SolverReport;
pub use scheme::{Scheme, SchemeId, SchemeOptions};
