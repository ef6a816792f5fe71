//! Control-waveform design and simulation for a synchronous cavity–oscillator
//! quantum memory.
//!
//! * [`signal`]: time grids, envelopes, mode projection
//! * [`design`]: coupling / detuning schedules that keep the write-phase output in vacuum
//! * [`dynamics`]: write–hold–read integration
//! * [`metrology`]: retrieval efficiency, fidelity benchmarks, loss-channel oracle
//! * [`scenario`]: config-driven runs and sweeps behind the `qmem` binary

pub mod design;
pub mod dynamics;
pub mod error;
pub mod metrology;
pub mod par;
pub mod scenario;
pub mod signal;

pub use error::{Error, Result};
