//! Monte-Carlo model of two-photon (HBT) interference with true thermal
//! light passing through an N-slit grating.
//!
//! The crate is `no_std` with `alloc`. File formats, the CLI and parallel
//! drivers live in the `thermal-hbt` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analytic;
pub mod apparatus;
pub mod correlation;
pub mod events;
pub mod field;
pub mod quad;
pub mod rng;

pub use apparatus::{validate, ApparatusConfig, ConfigError, Illumination, Lineshape};
pub use correlation::{estimate_g2, CorrelationError, CorrelationResult, ScanMode, ScanSpec};
pub use events::{CoincidenceHistogram, DetectorId, EventsError, PhotonEventStream};
