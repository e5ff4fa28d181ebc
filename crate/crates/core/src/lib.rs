//! Simulation and analysis of qubit energy relaxation under a bath of
//! spectrally diffusing two-level-system (TLS) defects.
//!
//! The crate covers the physical model ([`model`]), the measurement
//! protocols and campaign scheduler ([`protocol`]), T1 estimators
//! ([`estimators`]), statistical tests ([`stats`]), TLS tracking
//! ([`tracking`]) and file formats ([`io`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod fit;
pub mod io;
pub mod model;
pub mod protocol;
pub mod rng;
pub mod stats;
pub mod tracking;

pub use error::{Error, Result};
pub use estimators::{ClipPolicy, EstimateResult, EstimatorConfig};
pub use io::{CampaignConfig, DeviceSpec, GridSpec, Manifest};
pub use model::{BathSpec, BathState, QubitModel, StarkTone, SyntheticDevice, TlsDefect};
pub use protocol::{
    CampaignPlan, CampaignResult, ScanGrid, Schedule, SpectroscopyMap, T1Entry, T1Protocol,
    T1TimeSeries,
};
pub use rng::{SeedStream, SimRng};
pub use tracking::{Histogram, LinewidthFit, TrackConfig, Tracks};
