//! Fibers, photon sources and end-to-end sessions over a star network.

mod channel;
mod config;
mod report;
mod session;
mod source;

pub use channel::{
    transmit, transmit_pulse, ChannelModel, EveConfig, DEFAULT_ATTENUATION_DB_PER_KM,
};
pub use config::{RelayConfig, ScenarioConfig, UserConfig};
pub use report::{LinkKind, LinkReport, LinkStatus, SessionReport, CSV_HEADER};
pub use session::{
    derive_seed, run_session, run_session_with, sweep, LinkKeys, LinkRun, ProtocolVariant,
    SessionOutcome, SweepParam, SweepPoint,
};
pub use source::{expected_detections, SourceKind, SourceModel, SECONDS_PER_CENTURY};

use crate::bb84::{Bb84Error, KeyError};
use crate::optics::OpticsError;
use crate::relay::RelayError;

#[derive(Debug, thiserror::Error)]
pub enum NetsimError {
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("{field}: {message}")]
    Parse { field: String, message: String },
    #[error("unknown sweep parameter {0:?} (expected one of length_km, efficiency, dark_count_prob, visibility, misalignment_deg)")]
    UnknownParameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Optics(#[from] OpticsError),
    #[error(transparent)]
    Bb84(#[from] Bb84Error),
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error(transparent)]
    Relay(#[from] RelayError),
}
