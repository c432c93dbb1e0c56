//! Single- and two-photon linear optics.
//!
//! Polarization states and rotations, the passive-basis BB84 receiver, the
//! Fock-amplitude model of the Bell-state-measurement receiver and the
//! threshold-detector layer that turns ideal photon patterns into clicks.

mod bsm;
mod detection;
mod polarization;
mod receiver;

pub use bsm::{
    bsm_distribution, bsm_distribution_with, single_photon_distribution, SplitterConvention,
    TwoPhotonDistribution, DISTRIBUTION_TOLERANCE,
};
pub use detection::{classify, observe, BsmOutcome, DetectionPattern, DetectorId, DetectorModel};
pub use polarization::{
    jones_of, rotate, Basis, BitValue, Jones, PolarizationState, NORM_TOLERANCE,
};
pub use receiver::{bb84_measure, random_basis, random_bit, BasisChoice};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OpticsError {
    #[error("Jones pair has squared norm {0}, expected 1")]
    NotNormalized(f64),
    #[error("{field} = {value} is out of range")]
    OutOfRange { field: &'static str, value: f64 },
    #[error("parse error: {0}")]
    Parse(String),
}
