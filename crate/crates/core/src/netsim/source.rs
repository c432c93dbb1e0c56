use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{ChannelModel, NetsimError};

/// Seconds in a century of 365.25-day years.
pub const SECONDS_PER_CENTURY: f64 = 100.0 * 365.25 * 86_400.0;

fn default_rate() -> f64 {
    1e9
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceKind {
    IdealSinglePhoton,
    /// Attenuated laser; photon number per pulse is Poisson with mean `mu`.
    WeakCoherent {
        mu: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SourceRepr", into = "SourceRepr")]
pub struct SourceModel {
    pub kind: SourceKind,
    pub pulse_rate_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SourceTag {
    IdealSinglePhoton,
    WeakCoherent,
}

/// On-disk form: `{"kind": "weak_coherent", "mu": 0.5, "pulse_rate_hz": 1e9}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceRepr {
    kind: SourceTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(default = "default_rate")]
    pulse_rate_hz: f64,
}

impl TryFrom<SourceRepr> for SourceModel {
    type Error = String;

    fn try_from(r: SourceRepr) -> Result<Self, Self::Error> {
        let kind = match (r.kind, r.mu) {
            (SourceTag::IdealSinglePhoton, None) => SourceKind::IdealSinglePhoton,
            (SourceTag::IdealSinglePhoton, Some(_)) => {
                return Err("mu is only valid for kind weak_coherent".into())
            }
            (SourceTag::WeakCoherent, Some(mu)) => SourceKind::WeakCoherent { mu },
            (SourceTag::WeakCoherent, None) => {
                return Err("mu is required for kind weak_coherent".into())
            }
        };
        Ok(SourceModel {
            kind,
            pulse_rate_hz: r.pulse_rate_hz,
        })
    }
}

impl From<SourceModel> for SourceRepr {
    fn from(s: SourceModel) -> Self {
        let (kind, mu) = match s.kind {
            SourceKind::IdealSinglePhoton => (SourceTag::IdealSinglePhoton, None),
            SourceKind::WeakCoherent { mu } => (SourceTag::WeakCoherent, Some(mu)),
        };
        SourceRepr {
            kind,
            mu,
            pulse_rate_hz: s.pulse_rate_hz,
        }
    }
}

impl Default for SourceModel {
    fn default() -> Self {
        SourceModel::ideal(default_rate())
    }
}

impl SourceModel {
    pub fn ideal(pulse_rate_hz: f64) -> Self {
        SourceModel {
            kind: SourceKind::IdealSinglePhoton,
            pulse_rate_hz,
        }
    }

    pub fn weak_coherent(mu: f64, pulse_rate_hz: f64) -> Self {
        SourceModel {
            kind: SourceKind::WeakCoherent { mu },
            pulse_rate_hz,
        }
    }

    pub fn mean_photons(&self) -> f64 {
        match self.kind {
            SourceKind::IdealSinglePhoton => 1.0,
            SourceKind::WeakCoherent { mu } => mu,
        }
    }

    /// Probability that a pulse carries two or more photons.
    pub fn multi_photon_prob(&self) -> f64 {
        match self.kind {
            SourceKind::IdealSinglePhoton => 0.0,
            SourceKind::WeakCoherent { mu } => 1.0 - (-mu).exp() * (1.0 + mu),
        }
    }

    pub fn validate(&self) -> Result<(), NetsimError> {
        if !(self.pulse_rate_hz.is_finite() && self.pulse_rate_hz > 0.0) {
            return Err(NetsimError::Invalid {
                field: "pulse_rate_hz".into(),
                reason: format!("{} must be positive", self.pulse_rate_hz),
            });
        }
        if let SourceKind::WeakCoherent { mu } = self.kind {
            if !(mu.is_finite() && mu > 0.0) {
                return Err(NetsimError::Invalid {
                    field: "mu".into(),
                    reason: format!("{mu} must be positive"),
                });
            }
        }
        Ok(())
    }

    /// Photon number of the next pulse.
    pub fn emit<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match self.kind {
            SourceKind::IdealSinglePhoton => 1,
            SourceKind::WeakCoherent { mu } => {
                let poisson = Poisson::new(mu).expect("mu validated positive");
                poisson.sample(rng) as u32
            }
        }
    }
}

/// Mean number of detected photons over `duration_s` seconds.
pub fn expected_detections(
    source: &SourceModel,
    ch: &ChannelModel,
    efficiency: f64,
    duration_s: f64,
) -> f64 {
    source.pulse_rate_hz * source.mean_photons() * ch.transmittance() * efficiency * duration_s
}
