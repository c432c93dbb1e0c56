use rand::Rng;
use serde::{Deserialize, Serialize};

use super::NetsimError;
use crate::optics::{bb84_measure, BasisChoice, DetectorModel, Jones, PolarizationState};

pub const DEFAULT_ATTENUATION_DB_PER_KM: f64 = 0.2;

fn default_attenuation() -> f64 {
    DEFAULT_ATTENUATION_DB_PER_KM
}

/// Active adversary on a user→relay fiber.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case", deny_unknown_fields)]
pub enum EveConfig {
    /// Measure every pulse in a random basis and resend the state she saw.
    InterceptResend,
}

/// Fiber link from a user to the relay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelModel {
    pub length_km: f64,
    #[serde(default = "default_attenuation")]
    pub attenuation_db_per_km: f64,
    #[serde(default)]
    pub misalignment_deg: f64,
    #[serde(default)]
    pub eve: Option<EveConfig>,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self::lossless()
    }
}

impl ChannelModel {
    pub fn new(length_km: f64) -> Self {
        ChannelModel {
            length_km,
            attenuation_db_per_km: DEFAULT_ATTENUATION_DB_PER_KM,
            misalignment_deg: 0.0,
            eve: None,
        }
    }

    pub fn lossless() -> Self {
        Self::new(0.0)
    }

    /// A zero-length channel with the given transmittance folded into α.
    pub fn with_transmittance(t: f64) -> Self {
        ChannelModel {
            length_km: 1.0,
            attenuation_db_per_km: -10.0 * t.log10(),
            misalignment_deg: 0.0,
            eve: None,
        }
    }

    pub fn misaligned(mut self, deg: f64) -> Self {
        self.misalignment_deg = deg;
        self
    }

    pub fn with_eve(mut self, eve: EveConfig) -> Self {
        self.eve = Some(eve);
        self
    }

    pub fn loss_db(&self) -> f64 {
        self.attenuation_db_per_km * self.length_km
    }

    /// Single-photon survival probability `10^(−αL/10)`.
    pub fn transmittance(&self) -> f64 {
        10f64.powf(-self.loss_db() / 10.0)
    }

    pub fn validate(&self) -> Result<(), NetsimError> {
        let check = |field: &'static str, value: f64, ok: bool| {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(NetsimError::Invalid {
                    field: field.to_string(),
                    reason: format!("{value} is not allowed"),
                })
            }
        };
        check("length_km", self.length_km, self.length_km >= 0.0)?;
        check(
            "attenuation_db_per_km",
            self.attenuation_db_per_km,
            self.attenuation_db_per_km >= 0.0,
        )?;
        check("misalignment_deg", self.misalignment_deg, true)
    }
}

fn intercept_resend<R: Rng + ?Sized>(state: &Jones, rng: &mut R) -> Jones {
    let (basis, bit) = bb84_measure(
        Some(state),
        BasisChoice::Random,
        &DetectorModel::ideal(),
        rng,
    )
    .expect("an ideal detector always clicks on a present photon");
    PolarizationState::encode(basis, bit).jones()
}

/// Sends one photon down the fiber.
///
/// An eavesdropper, if configured, acts at the sender's end and forwards her
/// re-prepared photon without extra loss. The surviving photon is rotated by
/// the channel misalignment.
pub fn transmit<R: Rng + ?Sized>(
    state: impl Into<Jones>,
    ch: &ChannelModel,
    rng: &mut R,
) -> Option<Jones> {
    transmit_pulse(state, 1, ch, rng)
}

/// Sends a pulse of `photons` photons; the pulse arrives if any photon
/// survives, and a single representative photon is returned.
pub fn transmit_pulse<R: Rng + ?Sized>(
    state: impl Into<Jones>,
    photons: u32,
    ch: &ChannelModel,
    rng: &mut R,
) -> Option<Jones> {
    if photons == 0 {
        return None;
    }
    let mut state = state.into();
    if let Some(EveConfig::InterceptResend) = ch.eve {
        state = intercept_resend(&state, rng);
    }
    let t = ch.transmittance();
    let survived = t >= 1.0 || (0..photons).any(|_| rng.random::<f64>() < t);
    survived.then(|| state.rotate(ch.misalignment_deg))
}
