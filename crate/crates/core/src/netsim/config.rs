use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ChannelModel, NetsimError, SourceModel};
use crate::bb84::DistillParams;
use crate::optics::DetectorModel;
use crate::relay::{schedule, RelayMode, SwitchSchedule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserConfig {
    pub name: String,
    #[serde(default)]
    pub source: SourceModel,
}

fn default_visibility() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelayConfig {
    pub mode: RelayMode,
    #[serde(default)]
    pub detector: DetectorModel,
    #[serde(default = "default_visibility")]
    pub visibility: f64,
}

/// Declarative description of one star-network session.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub users: Vec<UserConfig>,
    /// One fiber per user, keyed by user name.
    pub channels: BTreeMap<String, ChannelModel>,
    pub relay: RelayConfig,
    pub rounds: u64,
    pub seed: u64,
    /// User pairs that want a shared key.
    #[serde(default)]
    pub pairing: Vec<(String, String)>,
    #[serde(default)]
    pub distill: DistillParams,
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> NetsimError {
    NetsimError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

fn prefix(err: NetsimError, path: &str) -> NetsimError {
    match err {
        NetsimError::Invalid { field, reason } => NetsimError::Invalid {
            field: format!("{path}.{field}"),
            reason,
        },
        other => other,
    }
}

impl ScenarioConfig {
    /// Parses and validates a JSON scenario. Unknown fields are rejected.
    pub fn from_json(text: &str) -> Result<Self, NetsimError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            NetsimError::Parse {
                field: path,
                message: e.into_inner().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, NetsimError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn user_names(&self) -> Vec<String> {
        self.users.iter().map(|u| u.name.clone()).collect()
    }

    pub fn user(&self, name: &str) -> Option<&UserConfig> {
        self.users.iter().find(|u| u.name == name)
    }

    pub fn schedule(&self) -> Result<SwitchSchedule, NetsimError> {
        schedule(&self.user_names(), self.relay.mode, &self.pairing)
            .map_err(|e| invalid("pairing", e.to_string()))
    }

    pub fn validate(&self) -> Result<(), NetsimError> {
        if self.users.len() < 2 {
            return Err(invalid("users", "at least two users are required"));
        }
        let mut seen = BTreeSet::new();
        for u in &self.users {
            if u.name.is_empty() {
                return Err(invalid("users.name", "user names must be non-empty"));
            }
            if !seen.insert(u.name.as_str()) {
                return Err(invalid(
                    "users.name",
                    format!("duplicate user {:?}", u.name),
                ));
            }
            u.source
                .validate()
                .map_err(|e| prefix(e, &format!("users.{}.source", u.name)))?;
        }
        for name in self.channels.keys() {
            if !seen.contains(name.as_str()) {
                return Err(invalid(
                    format!("channels.{name}"),
                    "channel for unknown user",
                ));
            }
        }
        for u in &self.users {
            let ch = self.channels.get(&u.name).ok_or_else(|| {
                invalid(format!("channels.{}", u.name), "missing channel for user")
            })?;
            ch.validate()
                .map_err(|e| prefix(e, &format!("channels.{}", u.name)))?;
            if ch.eve.is_some() && self.relay.mode == RelayMode::Untrusted {
                return Err(invalid(
                    format!("channels.{}.eve", u.name),
                    "eavesdroppers are only modeled on BB84 links",
                ));
            }
        }
        self.relay.detector.validate().map_err(|e| match e {
            crate::optics::OpticsError::OutOfRange { field, value } => invalid(
                format!("relay.detector.{field}"),
                format!("{value} is out of range"),
            ),
            other => invalid("relay.detector", other.to_string()),
        })?;
        if !(0.0..=1.0).contains(&self.relay.visibility) {
            return Err(invalid(
                "relay.visibility",
                format!("{} is outside [0, 1]", self.relay.visibility),
            ));
        }
        if self.rounds == 0 {
            return Err(invalid("rounds", "must be at least 1"));
        }
        self.distill.validate().map_err(|(field, value)| {
            invalid(
                format!("distill.{field}"),
                format!("{value} is out of range"),
            )
        })?;
        self.schedule()?;
        Ok(())
    }

    /// Two users with lossless fibers, ideal sources and ideal detectors.
    pub fn ideal_pair(mode: RelayMode, rounds: u64, seed: u64) -> Self {
        let users = ["alice", "bob"];
        ScenarioConfig {
            users: users
                .iter()
                .map(|n| UserConfig {
                    name: n.to_string(),
                    source: SourceModel::default(),
                })
                .collect(),
            channels: users
                .iter()
                .map(|n| (n.to_string(), ChannelModel::lossless()))
                .collect(),
            relay: RelayConfig {
                mode,
                detector: DetectorModel::ideal(),
                visibility: 1.0,
            },
            rounds,
            seed,
            pairing: vec![("alice".into(), "bob".into())],
            distill: DistillParams::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRUSTED: &str = r#"{
        "users": [{"name": "alice"}, {"name": "bob", "source": {"kind": "weak_coherent", "mu": 0.4}}],
        "channels": {"alice": {"length_km": 10}, "bob": {"length_km": 20, "misalignment_deg": 2}},
        "relay": {"mode": "trusted", "detector": {"efficiency": 0.8, "dark_count_prob": 1e-6}},
        "rounds": 1000,
        "seed": 7,
        "pairing": [["alice", "bob"]]
    }"#;

    #[test]
    fn parses_a_full_config() {
        let cfg = ScenarioConfig::from_json(TRUSTED).unwrap();
        assert_eq!(cfg.users.len(), 2);
        assert_eq!(cfg.channels["bob"].attenuation_db_per_km, 0.2);
        assert_eq!(cfg.relay.visibility, 1.0);
        assert_eq!(cfg.distill.abort_threshold, 0.11);
        let again = ScenarioConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(again.to_json(), cfg.to_json());
    }

    #[test]
    fn unknown_field_is_rejected_with_its_path() {
        let text = TRUSTED.replace(r#""length_km": 10"#, r#""length_km": 10, "colour": 3"#);
        let err = ScenarioConfig::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");
        assert!(err.contains("channels.alice"), "{err}");
    }

    #[test]
    fn negative_length_names_the_field() {
        let text = TRUSTED.replace(r#""length_km": 10"#, r#""length_km": -5"#);
        let err = ScenarioConfig::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("channels.alice.length_km"), "{err}");
    }

    #[test]
    fn missing_channel() {
        let text = TRUSTED.replace(r#""alice": {"length_km": 10}, "#, "");
        let err = ScenarioConfig::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("channels.alice"), "{err}");
    }

    #[test]
    fn bad_detector_and_visibility() {
        let text = TRUSTED.replace(r#""efficiency": 0.8"#, r#""efficiency": 1.8"#);
        let err = ScenarioConfig::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("relay.detector.efficiency"), "{err}");
        let mut cfg = ScenarioConfig::ideal_pair(RelayMode::Untrusted, 10, 1);
        cfg.relay.visibility = 1.2;
        assert!(cfg
            .validate()
            .unwrap_err()
            .to_string()
            .contains("relay.visibility"));
    }

    #[test]
    fn degenerate_pair_is_rejected() {
        let mut cfg = ScenarioConfig::ideal_pair(RelayMode::Untrusted, 10, 1);
        cfg.pairing = vec![("alice".into(), "alice".into())];
        assert!(cfg.validate().unwrap_err().to_string().contains("pairing"));
    }

    #[test]
    fn eve_only_on_trusted_links() {
        let mut cfg = ScenarioConfig::ideal_pair(RelayMode::Untrusted, 10, 1);
        cfg.channels.get_mut("alice").unwrap().eve = Some(super::super::EveConfig::InterceptResend);
        assert!(cfg
            .validate()
            .unwrap_err()
            .to_string()
            .contains("channels.alice.eve"));
        cfg.relay.mode = RelayMode::Trusted;
        cfg.validate().unwrap();
    }

    #[test]
    fn zero_rounds() {
        let cfg = ScenarioConfig::ideal_pair(RelayMode::Trusted, 0, 1);
        assert!(cfg.validate().unwrap_err().to_string().contains("rounds"));
    }
}
