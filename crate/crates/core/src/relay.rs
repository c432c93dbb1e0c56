//! The reconfigurable relay node.
//!
//! In trusted mode the relay runs a BB84 receiver, one user at a time, keeps
//! every user's key and publishes the bitwise parity of two users' keys so
//! they can recover each other's key. In untrusted mode the same detectors
//! form a two-input Bell-state analyzer and the relay only ever publishes
//! singlet/triplet announcements.

use std::collections::BTreeMap;
use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};

use crate::bb84::{KeyError, KeyMaterial};
use crate::optics::{BsmOutcome, DetectorModel};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RelayError {
    #[error("cannot change relay mode while a session is in progress")]
    SessionInProgress,
    #[error("a session is already in progress")]
    AlreadyInSession,
    #[error("no session in progress")]
    NoSession,
    #[error("the key store is unavailable in untrusted mode")]
    KeyStoreDisabled,
    #[error("this operation is not available in {0} mode")]
    WrongMode(RelayMode),
    #[error("need at least two users, got {0}")]
    TooFewUsers(usize),
    #[error("pair ({0}, {0}) names the same user twice")]
    DegeneratePair(String),
    #[error("unknown user {0:?}")]
    UnknownUser(String),
    #[error("untrusted mode needs at least one user pair")]
    NoPairs,
    #[error(transparent)]
    Key(#[from] KeyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelayMode {
    Trusted,
    Untrusted,
}

impl fmt::Display for RelayMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RelayMode::Trusted => "Trusted",
            RelayMode::Untrusted => "Untrusted",
        })
    }
}

/// Optical configuration of the shared receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReceiverConfig {
    /// One input port; a half-wave plate on one splitter arm measures the
    /// diagonal basis.
    Bb84 { inputs: u8, diagonal_branch: bool },
    /// Both splitter inputs used for two-photon interference; all four
    /// detectors see rectilinear polarizations only.
    Bsm { inputs: u8, diagonal_branch: bool },
}

impl ReceiverConfig {
    pub fn for_mode(mode: RelayMode) -> Self {
        match mode {
            RelayMode::Trusted => ReceiverConfig::Bb84 {
                inputs: 1,
                diagonal_branch: true,
            },
            RelayMode::Untrusted => ReceiverConfig::Bsm {
                inputs: 2,
                diagonal_branch: false,
            },
        }
    }

    pub fn inputs(&self) -> u8 {
        match *self {
            ReceiverConfig::Bb84 { inputs, .. } | ReceiverConfig::Bsm { inputs, .. } => inputs,
        }
    }

    pub fn has_diagonal_branch(&self) -> bool {
        match *self {
            ReceiverConfig::Bb84 {
                diagonal_branch, ..
            }
            | ReceiverConfig::Bsm {
                diagonal_branch, ..
            } => diagonal_branch,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnnouncementContent {
    Bsm(BsmOutcome),
    /// Bitwise parity of two users' keys.
    Parity {
        pair: (String, String),
        bits: KeyMaterial,
    },
}

impl fmt::Display for AnnouncementContent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnnouncementContent::Bsm(o) => write!(f, "{o}"),
            AnnouncementContent::Parity { bits, .. } => write!(f, "{bits}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Announcement {
    pub slot: usize,
    pub round: Option<u64>,
    pub mode: RelayMode,
    pub content: AnnouncementContent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reconfiguration {
    pub from: RelayMode,
    pub to: RelayMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelayNode {
    mode: RelayMode,
    detector: DetectorModel,
    receiver: ReceiverConfig,
    key_store: BTreeMap<String, KeyMaterial>,
    announcements: Vec<Announcement>,
    reconfigurations: Vec<Reconfiguration>,
    in_session: bool,
}

impl RelayNode {
    pub fn new(mode: RelayMode, detector: DetectorModel) -> Self {
        RelayNode {
            mode,
            detector,
            receiver: ReceiverConfig::for_mode(mode),
            key_store: BTreeMap::new(),
            announcements: Vec::new(),
            reconfigurations: Vec::new(),
            in_session: false,
        }
    }

    pub fn mode(&self) -> RelayMode {
        self.mode
    }

    pub fn detector(&self) -> &DetectorModel {
        &self.detector
    }

    pub fn receiver(&self) -> ReceiverConfig {
        self.receiver
    }

    pub fn key_store(&self) -> &BTreeMap<String, KeyMaterial> {
        &self.key_store
    }

    pub fn announcements(&self) -> &[Announcement] {
        &self.announcements
    }

    pub fn reconfigurations(&self) -> &[Reconfiguration] {
        &self.reconfigurations
    }

    pub fn in_session(&self) -> bool {
        self.in_session
    }

    /// Switches the receiver between BB84 and BSM operation.
    ///
    /// Entering untrusted mode wipes the key store.
    pub fn set_mode(&mut self, mode: RelayMode) -> Result<(), RelayError> {
        if self.in_session {
            return Err(RelayError::SessionInProgress);
        }
        if mode == self.mode {
            return Ok(());
        }
        if mode == RelayMode::Untrusted {
            self.key_store.clear();
        }
        self.reconfigurations.push(Reconfiguration {
            from: self.mode,
            to: mode,
        });
        self.mode = mode;
        self.receiver = ReceiverConfig::for_mode(mode);
        Ok(())
    }

    pub fn begin_session(&mut self) -> Result<(), RelayError> {
        if self.in_session {
            return Err(RelayError::AlreadyInSession);
        }
        self.in_session = true;
        Ok(())
    }

    pub fn end_session(&mut self) -> Result<(), RelayError> {
        if !self.in_session {
            return Err(RelayError::NoSession);
        }
        self.in_session = false;
        Ok(())
    }

    /// Records the relay's copy of a user's key (trusted mode only).
    pub fn store_key(&mut self, user: &str, key: KeyMaterial) -> Result<(), RelayError> {
        if self.mode != RelayMode::Trusted {
            return Err(RelayError::KeyStoreDisabled);
        }
        self.key_store
            .insert(user.to_string(), key.owned_by("relay"));
        Ok(())
    }

    /// Forgets every stored key.
    pub fn purge(&mut self) {
        self.key_store.clear();
    }

    pub fn announce_bsm(
        &mut self,
        slot: usize,
        round: u64,
        outcome: BsmOutcome,
    ) -> Result<(), RelayError> {
        if self.mode != RelayMode::Untrusted {
            return Err(RelayError::WrongMode(self.mode));
        }
        self.announcements.push(Announcement {
            slot,
            round: Some(round),
            mode: self.mode,
            content: AnnouncementContent::Bsm(outcome),
        });
        Ok(())
    }

    /// Publishes `K_a ⊕ K_b` from the stored keys, cut to their common length.
    pub fn announce_parity(
        &mut self,
        slot: usize,
        a: &str,
        b: &str,
    ) -> Result<KeyMaterial, RelayError> {
        if self.mode != RelayMode::Trusted {
            return Err(RelayError::WrongMode(self.mode));
        }
        let ka = self
            .key_store
            .get(a)
            .ok_or_else(|| RelayError::UnknownUser(a.to_string()))?;
        let kb = self
            .key_store
            .get(b)
            .ok_or_else(|| RelayError::UnknownUser(b.to_string()))?;
        let common = ka.len().min(kb.len());
        let parity = xor_relay(&ka.truncated(common), &kb.truncated(common))?;
        self.announcements.push(Announcement {
            slot,
            round: None,
            mode: self.mode,
            content: AnnouncementContent::Parity {
                pair: (a.to_string(), b.to_string()),
                bits: parity.clone(),
            },
        });
        Ok(parity)
    }

    /// Writes `slot,announcement,mode` rows.
    pub fn write_announcements_csv<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["slot", "announcement", "mode"])?;
        for a in &self.announcements {
            out.write_record([
                a.slot.to_string(),
                a.content.to_string(),
                a.mode.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Public parity string `K_A ⊕ K_B`.
pub fn xor_relay(ka: &KeyMaterial, kb: &KeyMaterial) -> Result<KeyMaterial, RelayError> {
    Ok(ka.xor(kb)?.owned_by("relay").into_public())
}

/// Recovers the peer's key from one's own key and the announced parity.
pub fn infer_peer_key(own: &KeyMaterial, parity: &KeyMaterial) -> Result<KeyMaterial, RelayError> {
    Ok(own.xor(parity)?)
}

/// Users allowed through the optical switch in one slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slot {
    pub users: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitchSchedule {
    pub mode: RelayMode,
    pub slots: Vec<Slot>,
}

impl SwitchSchedule {
    /// Repeats the schedule forever.
    pub fn cycle(&self) -> impl Iterator<Item = &Slot> {
        self.slots.iter().cycle()
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

/// Trusted mode gives every user a slot of its own; untrusted mode gives
/// every requested pair a joint slot.
pub fn schedule(
    users: &[String],
    mode: RelayMode,
    pairing: &[(String, String)],
) -> Result<SwitchSchedule, RelayError> {
    if users.len() < 2 {
        return Err(RelayError::TooFewUsers(users.len()));
    }
    for (a, b) in pairing {
        for u in [a, b] {
            if !users.contains(u) {
                return Err(RelayError::UnknownUser(u.clone()));
            }
        }
        if a == b {
            return Err(RelayError::DegeneratePair(a.clone()));
        }
    }
    let slots = match mode {
        RelayMode::Trusted => users
            .iter()
            .map(|u| Slot {
                users: vec![u.clone()],
            })
            .collect(),
        RelayMode::Untrusted => {
            if pairing.is_empty() {
                return Err(RelayError::NoPairs);
            }
            pairing
                .iter()
                .map(|(a, b)| Slot {
                    users: vec![a.clone(), b.clone()],
                })
                .collect()
        }
    };
    Ok(SwitchSchedule { mode, slots })
}
