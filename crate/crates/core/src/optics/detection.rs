use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::OpticsError;

/// Single-photon detectors behind the two polarizing beam splitters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DetectorId {
    H1,
    V1,
    H2,
    V2,
}

impl DetectorId {
    /// Canonical order, which is also the index into [`DetectionPattern`] counts.
    pub const ALL: [DetectorId; 4] = [
        DetectorId::H1,
        DetectorId::V1,
        DetectorId::H2,
        DetectorId::V2,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Output port of the interfering beam splitter (1 or 2).
    pub fn port(self) -> u8 {
        match self {
            DetectorId::H1 | DetectorId::V1 => 1,
            DetectorId::H2 | DetectorId::V2 => 2,
        }
    }

    pub fn is_horizontal(self) -> bool {
        matches!(self, DetectorId::H1 | DetectorId::H2)
    }

    pub fn is_orthogonal_to(self, other: DetectorId) -> bool {
        self.is_horizontal() != other.is_horizontal()
    }

    pub fn name(self) -> &'static str {
        match self {
            DetectorId::H1 => "H1",
            DetectorId::V1 => "V1",
            DetectorId::H2 => "H2",
            DetectorId::V2 => "V2",
        }
    }
}

impl fmt::Display for DetectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Photon (or click) count per detector in one time slot.
///
/// Canonical text form joins occupied detectors with `+` in `H1, V1, H2, V2`
/// order, writes `2xH1` for a doubly occupied detector and `none` for an empty
/// slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct DetectionPattern {
    counts: [u8; 4],
}

impl DetectionPattern {
    pub const EMPTY: DetectionPattern = DetectionPattern { counts: [0; 4] };

    pub fn from_counts(counts: [u8; 4]) -> Self {
        DetectionPattern { counts }
    }

    pub fn single(d: DetectorId) -> Self {
        let mut p = Self::EMPTY;
        p.add(d);
        p
    }

    pub fn pair(a: DetectorId, b: DetectorId) -> Self {
        let mut p = Self::single(a);
        p.add(b);
        p
    }

    pub fn add(&mut self, d: DetectorId) {
        self.counts[d.index()] = self.counts[d.index()].saturating_add(1);
    }

    pub fn count(&self, d: DetectorId) -> u8 {
        self.counts[d.index()]
    }

    pub fn counts(&self) -> [u8; 4] {
        self.counts
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().map(|&c| u32::from(c)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// Detectors with a nonzero count, in canonical order.
    pub fn clicked(&self) -> impl Iterator<Item = DetectorId> + '_ {
        DetectorId::ALL.into_iter().filter(|d| self.count(*d) > 0)
    }

    /// True if photons reached both output ports of the splitter.
    pub fn spans_both_ports(&self) -> bool {
        let mut ports = self.clicked().map(DetectorId::port);
        match ports.next() {
            Some(first) => ports.any(|p| p != first),
            None => false,
        }
    }

    /// Threshold view: every occupied detector reports exactly one click.
    pub fn threshold(&self) -> Self {
        let mut counts = [0u8; 4];
        for (c, &n) in counts.iter_mut().zip(self.counts.iter()) {
            *c = u8::from(n > 0);
        }
        DetectionPattern { counts }
    }

    /// Multiset of detector indices, used for the canonical ordering.
    fn occupancy(&self) -> impl Iterator<Item = usize> + '_ {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(i, &n)| std::iter::repeat_n(i, n as usize))
    }
}

impl Ord for DetectionPattern {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total()
            .cmp(&other.total())
            .then_with(|| self.occupancy().cmp(other.occupancy()))
    }
}

impl PartialOrd for DetectionPattern {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DetectionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("none");
        }
        let mut first = true;
        for d in DetectorId::ALL {
            let n = self.count(d);
            if n == 0 {
                continue;
            }
            if !first {
                f.write_str("+")?;
            }
            first = false;
            if n > 1 {
                write!(f, "{n}x")?;
            }
            f.write_str(d.name())?;
        }
        Ok(())
    }
}

impl FromStr for DetectionPattern {
    type Err = OpticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "none" {
            return Ok(Self::EMPTY);
        }
        let mut p = Self::EMPTY;
        for term in s.split('+') {
            let (n, name) = match term.split_once('x') {
                Some((n, name)) => {
                    let n: u8 = n
                        .parse()
                        .map_err(|_| OpticsError::Parse(format!("bad multiplicity in {term:?}")))?;
                    (n, name)
                }
                None => (1, term),
            };
            let d = DetectorId::ALL
                .into_iter()
                .find(|d| d.name() == name)
                .ok_or_else(|| OpticsError::Parse(format!("unknown detector {name:?}")))?;
            p.counts[d.index()] = p.counts[d.index()].saturating_add(n);
        }
        Ok(p)
    }
}

impl Serialize for DetectionPattern {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DetectionPattern {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BsmOutcome {
    Singlet,
    Triplet,
    Failure,
}

impl BsmOutcome {
    pub fn is_success(self) -> bool {
        self != BsmOutcome::Failure
    }
}

impl fmt::Display for BsmOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BsmOutcome::Singlet => "Singlet",
            BsmOutcome::Triplet => "Triplet",
            BsmOutcome::Failure => "Failure",
        };
        f.write_str(s)
    }
}

impl FromStr for BsmOutcome {
    type Err = OpticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Singlet" => Ok(BsmOutcome::Singlet),
            "Triplet" => Ok(BsmOutcome::Triplet),
            "Failure" => Ok(BsmOutcome::Failure),
            other => Err(OpticsError::Parse(format!("unknown BSM outcome {other:?}"))),
        }
    }
}

/// Partial Bell-state classification of a coincidence pattern.
///
/// Only single clicks on two orthogonal detectors count: same splitter port is
/// a triplet, opposite ports a singlet. Everything else fails.
pub fn classify(pattern: &DetectionPattern) -> BsmOutcome {
    if pattern.total() != 2 {
        return BsmOutcome::Failure;
    }
    let mut clicked = pattern.clicked();
    let (Some(a), Some(b)) = (clicked.next(), clicked.next()) else {
        return BsmOutcome::Failure;
    };
    if !a.is_orthogonal_to(b) {
        return BsmOutcome::Failure;
    }
    if a.port() == b.port() {
        BsmOutcome::Triplet
    } else {
        BsmOutcome::Singlet
    }
}

/// Threshold single-photon detector with finite efficiency and dark counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorModel {
    efficiency: f64,
    #[serde(default)]
    dark_count_prob: f64,
}

impl DetectorModel {
    pub fn new(efficiency: f64, dark_count_prob: f64) -> Result<Self, OpticsError> {
        let det = DetectorModel {
            efficiency,
            dark_count_prob,
        };
        det.validate()?;
        Ok(det)
    }

    /// Skips range checks; callers validate before use.
    pub(crate) fn unchecked(efficiency: f64, dark_count_prob: f64) -> Self {
        DetectorModel {
            efficiency,
            dark_count_prob,
        }
    }

    pub fn ideal() -> Self {
        DetectorModel {
            efficiency: 1.0,
            dark_count_prob: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), OpticsError> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(OpticsError::OutOfRange {
                field: "efficiency",
                value: self.efficiency,
            });
        }
        if !(0.0..1.0).contains(&self.dark_count_prob) {
            return Err(OpticsError::OutOfRange {
                field: "dark_count_prob",
                value: self.dark_count_prob,
            });
        }
        Ok(())
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    pub fn dark_count_prob(&self) -> f64 {
        self.dark_count_prob
    }

    /// Detectors do not resolve photon number.
    pub fn is_threshold(&self) -> bool {
        true
    }

    pub(crate) fn detects<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        self.efficiency >= 1.0 || (self.efficiency > 0.0 && rng.random::<f64>() < self.efficiency)
    }

    pub(crate) fn dark_click<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        self.dark_count_prob > 0.0 && rng.random::<f64>() < self.dark_count_prob
    }
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self::ideal()
    }
}

/// Passes an ideal photon pattern through imperfect threshold detectors.
///
/// Each photon survives independently with the detector efficiency; each of the
/// four detectors also dark-clicks independently. The result has at most one
/// click per detector.
pub fn observe<R: Rng + ?Sized>(
    pattern: &DetectionPattern,
    det: &DetectorModel,
    rng: &mut R,
) -> DetectionPattern {
    let mut counts = [0u8; 4];
    for d in DetectorId::ALL {
        let mut clicked = false;
        for _ in 0..pattern.count(d) {
            clicked |= det.detects(rng);
        }
        clicked |= det.dark_click(rng);
        counts[d.index()] = u8::from(clicked);
    }
    DetectionPattern { counts }
}
