//! Measurement-device-independent key exchange through the untrusted relay.
//!
//! Two users send BB84 states at the same time; the relay interferes them and
//! announces which Bell state (singlet or triplet) it saw, or nothing. The
//! users keep announced rounds prepared in a common basis and one of them
//! flips bits according to basis and announcement.

use std::collections::BTreeMap;
use std::io;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bb84::{prepare, KeyError, KeyMaterial, KeyRole};
use crate::netsim::{transmit_pulse, ChannelModel, SourceModel};
use crate::optics::{
    bsm_distribution_with, classify, observe, random_basis, random_bit, single_photon_distribution,
    Basis, BitValue, BsmOutcome, DetectionPattern, DetectorModel, OpticsError, SplitterConvention,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MdiRoundRecord {
    pub round: u64,
    pub alice_basis: Basis,
    pub alice_bit: BitValue,
    pub bob_basis: Basis,
    pub bob_bit: BitValue,
    pub announced: BsmOutcome,
}

impl MdiRoundRecord {
    pub fn bases_match(&self) -> bool {
        self.alice_basis == self.bob_basis
    }
}

/// Physical setup of one Alice–relay–Bob exchange.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdiLink {
    pub sources: (SourceModel, SourceModel),
    pub channels: (ChannelModel, ChannelModel),
    pub detector: DetectorModel,
    pub visibility: f64,
    pub splitter: SplitterConvention,
    /// Fixed preparations for testing; `None` draws uniformly.
    pub alice: Option<(Basis, BitValue)>,
    pub bob: Option<(Basis, BitValue)>,
}

impl Default for MdiLink {
    fn default() -> Self {
        MdiLink {
            sources: Default::default(),
            channels: Default::default(),
            detector: DetectorModel::ideal(),
            visibility: 1.0,
            splitter: SplitterConvention::Standard,
            alice: None,
            bob: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MdiRun {
    pub records: Vec<MdiRoundRecord>,
    /// Rounds where either pulse carried two or more photons; only one photon
    /// per pulse is traced through the interferometer.
    pub multi_photon_rounds: u64,
}

impl MdiRun {
    pub fn announced(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.announced.is_success())
            .count()
    }
}

fn draw<R: Rng + ?Sized>(forced: Option<(Basis, BitValue)>, rng: &mut R) -> (Basis, BitValue) {
    forced.unwrap_or_else(|| {
        let basis = random_basis(rng);
        (basis, random_bit(rng))
    })
}

impl MdiLink {
    pub fn new(
        channel_a: ChannelModel,
        channel_b: ChannelModel,
        detector: DetectorModel,
        visibility: f64,
    ) -> Self {
        MdiLink {
            channels: (channel_a, channel_b),
            detector,
            visibility,
            ..Default::default()
        }
    }

    pub fn run<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> Result<MdiRun, OpticsError> {
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(OpticsError::OutOfRange {
                field: "visibility",
                value: self.visibility,
            });
        }
        let mut run = MdiRun {
            records: Vec::with_capacity(n as usize),
            multi_photon_rounds: 0,
        };
        for round in 0..n {
            let (alice_basis, alice_bit) = draw(self.alice, rng);
            let (bob_basis, bob_bit) = draw(self.bob, rng);
            let photons_a = self.sources.0.emit(rng);
            let photons_b = self.sources.1.emit(rng);
            if photons_a >= 2 || photons_b >= 2 {
                run.multi_photon_rounds += 1;
            }
            let a = transmit_pulse(
                prepare(alice_basis, alice_bit),
                photons_a,
                &self.channels.0,
                rng,
            );
            let b = transmit_pulse(
                prepare(bob_basis, bob_bit),
                photons_b,
                &self.channels.1,
                rng,
            );
            let ideal = match (a, b) {
                (Some(a), Some(b)) => {
                    bsm_distribution_with(a, b, self.visibility, self.splitter)?.sample(rng)
                }
                (Some(a), None) => single_photon_distribution(&a, false, self.splitter).sample(rng),
                (None, Some(b)) => single_photon_distribution(&b, true, self.splitter).sample(rng),
                (None, None) => DetectionPattern::EMPTY,
            };
            let clicks = observe(&ideal, &self.detector, rng);
            run.records.push(MdiRoundRecord {
                round,
                alice_basis,
                alice_bit,
                bob_basis,
                bob_bit,
                announced: classify(&clicks),
            });
        }
        Ok(run)
    }
}

pub fn run_rounds<R: Rng + ?Sized>(
    n: u64,
    channel_a: &ChannelModel,
    channel_b: &ChannelModel,
    det: &DetectorModel,
    visibility: f64,
    rng: &mut R,
) -> Result<Vec<MdiRoundRecord>, OpticsError> {
    Ok(MdiLink::new(*channel_a, *channel_b, *det, visibility)
        .run(n, rng)?
        .records)
}

/// A round that survived sifting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiftedRound {
    pub round: u64,
    pub alice_bit: BitValue,
    pub bob_bit: BitValue,
    pub basis: Basis,
    pub outcome: BsmOutcome,
}

/// Keeps announced rounds where both users chose the same basis.
pub fn sift(records: &[MdiRoundRecord]) -> Vec<SiftedRound> {
    records
        .iter()
        .filter(|r| r.announced.is_success() && r.bases_match())
        .map(|r| SiftedRound {
            round: r.round,
            alice_bit: r.alice_bit,
            bob_bit: r.bob_bit,
            basis: r.alice_basis,
            outcome: r.announced,
        })
        .collect()
}

/// Decides whether Bob flips his bit for a given basis and announcement.
pub type FlipRule = fn(Basis, BsmOutcome) -> bool;

/// Bob flips unless the basis is diagonal and a triplet was announced.
pub fn standard_flip_rule(basis: Basis, outcome: BsmOutcome) -> bool {
    !(basis == Basis::Diagonal && outcome == BsmOutcome::Triplet)
}

pub fn apply_flip_rules(sifted: &[SiftedRound]) -> (KeyMaterial, KeyMaterial) {
    apply_flip_rules_with(sifted, standard_flip_rule)
}

pub fn apply_flip_rules_with(sifted: &[SiftedRound], rule: FlipRule) -> (KeyMaterial, KeyMaterial) {
    let alice = sifted.iter().map(|s| s.alice_bit);
    let bob = sifted.iter().map(|s| {
        if rule(s.basis, s.outcome) {
            s.bob_bit.flipped()
        } else {
            s.bob_bit
        }
    });
    (
        KeyMaterial::from_bit_values("alice", KeyRole::Sifted, alice),
        KeyMaterial::from_bit_values("bob", KeyRole::Sifted, bob),
    )
}

/// Mismatch fraction per basis; bases with no bits are left out.
pub fn qber_by_basis(
    alice_key: &KeyMaterial,
    bob_key: &KeyMaterial,
    bases: &[Basis],
) -> Result<BTreeMap<Basis, f64>, KeyError> {
    alice_key.mismatches(bob_key)?;
    if bases.len() != alice_key.len() {
        return Err(KeyError::LengthMismatch {
            left: alice_key.len(),
            right: bases.len(),
        });
    }
    let mut tally: BTreeMap<Basis, (usize, usize)> = BTreeMap::new();
    for ((a, b), basis) in alice_key.bits().iter().zip(bob_key.bits()).zip(bases) {
        let e = tally.entry(*basis).or_default();
        e.0 += usize::from(a != b);
        e.1 += 1;
    }
    Ok(tally
        .into_iter()
        .map(|(basis, (err, n))| (basis, err as f64 / n as f64))
        .collect())
}

/// For each announced Bell state: (rounds with Alice's bit 0, total rounds),
/// over sifted rounds. A blind relay sees about half zeros either way.
pub fn alice_zero_counts(records: &[MdiRoundRecord]) -> BTreeMap<BsmOutcome, (u64, u64)> {
    let mut out: BTreeMap<BsmOutcome, (u64, u64)> = BTreeMap::new();
    for r in records
        .iter()
        .filter(|r| r.announced.is_success() && r.bases_match())
    {
        let e = out.entry(r.announced).or_default();
        e.0 += u64::from(r.alice_bit == BitValue::Zero);
        e.1 += 1;
    }
    out
}

#[derive(Serialize)]
struct MdiCsvRow {
    round: u64,
    a_basis: Basis,
    a_bit: String,
    b_basis: Basis,
    b_bit: String,
    outcome: BsmOutcome,
}

pub fn write_records_csv<W: io::Write>(records: &[MdiRoundRecord], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(MdiCsvRow {
            round: r.round,
            a_basis: r.alice_basis,
            a_bit: r.alice_bit.to_string(),
            b_basis: r.bob_basis,
            b_bit: r.bob_bit.to_string(),
            outcome: r.announced,
        })?;
    }
    out.flush()?;
    Ok(())
}
