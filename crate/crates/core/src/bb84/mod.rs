//! BB84 prepare-and-measure link between one user and the relay.
//!
//! The user (Alice) draws a basis and a bit per round and sends the encoded
//! photon through her fiber; the relay's passive-basis receiver measures it.
//! After the run both sides publicly compare bases and keep the matching,
//! detected rounds. A random sample of the sifted key estimates the QBER and
//! the remainder is distilled.

mod key;

use std::io;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use key::{KeyError, KeyMaterial, KeyRole};

use crate::netsim::{transmit_pulse, ChannelModel, SourceModel};
use crate::optics::{
    bb84_measure, random_basis, random_bit, Basis, BasisChoice, BitValue, DetectorModel,
    PolarizationState,
};

/// Default QBER above which a session is aborted.
pub const DEFAULT_ABORT_THRESHOLD: f64 = 0.11;
pub const DEFAULT_SAMPLE_FRACTION: f64 = 0.1;
pub const DEFAULT_COMPRESSION_RATIO: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Bb84Error {
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error("insufficient key material for QBER estimation")]
    InsufficientMaterial,
    #[error("sample fraction {0} must lie in (0, 1]")]
    BadSampleFraction(f64),
    #[error("QBER {qber:.4} exceeds abort threshold {threshold}")]
    Abort { qber: f64, threshold: f64 },
}

pub fn prepare(basis: Basis, bit: BitValue) -> PolarizationState {
    PolarizationState::encode(basis, bit)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bb84RoundRecord {
    pub round: u64,
    pub alice_basis: Basis,
    pub alice_bit: BitValue,
    pub charlie_basis: Basis,
    pub detected: bool,
    pub charlie_bit: Option<BitValue>,
}

impl Bb84RoundRecord {
    pub fn bases_match(&self) -> bool {
        self.alice_basis == self.charlie_basis
    }
}

/// Physical setup of one BB84 link, with optional forced choices for testing.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Bb84Link {
    pub source: SourceModel,
    pub channel: ChannelModel,
    pub detector: DetectorModel,
    /// Fixes Alice's basis and bit instead of drawing them.
    pub alice: Option<(Basis, BitValue)>,
    pub receiver: BasisChoice,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Bb84Run {
    pub records: Vec<Bb84RoundRecord>,
    /// Pulses that left the source with two or more photons.
    pub multi_photon_pulses: u64,
}

impl Bb84Run {
    pub fn detected(&self) -> usize {
        self.records.iter().filter(|r| r.detected).count()
    }
}

impl Bb84Link {
    pub fn new(channel: ChannelModel, detector: DetectorModel) -> Self {
        Bb84Link {
            channel,
            detector,
            ..Default::default()
        }
    }

    pub fn run<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> Bb84Run {
        let mut run = Bb84Run {
            records: Vec::with_capacity(n as usize),
            multi_photon_pulses: 0,
        };
        for round in 0..n {
            let (alice_basis, alice_bit) = match self.alice {
                Some(forced) => forced,
                None => {
                    let basis = random_basis(rng);
                    (basis, random_bit(rng))
                }
            };
            let photons = self.source.emit(rng);
            if photons >= 2 {
                run.multi_photon_pulses += 1;
            }
            let state = prepare(alice_basis, alice_bit);
            let arrived = transmit_pulse(state, photons, &self.channel, rng);
            let click = bb84_measure(arrived.as_ref(), self.receiver, &self.detector, rng);
            let record = match click {
                Some((basis, bit)) => Bb84RoundRecord {
                    round,
                    alice_basis,
                    alice_bit,
                    charlie_basis: basis,
                    detected: true,
                    charlie_bit: Some(bit),
                },
                None => Bb84RoundRecord {
                    round,
                    alice_basis,
                    alice_bit,
                    charlie_basis: self.receiver.draw(rng),
                    detected: false,
                    charlie_bit: None,
                },
            };
            run.records.push(record);
        }
        run
    }
}

/// `n` rounds from an ideal single-photon source.
pub fn run_rounds<R: Rng + ?Sized>(
    n: u64,
    channel: &ChannelModel,
    det: &DetectorModel,
    rng: &mut R,
) -> Vec<Bb84RoundRecord> {
    Bb84Link::new(*channel, *det).run(n, rng).records
}

/// Keeps detected rounds whose bases agree; returns (Alice's, relay's) sifted keys.
pub fn sift(records: &[Bb84RoundRecord]) -> (KeyMaterial, KeyMaterial) {
    let (alice, charlie): (Vec<bool>, Vec<bool>) = records
        .iter()
        .filter(|r| r.detected && r.bases_match())
        .filter_map(|r| r.charlie_bit.map(|c| (r.alice_bit.as_bool(), c.as_bool())))
        .unzip();
    (
        KeyMaterial::new("alice", KeyRole::Sifted, alice),
        KeyMaterial::new("relay", KeyRole::Sifted, charlie),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct QberEstimate {
    pub qber: f64,
    pub sampled: usize,
    pub first: KeyMaterial,
    pub second: KeyMaterial,
}

/// Publicly compares a random `sample_fraction` of positions and drops them.
pub fn estimate_qber<R: Rng + ?Sized>(
    k1: &KeyMaterial,
    k2: &KeyMaterial,
    sample_fraction: f64,
    rng: &mut R,
) -> Result<QberEstimate, Bb84Error> {
    if !(sample_fraction > 0.0 && sample_fraction <= 1.0) {
        return Err(Bb84Error::BadSampleFraction(sample_fraction));
    }
    k1.mismatches(k2)?;
    let len = k1.len();
    if len == 0 {
        return Err(Bb84Error::InsufficientMaterial);
    }
    let m = ((sample_fraction * len as f64).ceil() as usize).clamp(1, len);
    let mut sampled = vec![false; len];
    for i in rand::seq::index::sample(rng, len, m) {
        sampled[i] = true;
    }
    let mut errors = 0usize;
    let mut rest1 = Vec::with_capacity(len - m);
    let mut rest2 = Vec::with_capacity(len - m);
    for (i, (&a, &b)) in k1.bits().iter().zip(k2.bits()).enumerate() {
        if sampled[i] {
            errors += usize::from(a != b);
        } else {
            rest1.push(a);
            rest2.push(b);
        }
    }
    Ok(QberEstimate {
        qber: errors as f64 / m as f64,
        sampled: m,
        first: KeyMaterial::new(k1.owner(), k1.role(), rest1),
        second: KeyMaterial::new(k2.owner(), k2.role(), rest2),
    })
}

/// Key distillation settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistillParams {
    pub sample_fraction: f64,
    /// Fraction of the corrected key removed by privacy amplification.
    pub compression_ratio: f64,
    pub abort_threshold: f64,
    /// Replaces the fixed ratio with a QBER-dependent compression.
    #[serde(skip)]
    pub compression_fn: Option<fn(f64) -> f64>,
}

impl Default for DistillParams {
    fn default() -> Self {
        DistillParams {
            sample_fraction: DEFAULT_SAMPLE_FRACTION,
            compression_ratio: DEFAULT_COMPRESSION_RATIO,
            abort_threshold: DEFAULT_ABORT_THRESHOLD,
            compression_fn: None,
        }
    }
}

impl DistillParams {
    pub fn compression(&self, qber: f64) -> f64 {
        let c = match self.compression_fn {
            Some(f) => f(qber),
            None => self.compression_ratio,
        };
        c.clamp(0.0, 1.0)
    }

    pub fn validate(&self) -> Result<(), (&'static str, f64)> {
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(("sample_fraction", self.sample_fraction));
        }
        if !(0.0..=1.0).contains(&self.compression_ratio) {
            return Err(("compression_ratio", self.compression_ratio));
        }
        if !(0.0..=1.0).contains(&self.abort_threshold) {
            return Err(("abort_threshold", self.abort_threshold));
        }
        Ok(())
    }
}

/// Error correction followed by privacy amplification.
///
/// Correction is done with knowledge of both keys: the second party simply
/// adopts the first party's bits. Both keys are then cut to
/// `⌈(1 − compression)·len⌉` bits.
pub fn distill(
    k1: &KeyMaterial,
    k2: &KeyMaterial,
    qber: f64,
    params: &DistillParams,
) -> Result<(KeyMaterial, KeyMaterial), Bb84Error> {
    k1.mismatches(k2)?;
    if qber > params.abort_threshold {
        return Err(Bb84Error::Abort {
            qber,
            threshold: params.abort_threshold,
        });
    }
    let keep = ((1.0 - params.compression(qber)) * k1.len() as f64).ceil() as usize;
    let final1 = k1.truncated(keep.min(k1.len())).with_role(KeyRole::Final);
    let final2 = final1.clone().owned_by(k2.owner());
    Ok((final1, final2))
}

#[derive(Serialize)]
struct Bb84CsvRow {
    round: u64,
    alice_basis: Basis,
    alice_bit: String,
    charlie_basis: Basis,
    detected: bool,
    charlie_bit: String,
}

/// Writes round records as CSV with a header row.
pub fn write_records_csv<W: io::Write>(records: &[Bb84RoundRecord], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(Bb84CsvRow {
            round: r.round,
            alice_basis: r.alice_basis,
            alice_bit: r.alice_bit.to_string(),
            charlie_basis: r.charlie_basis,
            detected: r.detected,
            charlie_bit: r.charlie_bit.map(|b| b.to_string()).unwrap_or_default(),
        })?;
    }
    out.flush()?;
    Ok(())
}
