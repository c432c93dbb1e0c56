use rand::Rng;

use super::{rotate, Basis, BitValue, DetectorModel, Jones, PolarizationState};

/// How the receiver's 50:50 splitter picks a measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BasisChoice {
    #[default]
    Random,
    Forced(Basis),
}

impl BasisChoice {
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> Basis {
        match self {
            BasisChoice::Forced(b) => b,
            BasisChoice::Random => random_basis(rng),
        }
    }
}

pub fn random_basis<R: Rng + ?Sized>(rng: &mut R) -> Basis {
    if rng.random::<bool>() {
        Basis::Diagonal
    } else {
        Basis::Rectilinear
    }
}

pub fn random_bit<R: Rng + ?Sized>(rng: &mut R) -> BitValue {
    BitValue::from_bool(rng.random::<bool>())
}

/// State heralded by the H or V detector of a branch.
fn heralded(basis: Basis, horizontal: bool) -> PolarizationState {
    // The diagonal branch rotates by −45° before its PBS, so DPlus lands on H.
    match (basis, horizontal) {
        (Basis::Rectilinear, true) => PolarizationState::H,
        (Basis::Rectilinear, false) => PolarizationState::V,
        (Basis::Diagonal, true) => PolarizationState::DPlus,
        (Basis::Diagonal, false) => PolarizationState::DMinus,
    }
}

/// Polarization-encoded BB84 receiver with a passive basis choice.
///
/// `photon` is `None` when the pulse was lost upstream. A lost or undetected
/// photon leaves the gate to the four dark-counting detectors: a single dark
/// click is reported with that detector's basis and bit, more than one click
/// makes the gate invalid.
pub fn bb84_measure<R: Rng + ?Sized>(
    photon: Option<&Jones>,
    choice: BasisChoice,
    det: &DetectorModel,
    rng: &mut R,
) -> Option<(Basis, BitValue)> {
    if let Some(state) = photon {
        let basis = choice.draw(rng);
        let projected = match basis {
            Basis::Rectilinear => *state,
            Basis::Diagonal => rotate(state, -45.0),
        };
        let p_h = projected.h().norm_sqr() / projected.norm_sqr();
        let horizontal = rng.random::<f64>() < p_h;
        if det.detects(rng) {
            return Some((basis, heralded(basis, horizontal).bit()));
        }
    }
    dark_gate(det, rng)
}

fn dark_gate<R: Rng + ?Sized>(det: &DetectorModel, rng: &mut R) -> Option<(Basis, BitValue)> {
    if det.dark_count_prob() <= 0.0 {
        return None;
    }
    let mut click = None;
    let mut clicks = 0;
    for basis in Basis::ALL {
        for horizontal in [true, false] {
            if det.dark_click(rng) {
                clicks += 1;
                click = Some((basis, heralded(basis, horizontal).bit()));
            }
        }
    }
    if clicks == 1 {
        click
    } else {
        None
    }
}
