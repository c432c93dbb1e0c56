use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::OpticsError;

/// Tolerance on `|h|² + |v|² = 1` for a constructed Jones pair.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// One of the two conjugate BB84 bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    Rectilinear,
    Diagonal,
}

impl Basis {
    pub const ALL: [Basis; 2] = [Basis::Rectilinear, Basis::Diagonal];

    /// Short symbol used in tables and CSV output.
    pub fn symbol(self) -> &'static str {
        match self {
            Basis::Rectilinear => "+",
            Basis::Diagonal => "x",
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::Rectilinear => f.write_str("Rectilinear"),
            Basis::Diagonal => f.write_str("Diagonal"),
        }
    }
}

impl FromStr for Basis {
    type Err = OpticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Rectilinear" | "rectilinear" | "+" => Ok(Basis::Rectilinear),
            "Diagonal" | "diagonal" | "x" => Ok(Basis::Diagonal),
            other => Err(OpticsError::Parse(format!("unknown basis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BitValue {
    Zero,
    One,
}

impl BitValue {
    pub fn from_bool(b: bool) -> Self {
        if b {
            BitValue::One
        } else {
            BitValue::Zero
        }
    }

    pub fn as_bool(self) -> bool {
        self == BitValue::One
    }

    pub fn flipped(self) -> Self {
        Self::from_bool(!self.as_bool())
    }
}

impl fmt::Display for BitValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.as_bool() { "1" } else { "0" })
    }
}

impl FromStr for BitValue {
    type Err = OpticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "0" => Ok(BitValue::Zero),
            "1" => Ok(BitValue::One),
            other => Err(OpticsError::Parse(format!("unknown bit {other:?}"))),
        }
    }
}

/// The four BB84 polarization states.
///
/// Diagonal encoding: `DMinus` (−45°) carries bit 0 and `DPlus` (+45°) bit 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolarizationState {
    H,
    V,
    DMinus,
    DPlus,
}

impl PolarizationState {
    pub const ALL: [PolarizationState; 4] = [
        PolarizationState::H,
        PolarizationState::V,
        PolarizationState::DMinus,
        PolarizationState::DPlus,
    ];

    pub fn encode(basis: Basis, bit: BitValue) -> Self {
        match (basis, bit) {
            (Basis::Rectilinear, BitValue::Zero) => PolarizationState::H,
            (Basis::Rectilinear, BitValue::One) => PolarizationState::V,
            (Basis::Diagonal, BitValue::Zero) => PolarizationState::DMinus,
            (Basis::Diagonal, BitValue::One) => PolarizationState::DPlus,
        }
    }

    pub fn basis(self) -> Basis {
        match self {
            PolarizationState::H | PolarizationState::V => Basis::Rectilinear,
            PolarizationState::DMinus | PolarizationState::DPlus => Basis::Diagonal,
        }
    }

    pub fn bit(self) -> BitValue {
        match self {
            PolarizationState::H | PolarizationState::DMinus => BitValue::Zero,
            PolarizationState::V | PolarizationState::DPlus => BitValue::One,
        }
    }

    /// Polarization angle in degrees.
    pub fn angle_deg(self) -> f64 {
        match self {
            PolarizationState::H => 0.0,
            PolarizationState::V => 90.0,
            PolarizationState::DMinus => -45.0,
            PolarizationState::DPlus => 45.0,
        }
    }

    pub fn jones(self) -> Jones {
        jones_of(self)
    }
}

impl fmt::Display for PolarizationState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PolarizationState::H => "H",
            PolarizationState::V => "V",
            PolarizationState::DMinus => "DMinus",
            PolarizationState::DPlus => "DPlus",
        };
        f.write_str(s)
    }
}

/// A pure polarization state as a pair of complex amplitudes on the H/V axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jones {
    h: Complex64,
    v: Complex64,
}

impl Jones {
    /// Builds a Jones pair, rejecting anything that is not unit norm.
    pub fn new(h: Complex64, v: Complex64) -> Result<Self, OpticsError> {
        let norm = h.norm_sqr() + v.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(OpticsError::NotNormalized(norm));
        }
        Ok(Jones { h, v })
    }

    /// Builds a Jones pair after rescaling to unit norm.
    pub fn normalized(h: Complex64, v: Complex64) -> Result<Self, OpticsError> {
        let norm = (h.norm_sqr() + v.norm_sqr()).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(OpticsError::NotNormalized(norm * norm));
        }
        Ok(Jones {
            h: h / norm,
            v: v / norm,
        })
    }

    /// Linear polarization at `theta_deg` from horizontal.
    pub fn linear(theta_deg: f64) -> Self {
        let (s, c) = theta_deg.to_radians().sin_cos();
        Jones {
            h: Complex64::new(c, 0.0),
            v: Complex64::new(s, 0.0),
        }
    }

    pub fn h(&self) -> Complex64 {
        self.h
    }

    pub fn v(&self) -> Complex64 {
        self.v
    }

    pub fn norm_sqr(&self) -> f64 {
        self.h.norm_sqr() + self.v.norm_sqr()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Jones) -> Complex64 {
        self.h.conj() * other.h + self.v.conj() * other.v
    }

    /// Equality up to a global phase: `|⟨a|b⟩| = 1` within `tol`.
    pub fn same_state(&self, other: &Jones, tol: f64) -> bool {
        (self.inner(other).norm() - 1.0).abs() <= tol
    }

    pub fn rotate(&self, theta_deg: f64) -> Jones {
        rotate(self, theta_deg)
    }
}

impl From<PolarizationState> for Jones {
    fn from(s: PolarizationState) -> Self {
        jones_of(s)
    }
}

pub fn jones_of(state: PolarizationState) -> Jones {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let (h, v) = match state {
        PolarizationState::H => (1.0, 0.0),
        PolarizationState::V => (0.0, 1.0),
        PolarizationState::DPlus => (r, r),
        PolarizationState::DMinus => (r, -r),
    };
    Jones {
        h: Complex64::new(h, 0.0),
        v: Complex64::new(v, 0.0),
    }
}

/// Applies the real rotation `[cos θ, −sin θ; sin θ, cos θ]`.
pub fn rotate(state: &Jones, theta_deg: f64) -> Jones {
    if theta_deg == 0.0 {
        return *state;
    }
    let (s, c) = theta_deg.to_radians().sin_cos();
    Jones {
        h: state.h * c - state.v * s,
        v: state.h * s + state.v * c,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn named_states_are_unit_norm() {
        for s in PolarizationState::ALL {
            assert!((s.jones().norm_sqr() - 1.0).abs() < TOL, "{s}");
        }
    }

    #[test]
    fn jones_table() {
        assert_eq!(jones_of(PolarizationState::H).h(), Complex64::new(1.0, 0.0));
        assert_eq!(jones_of(PolarizationState::H).v(), Complex64::new(0.0, 0.0));
        let dp = jones_of(PolarizationState::DPlus);
        assert!((dp.h().re - 0.707_106_781_186_547_5).abs() < TOL);
        assert!((dp.v().re - 0.707_106_781_186_547_5).abs() < TOL);
        let dm = jones_of(PolarizationState::DMinus);
        assert!((dm.v().re + 0.707_106_781_186_547_5).abs() < TOL);
    }

    #[test]
    fn encoding_is_a_bijection_per_basis() {
        for basis in Basis::ALL {
            for bit in [BitValue::Zero, BitValue::One] {
                let s = PolarizationState::encode(basis, bit);
                assert_eq!(s.basis(), basis);
                assert_eq!(s.bit(), bit);
            }
        }
        assert_eq!(
            PolarizationState::encode(Basis::Diagonal, BitValue::Zero),
            PolarizationState::DMinus
        );
    }

    #[test]
    fn quarter_turn_maps_h_to_v() {
        let r = rotate(&PolarizationState::H.jones(), 90.0);
        assert!(r.same_state(&PolarizationState::V.jones(), TOL));
    }

    #[test]
    fn rotate_h_by_45_gives_dplus() {
        let r = rotate(&PolarizationState::H.jones(), 45.0);
        assert!(r.same_state(&PolarizationState::DPlus.jones(), TOL));
    }

    #[test]
    fn rotate_dminus_by_45_gives_h() {
        // [c -s; s c]·(1, -1)/√2 with c = s = 1/√2 is (1, 0).
        let r = rotate(&PolarizationState::DMinus.jones(), 45.0);
        assert!((r.h().re - 1.0).abs() < TOL);
        assert!(r.v().norm() < TOL);
    }

    #[test]
    fn zero_rotation_is_identity() {
        for s in PolarizationState::ALL {
            assert_eq!(rotate(&s.jones(), 0.0), s.jones());
        }
    }

    #[test]
    fn rejects_unnormalized_pairs() {
        assert!(Jones::new(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)).is_err());
        assert!(Jones::normalized(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)).is_err());
        let j = Jones::normalized(Complex64::new(3.0, 0.0), Complex64::new(0.0, 4.0)).unwrap();
        assert!((j.norm_sqr() - 1.0).abs() < TOL);
    }

    #[test]
    fn same_state_ignores_global_phase() {
        let a = PolarizationState::DPlus.jones();
        let phase = Complex64::from_polar(1.0, 1.234);
        let b = Jones::new(a.h() * phase, a.v() * phase).unwrap();
        assert!(a.same_state(&b, TOL));
        assert!(!a.same_state(&PolarizationState::DMinus.jones(), 1e-3));
    }
}
