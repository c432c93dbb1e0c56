//! Two-photon statistics of the Bell-state-measurement receiver.
//!
//! Two photons enter the input ports `a` and `b` of a 50:50 beam splitter.
//! Each output port feeds a polarizing beam splitter with an H and a V
//! detector, giving four output modes indexed like [`DetectorId`]. The ideal
//! outcome distribution is obtained by expanding the product of the two
//! transformed creation operators in the Fock basis.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;

use super::{classify, BsmOutcome, DetectionPattern, DetectorId, Jones, OpticsError};

/// Normalization tolerance for [`TwoPhotonDistribution`].
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-12;

/// Phase convention of the interfering beam splitter.
///
/// `Standard` maps `a† → (c† + d†)/√2`, `b† → (c† − d†)/√2`. `Mirrored` flips
/// the sign of the port-2 term on both inputs. Both are unitary and give
/// identical pattern probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitterConvention {
    #[default]
    Standard,
    Mirrored,
}

impl SplitterConvention {
    /// `(port-1, port-2)` coefficients for input `a` and input `b`.
    fn coefficients(self) -> ([f64; 2], [f64; 2]) {
        let r = FRAC_1_SQRT_2;
        match self {
            SplitterConvention::Standard => ([r, r], [r, -r]),
            SplitterConvention::Mirrored => ([r, -r], [r, r]),
        }
    }
}

/// Probability of each detection pattern for one round.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TwoPhotonDistribution {
    probs: BTreeMap<DetectionPattern, f64>,
}

impl TwoPhotonDistribution {
    fn accumulate(&mut self, pattern: DetectionPattern, p: f64) {
        if p > 0.0 {
            *self.probs.entry(pattern).or_insert(0.0) += p;
        }
    }

    pub fn prob(&self, pattern: &DetectionPattern) -> f64 {
        self.probs.get(pattern).copied().unwrap_or(0.0)
    }

    /// Patterns with nonzero probability, in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (&DetectionPattern, f64)> {
        self.probs.iter().map(|(k, v)| (k, *v))
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Total probability of a given BSM announcement.
    pub fn outcome_prob(&self, outcome: BsmOutcome) -> f64 {
        self.iter()
            .filter(|(p, _)| classify(p) == outcome)
            .map(|(_, q)| q)
            .sum()
    }

    /// Probability that photons are found at both splitter outputs.
    pub fn cross_port_prob(&self) -> f64 {
        self.iter()
            .filter(|(p, _)| p.spans_both_ports())
            .map(|(_, q)| q)
            .sum()
    }

    /// `weight·self + (1 − weight)·other`
    pub fn mix(&self, other: &TwoPhotonDistribution, weight: f64) -> TwoPhotonDistribution {
        let mut out = TwoPhotonDistribution::default();
        for (p, q) in self.iter() {
            out.accumulate(*p, weight * q);
        }
        for (p, q) in other.iter() {
            out.accumulate(*p, (1.0 - weight) * q);
        }
        out
    }

    /// Draws one pattern by inverse-CDF sampling.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DetectionPattern {
        let u = rng.random::<f64>() * self.total();
        let mut acc = 0.0;
        let mut last = DetectionPattern::EMPTY;
        for (p, q) in self.iter() {
            acc += q;
            last = *p;
            if u < acc {
                return *p;
            }
        }
        last
    }
}

/// Output-mode amplitudes of one photon after the splitter, in `DetectorId` order.
fn route(input: &Jones, port_coeffs: [f64; 2]) -> [Complex64; 4] {
    [
        input.h() * port_coeffs[0],
        input.v() * port_coeffs[0],
        input.h() * port_coeffs[1],
        input.v() * port_coeffs[1],
    ]
}

fn interfering(alpha: &[Complex64; 4], beta: &[Complex64; 4]) -> TwoPhotonDistribution {
    let mut dist = TwoPhotonDistribution::default();
    for m in 0..4 {
        for n in m..4 {
            let dm = DetectorId::ALL[m];
            let dn = DetectorId::ALL[n];
            let p = if m == n {
                // (c†)²|0⟩ = √2|2⟩
                2.0 * (alpha[m] * beta[m]).norm_sqr()
            } else {
                (alpha[m] * beta[n] + alpha[n] * beta[m]).norm_sqr()
            };
            dist.accumulate(DetectionPattern::pair(dm, dn), p);
        }
    }
    dist
}

fn distinguishable(alpha: &[Complex64; 4], beta: &[Complex64; 4]) -> TwoPhotonDistribution {
    let mut dist = TwoPhotonDistribution::default();
    for (m, am) in alpha.iter().enumerate() {
        for (n, bn) in beta.iter().enumerate() {
            let p = am.norm_sqr() * bn.norm_sqr();
            dist.accumulate(
                DetectionPattern::pair(DetectorId::ALL[m], DetectorId::ALL[n]),
                p,
            );
        }
    }
    dist
}

/// Ideal-detector outcome distribution for photons `a` and `b` at visibility `v`.
///
/// `v = 1` is full two-photon interference; `v = 0` routes the photons
/// independently; intermediate values mix the two linearly.
pub fn bsm_distribution(
    a: impl Into<Jones>,
    b: impl Into<Jones>,
    visibility: f64,
) -> Result<TwoPhotonDistribution, OpticsError> {
    bsm_distribution_with(a, b, visibility, SplitterConvention::Standard)
}

pub fn bsm_distribution_with(
    a: impl Into<Jones>,
    b: impl Into<Jones>,
    visibility: f64,
    convention: SplitterConvention,
) -> Result<TwoPhotonDistribution, OpticsError> {
    if !(0.0..=1.0).contains(&visibility) {
        return Err(OpticsError::OutOfRange {
            field: "visibility",
            value: visibility,
        });
    }
    let (ca, cb) = convention.coefficients();
    let alpha = route(&a.into(), ca);
    let beta = route(&b.into(), cb);
    if visibility >= 1.0 {
        return Ok(interfering(&alpha, &beta));
    }
    let classical = distinguishable(&alpha, &beta);
    if visibility <= 0.0 {
        return Ok(classical);
    }
    Ok(interfering(&alpha, &beta).mix(&classical, visibility))
}

/// Where a lone photon entering one splitter input ends up.
pub fn single_photon_distribution(
    photon: &Jones,
    input_b: bool,
    convention: SplitterConvention,
) -> TwoPhotonDistribution {
    let (ca, cb) = convention.coefficients();
    let amps = route(photon, if input_b { cb } else { ca });
    let mut dist = TwoPhotonDistribution::default();
    for (i, amp) in amps.iter().enumerate() {
        dist.accumulate(DetectionPattern::single(DetectorId::ALL[i]), amp.norm_sqr());
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::PolarizationState::{self, *};
    use DetectorId::*;

    const TOL: f64 = 1e-12;

    fn p(s: &str) -> DetectionPattern {
        s.parse().unwrap()
    }

    fn assert_dist(d: &TwoPhotonDistribution, expected: &[(&str, f64)]) {
        for (pat, q) in expected {
            assert!(
                (d.prob(&p(pat)) - q).abs() < TOL,
                "{pat}: got {}, want {q}",
                d.prob(&p(pat))
            );
        }
        let listed: f64 = expected.iter().map(|(_, q)| q).sum();
        assert!((listed - 1.0).abs() < TOL);
        for (pat, q) in d.iter() {
            if q > TOL {
                assert!(
                    expected.iter().any(|(s, _)| p(s) == *pat),
                    "unexpected pattern {pat} at {q}"
                );
            }
        }
    }

    #[test]
    fn orthogonal_rectilinear() {
        let d = bsm_distribution(H, V, 1.0).unwrap();
        assert_dist(
            &d,
            &[
                ("H1+V1", 0.25),
                ("H2+V2", 0.25),
                ("H1+V2", 0.25),
                ("V1+H2", 0.25),
            ],
        );
    }

    #[test]
    fn identical_horizontal_bunches() {
        let d = bsm_distribution(H, H, 1.0).unwrap();
        assert_dist(&d, &[("2xH1", 0.5), ("2xH2", 0.5)]);
    }

    #[test]
    fn orthogonal_diagonal() {
        let d = bsm_distribution(DPlus, DMinus, 1.0).unwrap();
        assert_dist(
            &d,
            &[
                ("2xH1", 0.125),
                ("2xV1", 0.125),
                ("2xH2", 0.125),
                ("2xV2", 0.125),
                ("H1+V2", 0.25),
                ("V1+H2", 0.25),
            ],
        );
        assert!(d.prob(&p("H1+H2")) < TOL);
        assert!(d.prob(&p("V1+V2")) < TOL);
    }

    #[test]
    fn identical_diagonal() {
        let d = bsm_distribution(DPlus, DPlus, 1.0).unwrap();
        assert_dist(
            &d,
            &[
                ("H1+V1", 0.25),
                ("H2+V2", 0.25),
                ("2xH1", 0.125),
                ("2xV1", 0.125),
                ("2xH2", 0.125),
                ("2xV2", 0.125),
            ],
        );
    }

    #[test]
    fn rejects_visibility_out_of_range() {
        assert!(bsm_distribution(H, V, 1.5).is_err());
        assert!(bsm_distribution(H, V, -0.01).is_err());
    }

    #[test]
    fn normalized_for_all_pairs_and_visibilities() {
        for a in PolarizationState::ALL {
            for b in PolarizationState::ALL {
                for v in [0.0, 0.5, 1.0] {
                    let d = bsm_distribution(a, b, v).unwrap();
                    assert!((d.total() - 1.0).abs() < TOL, "{a},{b},{v}");
                    assert!(d.iter().all(|(pat, _)| pat.total() == 2));
                }
            }
        }
    }

    #[test]
    fn identical_inputs_never_split() {
        for s in PolarizationState::ALL {
            assert_eq!(bsm_distribution(s, s, 1.0).unwrap().cross_port_prob(), 0.0);
        }
    }

    #[test]
    fn swap_symmetry_of_announcements() {
        for a in PolarizationState::ALL {
            for b in PolarizationState::ALL {
                let ab = bsm_distribution(a, b, 1.0).unwrap();
                let ba = bsm_distribution(b, a, 1.0).unwrap();
                for o in [BsmOutcome::Singlet, BsmOutcome::Triplet] {
                    assert!((ab.outcome_prob(o) - ba.outcome_prob(o)).abs() < TOL);
                }
            }
        }
    }

    #[test]
    fn visibility_is_affine() {
        for a in PolarizationState::ALL {
            for b in PolarizationState::ALL {
                let d0 = bsm_distribution(a, b, 0.0).unwrap();
                let d5 = bsm_distribution(a, b, 0.5).unwrap();
                let d1 = bsm_distribution(a, b, 1.0).unwrap();
                let mut pats: Vec<_> = d0.iter().map(|(x, _)| *x).collect();
                pats.extend(d1.iter().map(|(x, _)| *x));
                for pat in pats {
                    let mid = 0.5 * (d0.prob(&pat) + d1.prob(&pat));
                    assert!((d5.prob(&pat) - mid).abs() < TOL);
                }
            }
        }
    }

    #[test]
    fn partial_visibility_exposes_parallel_coincidences() {
        let d = bsm_distribution(DPlus, DMinus, 0.5).unwrap();
        assert!(d.prob(&p("H1+H2")) > 1e-3);
        assert!(d.prob(&p("V1+V2")) > 1e-3);
    }

    #[test]
    fn mirrored_convention_gives_same_probabilities() {
        for a in PolarizationState::ALL {
            for b in PolarizationState::ALL {
                let s = bsm_distribution_with(a, b, 1.0, SplitterConvention::Standard).unwrap();
                let m = bsm_distribution_with(a, b, 1.0, SplitterConvention::Mirrored).unwrap();
                for (pat, q) in s.iter() {
                    assert!((m.prob(pat) - q).abs() < TOL);
                }
                assert_eq!(s.len(), m.len());
            }
        }
    }

    #[test]
    fn lone_photon_splits_evenly_between_ports() {
        let d = single_photon_distribution(&DPlus.jones(), false, SplitterConvention::Standard);
        for det in [H1, V1, H2, V2] {
            assert!((d.prob(&DetectionPattern::single(det)) - 0.25).abs() < TOL);
        }
    }
}
