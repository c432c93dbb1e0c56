//! End-to-end verification criteria.
//!
//! Each criterion runs a small experiment with a fixed seed and checks it
//! against a closed form or an exact computation. [`Scale::full`] uses the
//! round counts the tolerances were chosen for; [`Scale::quick`] trades
//! statistics for speed in the CLI self-test.

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bb84::{self, estimate_qber, Bb84Link, Bb84RoundRecord, KeyMaterial, KeyRole};
use crate::mdi::{self, alice_zero_counts};
use crate::netsim::{
    expected_detections, run_session_with, sweep, ChannelModel, EveConfig, LinkRun, LinkStatus,
    ProtocolVariant, ScenarioConfig, SessionOutcome, SourceModel, SECONDS_PER_CENTURY,
};
use crate::optics::{
    bsm_distribution_with, observe, Basis, BitValue, BsmOutcome, DetectionPattern, DetectorModel,
    PolarizationState, TwoPhotonDistribution,
};
use crate::relay::{infer_peer_key, xor_relay, RelayMode};

/// Patterns below this probability are treated as absent.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;
/// Allowed window for the photons-per-century figure.
pub const CENTURY_WINDOW: (f64, f64) = (0.26, 0.37);
pub const EVE_QBER: f64 = 0.25;
pub const EVE_QBER_TOLERANCE: f64 = 0.02;
pub const MISALIGNMENT_DEG: f64 = 10.0;
pub const MISALIGNMENT_TOLERANCE: f64 = 0.005;
pub const EFFICIENCY_POINTS: [f64; 2] = [0.8, 0.4];
/// Relative tolerance on the efficiency scaling ratios.
pub const RATIO_TOLERANCE: f64 = 0.10;
pub const XOR_LENGTHS: [usize; 5] = [0, 1, 8, 256, 4097];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scale {
    /// Monte Carlo samples / rounds for the statistical criteria.
    pub mc_rounds: u64,
    /// Rounds for the end-to-end sessions.
    pub session_rounds: u64,
    pub xor_pairs: usize,
    pub xor_trials: usize,
}

impl Scale {
    pub fn full() -> Self {
        Scale {
            mc_rounds: 100_000,
            session_rounds: 10_000,
            xor_pairs: 1_000,
            xor_trials: 10_000,
        }
    }

    pub fn quick() -> Self {
        Scale {
            mc_rounds: 40_000,
            session_rounds: 4_000,
            xor_pairs: 1_000,
            xor_trials: 2_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2}. {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

/// Collects named checks for one criterion.
struct Checks {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Checks {
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    fn finish(self, id: u8, name: &'static str) -> CriterionResult {
        let passed = self.failures.is_empty();
        let detail = if passed {
            self.notes.join("; ")
        } else {
            format!("failed: {}", self.failures.join("; "))
        };
        CriterionResult {
            id,
            name,
            passed,
            detail,
        }
    }
}

fn show(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".into(), |v| format!("{v:.4}"))
}

fn binomial_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// `k` successes in `n` trials is within three binomial standard deviations
/// of `p`; an impossible outcome must never occur.
pub fn within_3_sigma(k: u64, n: u64, p: f64) -> bool {
    if p <= 0.0 {
        return k == 0;
    }
    ((k as f64 / n as f64) - p).abs() <= 3.0 * binomial_sigma(p, n)
}

fn support(d: &TwoPhotonDistribution) -> BTreeSet<String> {
    d.iter()
        .filter(|(_, q)| *q > SUPPORT_THRESHOLD)
        .map(|(p, _)| p.to_string())
        .collect()
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Qualitative pattern lists of the MDI operation table, for same-basis inputs.
pub fn table_patterns(a: PolarizationState, b: PolarizationState) -> Option<BTreeSet<String>> {
    use PolarizationState::*;
    let rect_cross = ["H1+V1", "H2+V2", "H1+V2", "V1+H2"];
    let diag_same = ["2xH1", "2xV1", "H1+V1", "2xH2", "2xV2", "H2+V2"];
    let diag_cross = [
        "2xH1", "2xV1", "2xH2", "2xV2", "H1+H2", "V1+V2", "H1+V2", "V1+H2",
    ];
    Some(match (a, b) {
        (H, H) => set(&["2xH1", "2xH2"]),
        (V, V) => set(&["2xV1", "2xV2"]),
        (H, V) | (V, H) => set(&rect_cross),
        (DMinus, DMinus) | (DPlus, DPlus) => set(&diag_same),
        (DMinus, DPlus) | (DPlus, DMinus) => set(&diag_cross),
        _ => return None,
    })
}

/// Probability that a uniformly random preparation pair is announced and
/// sifted, summed exactly over the sixteen oracle distributions.
pub fn oracle_success_fractions(variant: &ProtocolVariant) -> (f64, f64) {
    let mut announced = 0.0;
    let mut sifted = 0.0;
    for a in PolarizationState::ALL {
        for b in PolarizationState::ALL {
            let d = bsm_distribution_with(a, b, 1.0, variant.splitter).expect("v = 1 is valid");
            let ok = d.outcome_prob(BsmOutcome::Singlet) + d.outcome_prob(BsmOutcome::Triplet);
            announced += ok / 16.0;
            if a.basis() == b.basis() {
                sifted += ok / 16.0;
            }
        }
    }
    (announced, sifted)
}

pub fn loss_arithmetic() -> CriterionResult {
    let n = expected_detections(
        &SourceModel::ideal(10e9),
        &ChannelModel::new(1000.0),
        1.0,
        SECONDS_PER_CENTURY,
    );
    let mut c = Checks::new();
    c.check(
        (CENTURY_WINDOW.0..=CENTURY_WINDOW.1).contains(&n),
        format!("{n:.4} photons per century over 1000 km"),
    );
    c.finish(1, "Loss arithmetic")
}

pub fn bsm_oracle_vs_monte_carlo(scale: &Scale, variant: &ProtocolVariant) -> CriterionResult {
    let mut c = Checks::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0xB5A);
    let n = scale.mc_rounds;
    let mut worst: f64 = 0.0;
    for a in PolarizationState::ALL {
        for b in PolarizationState::ALL {
            let d = bsm_distribution_with(a, b, 1.0, variant.splitter).expect("v = 1 is valid");
            if (d.total() - 1.0).abs() > 1e-12 {
                c.check(false, format!("({a},{b}) sums to {}", d.total()));
            }
            let mut counts = std::collections::BTreeMap::<DetectionPattern, u64>::new();
            for _ in 0..n {
                *counts.entry(d.sample(&mut rng)).or_default() += 1;
            }
            for pat in counts.keys() {
                if d.prob(pat) <= SUPPORT_THRESHOLD {
                    c.check(false, format!("({a},{b}) sampled impossible pattern {pat}"));
                }
            }
            for (pat, p) in d.iter().filter(|(_, p)| *p > SUPPORT_THRESHOLD) {
                let k = counts.get(pat).copied().unwrap_or(0);
                let z =
                    (k as f64 / n as f64 - p).abs() / binomial_sigma(p, n).max(f64::MIN_POSITIVE);
                worst = worst.max(z);
                if !within_3_sigma(k, n, p) {
                    c.check(false, format!("({a},{b}) {pat}: {k}/{n} vs {p}"));
                }
            }
            if let Some(table) = table_patterns(a, b) {
                let ideal = support(&d);
                let parallel = set(&["H1+H2", "V1+V2"]);
                let is_diag_cross = a.basis() == Basis::Diagonal && a != b;
                let expected: BTreeSet<String> = if is_diag_cross {
                    table.difference(&parallel).cloned().collect()
                } else {
                    table.clone()
                };
                if ideal != expected {
                    c.check(
                        false,
                        format!("({a},{b}) support {ideal:?} != {expected:?}"),
                    );
                }
                if is_diag_cross {
                    let partial =
                        bsm_distribution_with(a, b, 0.5, variant.splitter).expect("valid");
                    let appear = parallel
                        .iter()
                        .all(|p| partial.prob(&p.parse().expect("canonical")) > SUPPORT_THRESHOLD);
                    if !appear {
                        c.check(
                            false,
                            format!("({a},{b}) parallel coincidences absent at v=0.5"),
                        );
                    }
                }
            }
        }
    }
    c.check(
        true,
        format!("16 pairs x {n} samples, worst deviation {worst:.2} sigma"),
    );
    c.check(
        true,
        "pattern sets match the table (H1+H2/V1+V2 only at v<1)",
    );
    c.finish(2, "BSM oracle vs Monte Carlo")
}

pub fn hom_bunching(scale: &Scale, variant: &ProtocolVariant) -> CriterionResult {
    let mut c = Checks::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x40A);
    let det = DetectorModel::ideal();
    for s in PolarizationState::ALL {
        let d = bsm_distribution_with(s, s, 1.0, variant.splitter).expect("v = 1 is valid");
        let cross = d.cross_port_prob();
        if cross != 0.0 {
            c.check(false, format!("{s}: oracle cross-port probability {cross}"));
        }
        let split = (0..scale.mc_rounds)
            .filter(|_| observe(&d.sample(&mut rng), &det, &mut rng).spans_both_ports())
            .count();
        if split != 0 {
            c.check(false, format!("{s}: {split} cross-port clicks"));
        }
    }
    c.check(
        true,
        format!(
            "identical inputs: cross-port probability 0, 0 cross-port clicks in 4 x {}",
            scale.mc_rounds
        ),
    );
    c.finish(3, "HOM bunching")
}

/// The twelve-round worked example of the BB84 operation table; `?` cells
/// are filled with the opposite of Alice's bit.
pub fn worked_example_records() -> Vec<Bb84RoundRecord> {
    use Basis::{Diagonal as X, Rectilinear as P};
    let alice_bases = [P, P, X, P, X, X, P, X, P, P, X, X];
    let alice_bits = [1, 0, 0, 1, 0, 1, 0, 1, 0, 1, 1, 0];
    let charlie_bases = [X, P, X, X, P, X, P, P, X, P, X, P];
    (0..12)
        .map(|i| {
            let alice_bit = BitValue::from_bool(alice_bits[i] == 1);
            let charlie_bit = if alice_bases[i] == charlie_bases[i] {
                alice_bit
            } else {
                alice_bit.flipped()
            };
            Bb84RoundRecord {
                round: i as u64,
                alice_basis: alice_bases[i],
                alice_bit,
                charlie_basis: charlie_bases[i],
                detected: true,
                charlie_bit: Some(charlie_bit),
            }
        })
        .collect()
}

pub fn bb84_end_to_end(scale: &Scale, variant: &ProtocolVariant) -> CriterionResult {
    let mut c = Checks::new();
    let n = scale.session_rounds;
    let cfg = ScenarioConfig::ideal_pair(RelayMode::Trusted, n, 0xBB84);
    match run_session_with(&cfg, variant) {
        Ok(out) => {
            for user in ["alice", "bob"] {
                let name = format!("{user}->relay");
                let Some(link) = out.report.link(&name) else {
                    c.check(false, format!("{name} missing"));
                    continue;
                };
                c.check(
                    within_3_sigma(link.sifted, n, 0.5),
                    format!("{name} sifted fraction {:.4}", link.sifted_fraction()),
                );
                c.check(
                    link.qber == Some(0.0),
                    format!("{name} qber {}", show(link.qber)),
                );
                let same = out.keys_for(&name).is_some_and(|k| {
                    !k.first.is_empty()
                        && k.first.same_bits(&k.second)
                        && out
                            .relay
                            .key_store()
                            .get(user)
                            .is_some_and(|r| r.same_bits(&k.first))
                });
                c.check(same, format!("{name} user/relay keys identical"));
            }
            let agreed = out
                .report
                .link("alice<->bob")
                .is_some_and(|l| l.status == LinkStatus::Agreed);
            c.check(agreed, "parity relay agreed");
        }
        Err(e) => c.check(false, format!("session error: {e}")),
    }
    let (a, b) = bb84::sift(&worked_example_records());
    c.check(
        a.to_string() == "001011" && b.to_string() == "001011",
        format!("worked example kept {a}"),
    );
    c.finish(4, "BB84 end-to-end")
}

fn mdi_records(out: &SessionOutcome) -> Vec<mdi::MdiRoundRecord> {
    out.runs
        .iter()
        .filter_map(|r| match r {
            LinkRun::Mdi { run, .. } => Some(run.records.clone()),
            _ => None,
        })
        .flatten()
        .collect()
}

pub fn mdi_end_to_end(scale: &Scale, variant: &ProtocolVariant) -> CriterionResult {
    let mut c = Checks::new();
    let n = scale.session_rounds;
    let (announced, sifted) = oracle_success_fractions(variant);
    c.check(
        (sifted - 0.25).abs() < 1e-12,
        format!("oracle sifted fraction {sifted:.6} (announced {announced:.6})"),
    );
    let cfg = ScenarioConfig::ideal_pair(RelayMode::Untrusted, n, 0x3D1);
    match run_session_with(&cfg, variant) {
        Ok(out) => {
            let records = mdi_records(&out);
            let s = mdi::sift(&records);
            let (ka, kb) = mdi::apply_flip_rules_with(&s, variant.flip_rule);
            let mismatches = ka.mismatches(&kb).unwrap_or(usize::MAX);
            c.check(
                !ka.is_empty() && mismatches == 0,
                format!(
                    "sifted keys after flips: {mismatches} mismatches in {}",
                    ka.len()
                ),
            );
            let finals = out.keys_for("alice<->bob");
            c.check(
                finals.is_some_and(|k| !k.first.is_empty() && k.first.same_bits(&k.second)),
                "final keys identical",
            );
            let link = out.report.link("alice<->bob");
            c.check(
                link.is_some_and(|l| l.qber == Some(0.0)),
                format!("qber {}", show(link.and_then(|l| l.qber))),
            );
            c.check(out.relay.key_store().is_empty(), "relay key store empty");
            c.check(
                within_3_sigma(s.len() as u64, n, sifted),
                format!("sifted fraction {:.4}", s.len() as f64 / n as f64),
            );
        }
        Err(e) => c.check(false, format!("session error: {e}")),
    }
    c.finish(5, "MDI end-to-end")
}

pub fn efficiency_scaling(scale: &Scale) -> CriterionResult {
    let mut c = Checks::new();
    let n = scale.mc_rounds;
    let ratio_ok = |r: f64, target: f64| (r / target - 1.0).abs() <= RATIO_TOLERANCE;

    let mut mdi_cfg = ScenarioConfig::ideal_pair(RelayMode::Untrusted, n, 0xE7A);
    mdi_cfg.distill.sample_fraction = 1.0;
    match sweep(&mdi_cfg, "efficiency", &EFFICIENCY_POINTS) {
        Ok(pts) => {
            let rate = |i: usize| pts[i].outcome.report.links[0].sifted as f64;
            let r = rate(0) / rate(1);
            c.check(ratio_ok(r, 4.0), format!("MDI sifted-rate ratio {r:.3}"));
        }
        Err(e) => c.check(false, format!("MDI sweep error: {e}")),
    }

    let mut bb_cfg = ScenarioConfig::ideal_pair(RelayMode::Trusted, n, 0xE7B);
    bb_cfg.pairing.clear();
    match sweep(&bb_cfg, "efficiency", &EFFICIENCY_POINTS) {
        Ok(pts) => {
            let rate = |i: usize| pts[i].outcome.report.links[0].detected as f64;
            let r = rate(0) / rate(1);
            c.check(ratio_ok(r, 2.0), format!("BB84 detected-rate ratio {r:.3}"));
        }
        Err(e) => c.check(false, format!("BB84 sweep error: {e}")),
    }
    c.finish(6, "Quadratic vs linear efficiency")
}

pub fn xor_relay_algebra(scale: &Scale) -> CriterionResult {
    let mut c = Checks::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0A0B);
    let random_key = |rng: &mut ChaCha8Rng, owner: &str, len: usize| {
        KeyMaterial::new(
            owner,
            KeyRole::Final,
            (0..len).map(|_| rng.random()).collect(),
        )
    };
    let mut round_trips = 0;
    for i in 0..scale.xor_pairs {
        let len = XOR_LENGTHS[i % XOR_LENGTHS.len()];
        let ka = random_key(&mut rng, "a", len);
        let kb = random_key(&mut rng, "b", len);
        let ok = xor_relay(&ka, &kb).is_ok_and(|kc| {
            infer_peer_key(&ka, &kc).is_ok_and(|x| x.same_bits(&kb))
                && infer_peer_key(&kb, &kc).is_ok_and(|x| x.same_bits(&ka))
        });
        round_trips += usize::from(ok);
    }
    c.check(
        round_trips == scale.xor_pairs,
        format!("{round_trips}/{} pairs round-trip", scale.xor_pairs),
    );

    // Per-position frequency of ones in the parity of independent keys.
    let width = 256;
    let trials = scale.xor_trials;
    let mut ones = vec![0u64; width];
    for _ in 0..trials {
        let kc = xor_relay(
            &random_key(&mut rng, "a", width),
            &random_key(&mut rng, "b", width),
        )
        .expect("equal lengths");
        for (o, &b) in ones.iter_mut().zip(kc.bits()) {
            *o += u64::from(b);
        }
    }
    let expected = trials as f64 / 2.0;
    let chi2: f64 = ones
        .iter()
        .map(|&o| {
            let d = o as f64 - expected;
            // both cells (ones and zeros) contribute d²/expected
            2.0 * d * d / expected
        })
        .sum();
    let dof = width as f64;
    let limit = dof + 3.0 * (2.0 * dof).sqrt();
    c.check(
        chi2 <= limit,
        format!("chi2 {chi2:.1} on {width} dof (limit {limit:.1})"),
    );
    let total_ones: u64 = ones.iter().sum();
    c.check(
        within_3_sigma(total_ones, (trials * width) as u64, 0.5),
        format!(
            "ones fraction {:.5}",
            total_ones as f64 / (trials * width) as f64
        ),
    );
    c.finish(7, "XOR relay algebra")
}

fn full_sample_qber(link: &Bb84Link, rounds: u64, seed: u64) -> Option<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let run = link.run(rounds, &mut rng);
    let (a, b) = bb84::sift(&run.records);
    estimate_qber(&a, &b, 1.0, &mut rng).ok().map(|e| e.qber)
}

pub fn adversary_and_noise(scale: &Scale, variant: &ProtocolVariant) -> CriterionResult {
    let mut c = Checks::new();
    let n = scale.mc_rounds;
    let eve = Bb84Link::new(
        ChannelModel::lossless().with_eve(EveConfig::InterceptResend),
        DetectorModel::ideal(),
    );
    match full_sample_qber(&eve, n, 0xE7E) {
        Some(q) => c.check(
            (q - EVE_QBER).abs() <= EVE_QBER_TOLERANCE,
            format!("intercept-resend qber {q:.4}"),
        ),
        None => c.check(false, "no sifted key under attack"),
    }
    let mut cfg = ScenarioConfig::ideal_pair(RelayMode::Trusted, scale.session_rounds, 0xE7F);
    cfg.channels.get_mut("alice").expect("alice").eve = Some(EveConfig::InterceptResend);
    match run_session_with(&cfg, variant) {
        Ok(out) => {
            let status = out.report.link("alice->relay").map(|l| l.status);
            c.check(
                status == Some(LinkStatus::Aborted),
                format!(
                    "alice link {} at threshold {}",
                    status.map_or("missing", |s| s.as_str()),
                    cfg.distill.abort_threshold
                ),
            );
        }
        Err(e) => c.check(false, format!("session error: {e}")),
    }

    let tilted = Bb84Link::new(
        ChannelModel::lossless().misaligned(MISALIGNMENT_DEG),
        DetectorModel::ideal(),
    );
    let expected = MISALIGNMENT_DEG.to_radians().sin().powi(2);
    match full_sample_qber(&tilted, n, 0x7117) {
        Some(q) => c.check(
            (q - expected).abs() <= MISALIGNMENT_TOLERANCE,
            format!("{MISALIGNMENT_DEG} deg misalignment qber {q:.4} vs {expected:.4}"),
        ),
        None => c.check(false, "no sifted key with misalignment"),
    }
    c.finish(8, "Adversary and noise oracles")
}

pub fn relay_blindness(scale: &Scale, variant: &ProtocolVariant) -> CriterionResult {
    let mut c = Checks::new();
    let cfg = ScenarioConfig::ideal_pair(RelayMode::Untrusted, scale.mc_rounds, 0xB11D);
    match run_session_with(&cfg, variant) {
        Ok(out) => {
            let records = mdi_records(&out);
            let announced = records.iter().filter(|r| r.announced.is_success()).count();
            c.check(
                out.relay.announcements().len() == announced,
                format!("{announced} announcements logged"),
            );
            c.check(out.relay.key_store().is_empty(), "relay key store empty");
            let counts = alice_zero_counts(&records);
            for outcome in [BsmOutcome::Singlet, BsmOutcome::Triplet] {
                let (zeros, total) = counts.get(&outcome).copied().unwrap_or((0, 0));
                c.check(
                    total > 0 && within_3_sigma(zeros, total, 0.5),
                    format!(
                        "P(alice=0 | {outcome}) = {:.4} over {total}",
                        zeros as f64 / total.max(1) as f64
                    ),
                );
            }
        }
        Err(e) => c.check(false, format!("session error: {e}")),
    }
    c.finish(9, "Relay blindness")
}

/// Every CSV artifact a session can produce, concatenated.
pub fn session_csv_bundle(out: &SessionOutcome) -> Vec<u8> {
    let mut buf = Vec::new();
    out.report.write_csv(&mut buf).expect("in-memory write");
    out.relay
        .write_announcements_csv(&mut buf)
        .expect("in-memory write");
    for run in &out.runs {
        match run {
            LinkRun::Bb84 { run, .. } => bb84::write_records_csv(&run.records, &mut buf),
            LinkRun::Mdi { run, .. } => mdi::write_records_csv(&run.records, &mut buf),
        }
        .expect("in-memory write");
    }
    buf
}

pub fn determinism(scale: &Scale, variant: &ProtocolVariant) -> CriterionResult {
    let mut c = Checks::new();
    let n = scale.session_rounds / 4;
    let mut noisy = ScenarioConfig::ideal_pair(RelayMode::Trusted, n, 0xD37);
    for ch in noisy.channels.values_mut() {
        ch.length_km = 15.0;
        ch.misalignment_deg = 3.0;
    }
    noisy.users[1].source = SourceModel::weak_coherent(0.5, 1e9);
    noisy.relay.detector = DetectorModel::new(0.7, 1e-3).expect("valid detector");
    let mut noisy_mdi = noisy.clone();
    noisy_mdi.relay.mode = RelayMode::Untrusted;
    noisy_mdi.relay.visibility = 0.9;
    let scenarios = [
        (
            "trusted",
            ScenarioConfig::ideal_pair(RelayMode::Trusted, n, 0xD35),
        ),
        (
            "untrusted",
            ScenarioConfig::ideal_pair(RelayMode::Untrusted, n, 0xD36),
        ),
        ("noisy trusted", noisy),
        ("noisy untrusted", noisy_mdi),
    ];
    for (name, cfg) in &scenarios {
        let a = run_session_with(cfg, variant).map(|o| session_csv_bundle(&o));
        let b = run_session_with(cfg, variant).map(|o| session_csv_bundle(&o));
        match (a, b) {
            (Ok(a), Ok(b)) => c.check(a == b, format!("{name}: {} identical bytes", a.len())),
            _ => c.check(false, format!("{name}: session error")),
        }
    }
    let cfg = &scenarios[0].1;
    let values = [0.0, 10.0, 20.0];
    let run = || {
        sweep(cfg, "length_km", &values).map(|pts| {
            pts.iter()
                .flat_map(|p| session_csv_bundle(&p.outcome))
                .collect::<Vec<u8>>()
        })
    };
    match (run(), run()) {
        (Ok(a), Ok(b)) => c.check(a == b, "sweep output identical"),
        _ => c.check(false, "sweep error"),
    }
    c.finish(10, "Determinism")
}

pub fn run_all(scale: &Scale) -> Vec<CriterionResult> {
    run_all_with(scale, &ProtocolVariant::default())
}

pub fn run_all_with(scale: &Scale, variant: &ProtocolVariant) -> Vec<CriterionResult> {
    vec![
        loss_arithmetic(),
        bsm_oracle_vs_monte_carlo(scale, variant),
        hom_bunching(scale, variant),
        bb84_end_to_end(scale, variant),
        mdi_end_to_end(scale, variant),
        efficiency_scaling(scale),
        xor_relay_algebra(scale),
        adversary_and_noise(scale, variant),
        relay_blindness(scale, variant),
        determinism(scale, variant),
    ]
}
