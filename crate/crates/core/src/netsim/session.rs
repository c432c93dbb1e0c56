use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::report::{LinkKind, LinkReport, LinkStatus, SessionReport};
use super::{NetsimError, ScenarioConfig};
use crate::bb84::{
    self, distill, estimate_qber, Bb84Error, Bb84Link, Bb84Run, KeyMaterial, KeyRole,
};
use crate::mdi::{self, apply_flip_rules_with, qber_by_basis, FlipRule, MdiLink, MdiRun};
use crate::optics::{Basis, DetectorModel, SplitterConvention};
use crate::relay::{infer_peer_key, RelayMode, RelayNode};

/// Protocol conventions that the verification suite can swap out.
#[derive(Debug, Clone, Copy)]
pub struct ProtocolVariant {
    pub splitter: SplitterConvention,
    pub flip_rule: FlipRule,
}

impl Default for ProtocolVariant {
    fn default() -> Self {
        ProtocolVariant {
            splitter: SplitterConvention::Standard,
            flip_rule: mdi::standard_flip_rule,
        }
    }
}

/// Final keys held by the two ends of a link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkKeys {
    pub link: String,
    pub first: KeyMaterial,
    pub second: KeyMaterial,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinkRun {
    Bb84 { user: String, run: Bb84Run },
    Mdi { pair: (String, String), run: MdiRun },
}

/// Everything a session produced: the report plus the state behind it.
#[derive(Debug, Clone)]
pub struct SessionOutcome {
    pub report: SessionReport,
    pub relay: RelayNode,
    pub keys: Vec<LinkKeys>,
    pub runs: Vec<LinkRun>,
}

impl SessionOutcome {
    pub fn keys_for(&self, link: &str) -> Option<&LinkKeys> {
        self.keys.iter().find(|k| k.link == link)
    }

    pub fn aborted(&self) -> bool {
        self.report.aborted()
    }
}

pub fn run_session(cfg: &ScenarioConfig) -> Result<SessionOutcome, NetsimError> {
    run_session_with(cfg, &ProtocolVariant::default())
}

pub fn run_session_with(
    cfg: &ScenarioConfig,
    variant: &ProtocolVariant,
) -> Result<SessionOutcome, NetsimError> {
    cfg.validate()?;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut relay = RelayNode::new(cfg.relay.mode, cfg.relay.detector);
    relay.begin_session()?;
    let mut outcome = SessionOutcome {
        report: SessionReport::new(cfg.relay.mode, cfg.seed, cfg.rounds),
        relay: relay.clone(),
        keys: Vec::new(),
        runs: Vec::new(),
    };
    match cfg.relay.mode {
        RelayMode::Trusted => trusted(cfg, &mut relay, &mut rng, &mut outcome)?,
        RelayMode::Untrusted => untrusted(cfg, variant, &mut relay, &mut rng, &mut outcome)?,
    }
    relay.end_session()?;
    outcome.relay = relay;
    outcome.report.wall_time_s = started.elapsed().as_secs_f64();
    Ok(outcome)
}

/// QBER estimate plus distillation, mapped onto a report status.
fn finish_link<R: rand::Rng + ?Sized>(
    first: &KeyMaterial,
    second: &KeyMaterial,
    cfg: &ScenarioConfig,
    rng: &mut R,
    report: &mut LinkReport,
) -> Result<Option<(KeyMaterial, KeyMaterial)>, NetsimError> {
    let est = match estimate_qber(first, second, cfg.distill.sample_fraction, rng) {
        Ok(est) => est,
        Err(Bb84Error::InsufficientMaterial) => {
            report.status = LinkStatus::Insufficient;
            return Ok(None);
        }
        Err(e) => return Err(e.into()),
    };
    report.qber = Some(est.qber);
    match distill(&est.first, &est.second, est.qber, &cfg.distill) {
        Ok((f1, f2)) => {
            report.final_len = f1.len() as u64;
            report.key_digest = Some(f1.digest());
            report.status = LinkStatus::Ok;
            Ok(Some((f1, f2)))
        }
        Err(Bb84Error::Abort { .. }) => {
            report.status = LinkStatus::Aborted;
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

fn trusted(
    cfg: &ScenarioConfig,
    relay: &mut RelayNode,
    rng: &mut ChaCha8Rng,
    outcome: &mut SessionOutcome,
) -> Result<(), NetsimError> {
    let schedule = cfg.schedule()?;
    let mut user_keys: BTreeMap<String, KeyMaterial> = BTreeMap::new();
    for slot in &schedule.slots {
        let user = &slot.users[0];
        let link = Bb84Link {
            source: cfg.user(user).expect("validated").source,
            channel: cfg.channels[user],
            detector: cfg.relay.detector,
            ..Default::default()
        };
        let run = link.run(cfg.rounds, rng);
        let (alice, charlie) = bb84::sift(&run.records);
        let alice = alice.owned_by(user.as_str());
        let mut report = LinkReport::new(LinkKind::Bb84, format!("{user}->relay"), cfg.rounds);
        report.detected = run.detected() as u64;
        report.sifted = alice.len() as u64;
        report.multi_photon = run.multi_photon_pulses;
        if let Some((user_final, relay_final)) =
            finish_link(&alice, &charlie, cfg, rng, &mut report)?
        {
            relay.store_key(user, relay_final.clone())?;
            user_keys.insert(user.clone(), user_final.clone());
            outcome.keys.push(LinkKeys {
                link: report.link.clone(),
                first: user_final,
                second: relay_final,
            });
        }
        outcome.report.links.push(report);
        outcome.runs.push(LinkRun::Bb84 {
            user: user.clone(),
            run,
        });
    }

    for (slot, (a, b)) in cfg.pairing.iter().enumerate() {
        let name = format!("{a}<->{b}");
        let mut report = LinkReport::new(LinkKind::Xor, name.clone(), 0);
        let (Some(ka), Some(kb)) = (user_keys.get(a), user_keys.get(b)) else {
            report.status = LinkStatus::Skipped;
            outcome.report.links.push(report);
            continue;
        };
        let parity = relay.announce_parity(slot, a, b)?;
        let n = parity.len();
        let (ka, kb) = (ka.truncated(n), kb.truncated(n));
        // Each side recovers the other's key from its own key and the parity.
        let b_at_a = infer_peer_key(&ka, &parity)?.owned_by(a.as_str());
        let a_at_b = infer_peer_key(&kb, &parity)?.owned_by(b.as_str());
        let agreed = b_at_a.same_bits(&kb) && a_at_b.same_bits(&ka);
        report.final_len = n as u64;
        report.status = if agreed {
            LinkStatus::Agreed
        } else {
            LinkStatus::Mismatch
        };
        report.key_digest = Some(kb.digest());
        outcome.report.relayed_parity_bits += n as u64;
        outcome.report.links.push(report);
        outcome.keys.push(LinkKeys {
            link: name,
            first: b_at_a,
            second: kb.owned_by(b.as_str()),
        });
    }
    Ok(())
}

fn untrusted(
    cfg: &ScenarioConfig,
    variant: &ProtocolVariant,
    relay: &mut RelayNode,
    rng: &mut ChaCha8Rng,
    outcome: &mut SessionOutcome,
) -> Result<(), NetsimError> {
    let schedule = cfg.schedule()?;
    for (slot_idx, slot) in schedule.slots.iter().enumerate() {
        let (a, b) = (&slot.users[0], &slot.users[1]);
        let link = MdiLink {
            sources: (
                cfg.user(a).expect("validated").source,
                cfg.user(b).expect("validated").source,
            ),
            channels: (cfg.channels[a], cfg.channels[b]),
            detector: cfg.relay.detector,
            visibility: cfg.relay.visibility,
            splitter: variant.splitter,
            alice: None,
            bob: None,
        };
        let run = link.run(cfg.rounds, rng)?;
        for r in run.records.iter().filter(|r| r.announced.is_success()) {
            relay.announce_bsm(slot_idx, r.round, r.announced)?;
        }
        let sifted = mdi::sift(&run.records);
        let (ka, kb) = apply_flip_rules_with(&sifted, variant.flip_rule);
        let (ka, kb) = (ka.owned_by(a.as_str()), kb.owned_by(b.as_str()));
        let bases: Vec<Basis> = sifted.iter().map(|s| s.basis).collect();
        let by_basis = qber_by_basis(&ka, &kb, &bases)?;

        let name = format!("{a}<->{b}");
        let mut report = LinkReport::new(LinkKind::Mdi, name.clone(), cfg.rounds);
        let announced = run.announced() as u64;
        report.detected = announced;
        report.announced_success = Some(announced);
        report.sifted = ka.len() as u64;
        report.qber_rect = by_basis.get(&Basis::Rectilinear).copied();
        report.qber_diag = by_basis.get(&Basis::Diagonal).copied();
        report.multi_photon = run.multi_photon_rounds;
        if let Some((fa, fb)) = finish_link(&ka, &kb, cfg, rng, &mut report)? {
            outcome.keys.push(LinkKeys {
                link: name,
                first: fa.with_role(KeyRole::Final),
                second: fb.with_role(KeyRole::Final),
            });
        }
        outcome.report.links.push(report);
        outcome.runs.push(LinkRun::Mdi {
            pair: (a.clone(), b.clone()),
            run,
        });
    }
    Ok(())
}

/// Scenario knobs that [`sweep`] can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    LengthKm,
    Efficiency,
    DarkCountProb,
    Visibility,
    MisalignmentDeg,
}

impl SweepParam {
    pub const NAMES: [&'static str; 5] = [
        "length_km",
        "efficiency",
        "dark_count_prob",
        "visibility",
        "misalignment_deg",
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::LengthKm => "length_km",
            SweepParam::Efficiency => "efficiency",
            SweepParam::DarkCountProb => "dark_count_prob",
            SweepParam::Visibility => "visibility",
            SweepParam::MisalignmentDeg => "misalignment_deg",
        }
    }

    /// Returns a copy of `cfg` with the parameter set to `value` everywhere it
    /// applies (all channels, or the relay). The copy is not validated.
    pub fn apply(self, cfg: &ScenarioConfig, value: f64) -> ScenarioConfig {
        let mut cfg = cfg.clone();
        match self {
            SweepParam::LengthKm => cfg.channels.values_mut().for_each(|c| c.length_km = value),
            SweepParam::MisalignmentDeg => cfg
                .channels
                .values_mut()
                .for_each(|c| c.misalignment_deg = value),
            SweepParam::Efficiency => {
                let dark = cfg.relay.detector.dark_count_prob();
                cfg.relay.detector = DetectorModel::unchecked(value, dark);
            }
            SweepParam::DarkCountProb => {
                let eff = cfg.relay.detector.efficiency();
                cfg.relay.detector = DetectorModel::unchecked(eff, value);
            }
            SweepParam::Visibility => cfg.relay.visibility = value,
        }
        cfg
    }
}

impl std::str::FromStr for SweepParam {
    type Err = NetsimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "length_km" => Ok(SweepParam::LengthKm),
            "efficiency" => Ok(SweepParam::Efficiency),
            "dark_count_prob" => Ok(SweepParam::DarkCountProb),
            "visibility" => Ok(SweepParam::Visibility),
            "misalignment_deg" => Ok(SweepParam::MisalignmentDeg),
            other => Err(NetsimError::UnknownParameter(other.to_string())),
        }
    }
}

/// Per-point seed: SHA-256 over the base seed, parameter name and value bits.
pub fn derive_seed(base: u64, param: &str, value: f64) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update(param.as_bytes());
    h.update(value.to_bits().to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub param: SweepParam,
    pub value: f64,
    pub outcome: SessionOutcome,
}

/// Runs one session per value; points run in parallel with derived seeds.
pub fn sweep(
    cfg: &ScenarioConfig,
    param: &str,
    values: &[f64],
) -> Result<Vec<SweepPoint>, NetsimError> {
    let param: SweepParam = param.parse()?;
    values
        .par_iter()
        .map(|&value| {
            let mut point = param.apply(cfg, value);
            point.seed = derive_seed(cfg.seed, param.name(), value);
            let outcome = run_session(&point)?;
            Ok(SweepPoint {
                param,
                value,
                outcome,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netsim::EveConfig;

    #[test]
    fn trusted_ideal_pair() {
        let cfg = ScenarioConfig::ideal_pair(RelayMode::Trusted, 10_000, 1);
        let out = run_session(&cfg).unwrap();
        let alice = out.keys_for("alice->relay").unwrap();
        let bob = out.keys_for("bob->relay").unwrap();
        assert!(!alice.first.is_empty());
        assert!(alice.first.same_bits(&alice.second));
        assert!(bob.first.same_bits(&bob.second));
        assert!(out.relay.key_store()["alice"].same_bits(&alice.first));
        assert!(out.relay.key_store()["bob"].same_bits(&bob.first));
        let pair = out.keys_for("alice<->bob").unwrap();
        assert!(pair.first.same_bits(&pair.second));
        assert!(out.report.links.iter().all(|l| l.status.is_success()));
        assert!(!out.relay.in_session());
    }

    #[test]
    fn untrusted_ideal_pair() {
        let cfg = ScenarioConfig::ideal_pair(RelayMode::Untrusted, 10_000, 2);
        let out = run_session(&cfg).unwrap();
        let pair = out.keys_for("alice<->bob").unwrap();
        assert!(!pair.first.is_empty());
        assert!(pair.first.same_bits(&pair.second));
        assert!(out.relay.key_store().is_empty());
        assert_eq!(out.report.links[0].qber, Some(0.0));
        assert!(!out.relay.announcements().is_empty());
    }

    #[test]
    fn eve_on_alice_aborts_her_link() {
        let mut cfg = ScenarioConfig::ideal_pair(RelayMode::Trusted, 20_000, 3);
        cfg.channels.get_mut("alice").unwrap().eve = Some(EveConfig::InterceptResend);
        let out = run_session(&cfg).unwrap();
        let alice = &out.report.links[0];
        assert_eq!(alice.status, LinkStatus::Aborted);
        assert!((alice.qber.unwrap() - 0.25).abs() < 0.05);
        assert_eq!(out.report.links[1].status, LinkStatus::Ok);
        assert_eq!(out.report.links[2].status, LinkStatus::Skipped);
        assert!(out.aborted());
    }

    #[test]
    fn hopeless_distance_reports_insufficient_material() {
        let mut cfg = ScenarioConfig::ideal_pair(RelayMode::Trusted, 100, 4);
        cfg.channels.values_mut().for_each(|c| c.length_km = 1000.0);
        let out = run_session(&cfg).unwrap();
        assert_eq!(out.report.links[0].status, LinkStatus::Insufficient);
        assert!(!out.aborted());
    }

    #[test]
    fn same_seed_same_keys() {
        let cfg = ScenarioConfig::ideal_pair(RelayMode::Untrusted, 2_000, 5);
        let a = run_session(&cfg).unwrap();
        let b = run_session(&cfg).unwrap();
        assert_eq!(a.keys, b.keys);
        assert_eq!(a.report.to_csv_string(), b.report.to_csv_string());
    }

    #[test]
    fn unknown_sweep_parameter() {
        let cfg = ScenarioConfig::ideal_pair(RelayMode::Trusted, 10, 5);
        assert!(matches!(
            sweep(&cfg, "temperature", &[1.0]),
            Err(NetsimError::UnknownParameter(_))
        ));
    }

    #[test]
    fn sweep_rejects_out_of_range_values() {
        let cfg = ScenarioConfig::ideal_pair(RelayMode::Trusted, 10, 5);
        let err = sweep(&cfg, "efficiency", &[1.5]).unwrap_err().to_string();
        assert!(err.contains("efficiency"), "{err}");
    }

    #[test]
    fn derived_seeds_differ_per_point() {
        assert_ne!(
            derive_seed(1, "length_km", 0.0),
            derive_seed(1, "length_km", 25.0)
        );
        assert_ne!(
            derive_seed(1, "length_km", 1.0),
            derive_seed(1, "efficiency", 1.0)
        );
        assert_eq!(
            derive_seed(9, "visibility", 0.5),
            derive_seed(9, "visibility", 0.5)
        );
    }

    #[test]
    fn sweep_points_are_individually_reproducible() {
        let cfg = ScenarioConfig::ideal_pair(RelayMode::Trusted, 1_000, 6);
        let pts = sweep(&cfg, "length_km", &[0.0, 25.0]).unwrap();
        let single = sweep(&cfg, "length_km", &[25.0]).unwrap();
        assert_eq!(
            pts[1].outcome.report.to_csv_string(),
            single[0].outcome.report.to_csv_string()
        );
    }
}
