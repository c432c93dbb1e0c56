use qkd_relay::bb84::{self, estimate_qber, Bb84Link};
use qkd_relay::netsim::{run_session, sweep, ChannelModel, ScenarioConfig, SourceModel};
use qkd_relay::optics::DetectorModel;
use qkd_relay::relay::RelayMode;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn detected_fraction(link: &Bb84Link, n: u64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    link.run(n, &mut rng).detected() as f64 / n as f64
}

/// Least-squares fit of y = a + b x; returns (a, b, R²).
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - a - b * x).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    (a, b, 1.0 - ss_res / ss_tot)
}

#[test]
fn detection_rate_follows_the_loss_law() {
    let lengths = [0.0, 10.0, 25.0, 50.0, 75.0];
    let log_rates: Vec<f64> = lengths
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let link = Bb84Link::new(ChannelModel::new(l), DetectorModel::ideal());
            detected_fraction(&link, 100_000, 40 + i as u64).log10()
        })
        .collect();
    let (_, slope, r2) = linear_fit(&lengths, &log_rates);
    assert!(r2 >= 0.99, "R² = {r2}");
    // 0.2 dB/km is -0.02 decades per km
    assert!((slope + 0.02).abs() < 0.001, "slope {slope}");
}

#[test]
fn misalignment_qber_is_sin_squared() {
    for deg in [5.0f64, 10.0, 20.0] {
        let link = Bb84Link::new(
            ChannelModel::lossless().misaligned(deg),
            DetectorModel::ideal(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(deg.to_bits());
        let run = link.run(100_000, &mut rng);
        let (a, b) = bb84::sift(&run.records);
        let q = estimate_qber(&a, &b, 1.0, &mut rng).unwrap().qber;
        let expected = deg.to_radians().sin().powi(2);
        assert!((q - expected).abs() < 0.005, "{deg} deg: {q} vs {expected}");
    }
}

#[test]
fn weak_coherent_multi_photon_fraction() {
    let mu: f64 = 0.5;
    let src = SourceModel::weak_coherent(mu, 1e9);
    let n = 200_000;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let multi = (0..n).filter(|_| src.emit(&mut rng) >= 2).count() as f64 / n as f64;
    let p = 1.0 - (-mu).exp() * (1.0 + mu);
    assert!((src.multi_photon_prob() - p).abs() < 1e-15);
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    assert!((multi - p).abs() < 4.0 * sigma, "{multi} vs {p}");

    let mut link = Bb84Link::new(ChannelModel::lossless(), DetectorModel::ideal());
    link.source = src;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let run = link.run(n, &mut rng);
    let frac = run.multi_photon_pulses as f64 / n as f64;
    assert!((frac - p).abs() < 4.0 * sigma, "{frac}");
    // Empty pulses are never detected with ideal detectors.
    let nonempty = 1.0 - (-mu).exp();
    let det = run.detected() as f64 / n as f64;
    assert!((det - nonempty).abs() < 0.01, "{det} vs {nonempty}");
}

#[test]
fn length_sweep_reduces_rates() {
    let cfg = ScenarioConfig::ideal_pair(RelayMode::Untrusted, 20_000, 5);
    let pts = sweep(&cfg, "length_km", &[0.0, 25.0, 50.0]).unwrap();
    let sifted: Vec<u64> = pts
        .iter()
        .map(|p| p.outcome.report.links[0].sifted)
        .collect();
    assert!(sifted[0] > sifted[1] && sifted[1] > sifted[2], "{sifted:?}");
    // Both photons cross 25 km, so the joint rate falls by 10^-1 per 25 km.
    let r = sifted[1] as f64 / sifted[0] as f64;
    assert!((r / 0.1 - 1.0).abs() < 0.15, "{r}");
}

#[test]
fn sweep_rejects_unknown_parameter_and_invalid_values() {
    let cfg = ScenarioConfig::ideal_pair(RelayMode::Trusted, 100, 5);
    let err = sweep(&cfg, "colour", &[1.0]).unwrap_err().to_string();
    assert!(err.contains("colour"), "{err}");
    let err = sweep(&cfg, "efficiency", &[1.5]).unwrap_err().to_string();
    assert!(err.contains("efficiency"), "{err}");
}

#[test]
fn sweep_points_are_seeded_independently_of_order() {
    let cfg = ScenarioConfig::ideal_pair(RelayMode::Trusted, 2_000, 77);
    let a = sweep(&cfg, "misalignment_deg", &[0.0, 5.0]).unwrap();
    let b = sweep(&cfg, "misalignment_deg", &[5.0]).unwrap();
    assert_eq!(
        a[1].outcome.report.to_csv_string(),
        b[0].outcome.report.to_csv_string()
    );
}

#[test]
fn dark_counts_raise_the_error_rate() {
    let mut cfg = ScenarioConfig::ideal_pair(RelayMode::Trusted, 20_000, 3);
    for ch in cfg.channels.values_mut() {
        ch.length_km = 100.0;
    }
    cfg.relay.detector = DetectorModel::new(1.0, 0.01).unwrap();
    cfg.distill.sample_fraction = 1.0;
    let out = run_session(&cfg).unwrap();
    let q = out.report.link("alice->relay").unwrap().qber.unwrap();
    assert!(q > 0.05, "qber {q}");
}
