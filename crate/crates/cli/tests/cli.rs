use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_qkd-relay");

const TRUSTED: &str = r#"{
  "users": [{"name": "alice"}, {"name": "bob"}],
  "channels": {"alice": {"length_km": 10}, "bob": {"length_km": 10}},
  "relay": {"mode": "trusted", "detector": {"efficiency": 0.9}},
  "rounds": 4000,
  "seed": 21,
  "pairing": [["alice", "bob"]]
}"#;

fn qkd(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_trusted_writes_reports_beside_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "net.json", TRUSTED);
    let o = qkd(&["run", cfg.to_str().unwrap(), "--records"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("mode=Trusted"), "{out}");
    assert!(out.contains("final_len="), "{out}");
    let report = fs::read_to_string(dir.path().join("net.report.csv")).unwrap();
    assert!(report.starts_with("mode,kind,link,"));
    assert!(report.contains("Trusted,xor,alice<->bob"));
    let ann = fs::read_to_string(dir.path().join("net.announcements.csv")).unwrap();
    assert!(ann.starts_with("slot,announcement,mode"));
    assert!(dir.path().join("net.alice.records.csv").exists());
    assert_eq!(fs::read_to_string(&cfg).unwrap(), TRUSTED);
}

#[test]
fn negative_length_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        &TRUSTED.replace(r#""length_km": 10}, "bob""#, r#""length_km": -3}, "bob""#),
    );
    let o = qkd(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("channels.alice.length_km"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn unknown_field_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        &TRUSTED.replace(r#""seed": 21"#, r#""seed": 21, "sede": 1"#),
    );
    let o = qkd(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sede"), "{}", stderr(&o));
}

#[test]
fn eavesdropper_aborts_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = TRUSTED.replace(
        r#""alice": {"length_km": 10}"#,
        r#""alice": {"length_km": 10, "eve": {"strategy": "intercept_resend"}}"#,
    );
    let cfg = write_config(dir.path(), "eve.json", &text);
    let o = qkd(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stdout(&o).contains("[aborted] alice->relay"));
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let text = TRUSTED.replace(r#""mode": "trusted""#, r#""mode": "untrusted""#);
    let cfg = write_config(dir.path(), "mdi.json", &text);
    let read = |name: &str| fs::read(dir.path().join(name)).unwrap();
    let mut first = Vec::new();
    for _ in 0..2 {
        let o = qkd(&["run", cfg.to_str().unwrap(), "--records"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let files = [
            "mdi.report.csv",
            "mdi.announcements.csv",
            "mdi.alice-bob.records.csv",
        ];
        let now: Vec<Vec<u8>> = files.iter().map(|f| read(f)).collect();
        if first.is_empty() {
            first = now;
        } else {
            assert_eq!(first, now);
        }
    }
}

#[test]
fn sweep_prefixes_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "net.json", TRUSTED);
    let o = qkd(&[
        "sweep",
        cfg.to_str().unwrap(),
        "--param",
        "length_km",
        "--values",
        "0,20,40",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("param,value,mode,kind"));
    // three links per point
    assert_eq!(lines.len(), 1 + 3 * 3);
    assert!(lines[1].starts_with("length_km,0,Trusted,bb84,alice->relay"));

    let o = qkd(&[
        "sweep",
        cfg.to_str().unwrap(),
        "--param",
        "bogus",
        "--values",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bogus"));
}

#[test]
fn bsm_table_rows() {
    let o = qkd(&["bsm-table"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("H,V,H1+V2,0.250000,Singlet"));
    assert!(out.contains("H,H,2xH1,0.500000,Failure"));
    assert!(!out.contains("DPlus,DMinus,H1+H2"));
    let pairs: std::collections::BTreeSet<_> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').take(2).collect::<Vec<_>>().join(","))
        .collect();
    assert_eq!(pairs.len(), 16);

    let partial = stdout(&qkd(&["bsm-table", "--visibility", "0.5"]));
    assert!(partial.contains("DPlus,DMinus,H1+H2"));

    let o = qkd(&["bsm-table", "--visibility", "-0.1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("visibility"));
}

#[test]
fn selftest_passes() {
    let o = qkd(&["selftest"]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{out}");
    assert_eq!(out.lines().filter(|l| l.starts_with("[PASS]")).count(), 10);
}
