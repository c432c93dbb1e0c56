use std::fmt;
use std::io;

use serde::Serialize;

use crate::relay::RelayMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    /// User→relay BB84 link (trusted mode).
    Bb84,
    /// User↔user exchange through the BSM relay (untrusted mode).
    Mdi,
    /// Key relayed by parity announcement (trusted mode).
    Xor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkStatus {
    Ok,
    /// QBER above the abort threshold.
    Aborted,
    /// Nothing sifted, so no QBER estimate was possible.
    Insufficient,
    /// Both users recovered each other's key from the parity.
    Agreed,
    Mismatch,
    /// A prerequisite link did not produce a key.
    Skipped,
}

impl LinkStatus {
    pub fn is_success(self) -> bool {
        matches!(self, LinkStatus::Ok | LinkStatus::Agreed)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LinkStatus::Ok => "ok",
            LinkStatus::Aborted => "aborted",
            LinkStatus::Insufficient => "insufficient",
            LinkStatus::Agreed => "agreed",
            LinkStatus::Mismatch => "mismatch",
            LinkStatus::Skipped => "skipped",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkReport {
    pub kind: LinkKind,
    pub link: String,
    pub rounds: u64,
    /// BB84: rounds with a valid click. MDI: rounds with a BSM announcement.
    pub detected: u64,
    pub announced_success: Option<u64>,
    pub sifted: u64,
    pub qber: Option<f64>,
    pub qber_rect: Option<f64>,
    pub qber_diag: Option<f64>,
    pub final_len: u64,
    /// Pulses (BB84) or rounds (MDI) with two or more photons emitted; these
    /// are open to photon-number-splitting attacks.
    pub multi_photon: u64,
    pub status: LinkStatus,
    pub key_digest: Option<String>,
}

impl LinkReport {
    pub fn new(kind: LinkKind, link: String, rounds: u64) -> Self {
        LinkReport {
            kind,
            link,
            rounds,
            detected: 0,
            announced_success: None,
            sifted: 0,
            qber: None,
            qber_rect: None,
            qber_diag: None,
            final_len: 0,
            multi_photon: 0,
            status: LinkStatus::Ok,
            key_digest: None,
        }
    }

    pub fn detected_fraction(&self) -> f64 {
        self.detected as f64 / self.rounds as f64
    }

    pub fn sifted_fraction(&self) -> f64 {
        self.sifted as f64 / self.rounds as f64
    }

    pub fn counts_consistent(&self) -> bool {
        self.sifted <= self.detected && self.detected <= self.rounds
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionReport {
    pub mode: RelayMode,
    pub seed: u64,
    pub rounds: u64,
    pub links: Vec<LinkReport>,
    pub relayed_parity_bits: u64,
    /// Excluded from CSV so that exports are reproducible.
    pub wall_time_s: f64,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    mode: String,
    kind: LinkKind,
    link: &'a str,
    rounds: u64,
    detected: u64,
    announced_success: String,
    sifted: u64,
    qber: String,
    qber_rect: String,
    qber_diag: String,
    final_len: u64,
    multi_photon: u64,
    status: &'static str,
    key_digest: &'a str,
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

pub const CSV_HEADER: &str = "mode,kind,link,rounds,detected,announced_success,sifted,qber,qber_rect,qber_diag,final_len,multi_photon,status,key_digest";

impl SessionReport {
    pub fn new(mode: RelayMode, seed: u64, rounds: u64) -> Self {
        SessionReport {
            mode,
            seed,
            rounds,
            links: Vec::new(),
            relayed_parity_bits: 0,
            wall_time_s: 0.0,
        }
    }

    pub fn aborted(&self) -> bool {
        self.links.iter().any(|l| l.status == LinkStatus::Aborted)
    }

    pub fn link(&self, name: &str) -> Option<&LinkReport> {
        self.links.iter().find(|l| l.link == name)
    }

    pub fn multi_photon_pulses(&self) -> u64 {
        self.links.iter().map(|l| l.multi_photon).sum()
    }

    /// One row per link, with a header.
    pub fn write_csv<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for l in &self.links {
            out.serialize(CsvRow {
                mode: self.mode.to_string(),
                kind: l.kind,
                link: &l.link,
                rounds: l.rounds,
                detected: l.detected,
                announced_success: l
                    .announced_success
                    .map(|n| n.to_string())
                    .unwrap_or_default(),
                sifted: l.sifted,
                qber: fmt_opt(l.qber),
                qber_rect: fmt_opt(l.qber_rect),
                qber_diag: fmt_opt(l.qber_diag),
                final_len: l.final_len,
                multi_photon: l.multi_photon,
                status: l.status.as_str(),
                key_digest: l.key_digest.as_deref().unwrap_or(""),
            })?;
        }
        if self.links.is_empty() {
            out.write_record(CSV_HEADER.split(','))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }
}

impl fmt::Display for SessionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "mode={} seed={} rounds={} wall_time={:.3}s",
            self.mode, self.seed, self.rounds, self.wall_time_s
        )?;
        for l in &self.links {
            write!(f, "  [{}] {:<20} ", l.status.as_str(), l.link)?;
            match l.kind {
                LinkKind::Xor => write!(f, "parity_bits={}", l.final_len)?,
                _ => {
                    write!(f, "detected={} sifted={}", l.detected, l.sifted)?;
                    if let Some(q) = l.qber {
                        write!(f, " qber={q:.4}")?;
                    }
                    if let Some(q) = l.qber_rect {
                        write!(f, " qber_rect={q:.4}")?;
                    }
                    if let Some(q) = l.qber_diag {
                        write!(f, " qber_diag={q:.4}")?;
                    }
                    write!(f, " final_len={}", l.final_len)?;
                }
            }
            writeln!(f)?;
        }
        if self.relayed_parity_bits > 0 {
            writeln!(f, "  relayed parity bits: {}", self.relayed_parity_bits)?;
        }
        let multi = self.multi_photon_pulses();
        if multi > 0 {
            writeln!(f, "  warning: {multi} multi-photon pulses (PNS-vulnerable)")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_still_has_header() {
        let r = SessionReport::new(RelayMode::Trusted, 1, 10);
        assert_eq!(r.to_csv_string(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn csv_row_layout() {
        let mut r = SessionReport::new(RelayMode::Untrusted, 1, 10);
        let mut l = LinkReport::new(LinkKind::Mdi, "a<->b".into(), 10);
        l.detected = 4;
        l.announced_success = Some(4);
        l.sifted = 2;
        l.qber = Some(0.0);
        l.qber_diag = Some(0.5);
        l.final_len = 1;
        r.links.push(l);
        assert_eq!(
            r.to_csv_string(),
            format!("{CSV_HEADER}\nUntrusted,mdi,a<->b,10,4,4,2,0.000000,,0.500000,1,0,ok,\n")
        );
        let text = r.to_string();
        assert!(text.contains("mode=Untrusted"));
        assert!(text.contains("final_len=1"));
    }
}
