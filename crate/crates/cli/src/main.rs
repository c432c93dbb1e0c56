use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use qkd_relay::bb84;
use qkd_relay::mdi;
use qkd_relay::netsim::{run_session, sweep, LinkRun, ScenarioConfig, CSV_HEADER};
use qkd_relay::optics::{bsm_distribution, classify, PolarizationState};
use qkd_relay::verify::{self, Scale};

/// Star-network QKD simulator with a trusted or untrusted central relay.
#[derive(Parser)]
#[command(name = "qkd-relay", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one session and write CSV reports next to the config.
    Run {
        config: PathBuf,
        /// Also write per-round records for every link.
        #[arg(long)]
        records: bool,
        /// Directory for the CSV outputs (defaults to the config's directory).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Re-run a session over a list of parameter values.
    Sweep {
        config: PathBuf,
        /// One of length_km, efficiency, dark_count_prob, visibility, misalignment_deg.
        #[arg(long)]
        param: String,
        /// Comma-separated values, e.g. 0,10,20.
        #[arg(
            long,
            value_delimiter = ',',
            required = true,
            allow_negative_numbers = true
        )]
        values: Vec<f64>,
        /// Write the CSV here instead of stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Print the two-photon detection table for all sixteen input pairs.
    BsmTable {
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        visibility: f64,
    },
    /// Run the verification criteria at reduced scale.
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            records,
            out_dir,
        } => cmd_run(&config, records, out_dir.as_deref()),
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => cmd_sweep(&config, &param, &values, out.as_deref()),
        Command::BsmTable { visibility } => cmd_bsm_table(visibility),
        Command::Selftest => cmd_selftest(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load(path: &Path) -> Result<ScenarioConfig> {
    ScenarioConfig::from_path(path).with_context(|| format!("invalid config {}", path.display()))
}

fn output_path(config: &Path, out_dir: Option<&Path>, suffix: &str) -> PathBuf {
    let stem = config
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "session".into());
    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| config.parent().map(Path::to_path_buf))
        .unwrap_or_default();
    dir.join(format!("{stem}.{suffix}"))
}

/// Link names such as `alice<->bob` become `alice-bob` in file names.
fn file_safe(link: &str) -> String {
    link.replace("<->", "-").replace("->", "-")
}

fn create(path: &Path, config: &Path) -> Result<fs::File> {
    if fs::canonicalize(path)
        .ok()
        .is_some_and(|p| Some(p) == fs::canonicalize(config).ok())
    {
        bail!("refusing to overwrite the config file {}", path.display());
    }
    fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))
}

fn cmd_run(config: &Path, records: bool, out_dir: Option<&Path>) -> Result<ExitCode> {
    let cfg = load(config)?;
    let out = run_session(&cfg)?;
    print!("{}", out.report);

    let report_path = output_path(config, out_dir, "report.csv");
    out.report.write_csv(create(&report_path, config)?)?;
    let ann_path = output_path(config, out_dir, "announcements.csv");
    out.relay
        .write_announcements_csv(create(&ann_path, config)?)?;
    println!("wrote {}", report_path.display());
    println!("wrote {}", ann_path.display());

    if records {
        for run in &out.runs {
            let (name, written) = match run {
                LinkRun::Bb84 { user, run } => {
                    let p =
                        output_path(config, out_dir, &format!("{}.records.csv", file_safe(user)));
                    (
                        p.clone(),
                        bb84::write_records_csv(&run.records, create(&p, config)?),
                    )
                }
                LinkRun::Mdi { pair, run } => {
                    let link = format!("{}-{}", pair.0, pair.1);
                    let p = output_path(config, out_dir, &format!("{link}.records.csv"));
                    (
                        p.clone(),
                        mdi::write_records_csv(&run.records, create(&p, config)?),
                    )
                }
            };
            written?;
            println!("wrote {}", name.display());
        }
    }

    if out.aborted() {
        eprintln!("session aborted: QBER above threshold on at least one link");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(config: &Path, param: &str, values: &[f64], out: Option<&Path>) -> Result<ExitCode> {
    let cfg = load(config)?;
    let points = sweep(&cfg, param, values)?;
    let mut text = format!("param,value,{CSV_HEADER}\n");
    for p in &points {
        for row in p.outcome.report.to_csv_string().lines().skip(1) {
            text.push_str(&format!("{},{},{row}\n", p.param.name(), p.value));
        }
    }
    match out {
        Some(path) => {
            create(path, config)?.write_all(text.as_bytes())?;
            eprintln!("wrote {}", path.display());
        }
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_bsm_table(visibility: f64) -> Result<ExitCode> {
    if !(0.0..=1.0).contains(&visibility) {
        bail!("visibility: {visibility} is outside [0, 1]");
    }
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "a,b,pattern,probability,outcome")?;
    for a in PolarizationState::ALL {
        for b in PolarizationState::ALL {
            let d = bsm_distribution(a, b, visibility)?;
            for (pat, p) in d.iter().filter(|(_, p)| *p > verify::SUPPORT_THRESHOLD) {
                writeln!(stdout, "{a},{b},{pat},{p:.6},{}", classify(pat))?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_selftest() -> Result<ExitCode> {
    let results = verify::run_all(&Scale::quick());
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
