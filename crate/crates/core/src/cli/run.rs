use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{parse_config, CommandKind, Format, ParseOutcome, RunConfig};
use crate::basis3d::{theorem_certificate, BasisSpec, CertificateTheorem};
use crate::crystal2d::{lemma1_certificate, oracle_check, CertificateLemma1, OracleReport};
use crate::error::{Error, Result};
use crate::options::CertifyOptions;
use crate::sharpness::{finite_s_report, rows_to_csv, sharpness_table, trend_report, FiniteSReport, RatioRow, TrendReport};

pub const TOOL: &str = "crystalcert";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub basis: BasisSpec,
    pub kmin: usize,
    pub kmax: usize,
    pub theorems_pass: bool,
    pub rows: Vec<RatioRow>,
    /// Absent when some `φ` has fewer than three rows.
    pub trend: Option<TrendReport>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    Lemma1(CertificateLemma1),
    Theorem(CertificateTheorem),
    Oracle(OracleReport),
    Sharpness(SharpnessReport),
    FiniteS(FiniteSReport),
}

impl Certificate {
    pub fn pass(&self) -> bool {
        match self {
            Certificate::Lemma1(c) => c.pass,
            Certificate::Theorem(c) => c.pass,
            Certificate::Oracle(c) => c.pass,
            Certificate::Sharpness(c) => c.pass,
            Certificate::FiniteS(c) => c.rows.iter().all(|r| r.ratio.lo.is_positive()),
        }
    }

    fn rows(&self) -> Option<&[RatioRow]> {
        match self {
            Certificate::Sharpness(c) => Some(&c.rows),
            Certificate::FiniteS(c) => Some(&c.rows),
            _ => None,
        }
    }
}

/// Trend checks that apply to the rows present all hold.
fn trend_pass(t: &TrendReport) -> bool {
    t.phis.iter().all(|p| {
        [p.k2_envelope_ok, p.linear_bracket_ok, p.bounded_ok, p.stabilization_ok]
            .iter()
            .all(|f| f.unwrap_or(true))
    })
}

fn options(config: &RunConfig) -> CertifyOptions {
    CertifyOptions { engine: config.engine, samples: config.samples, ..Default::default() }
}

/// Compute the certificates a command asks for.
pub fn execute(config: &RunConfig) -> Result<Vec<Certificate>> {
    let opts = options(config);
    Ok(match config.command {
        CommandKind::VerifyLemma1 => vec![Certificate::Lemma1(lemma1_certificate(&config.sequence()?, &opts)?)],
        CommandKind::VerifyTheorem => {
            let basis = config.basis_spec()?;
            vec![Certificate::Theorem(theorem_certificate(&basis, config.k.expect("validated"), &opts)?)]
        }
        CommandKind::OracleCheck => vec![Certificate::Oracle(oracle_check(&config.sequence()?, &opts)?)],
        CommandKind::SharpnessTable => {
            let basis = config.basis_spec()?;
            let (kmin, kmax) = (config.kmin.expect("validated"), config.kmax.expect("validated"));
            let (certs, rows) = sharpness_table(&basis, kmin..=kmax, &config.phis(), &opts)?;
            let trend = match trend_report(&rows) {
                Ok(t) => Some(t),
                Err(Error::InsufficientRows { .. }) => None,
                Err(e) => return Err(e),
            };
            let theorems_pass = certs.iter().all(|c| c.pass);
            let pass = theorems_pass && trend.as_ref().is_none_or(trend_pass);
            vec![Certificate::Sharpness(SharpnessReport { basis, kmin, kmax, theorems_pass, rows, trend, pass })]
        }
        CommandKind::FiniteSReport => {
            let Some(super::config::BasisMode::FiniteS(s)) = &config.basis else { unreachable!("validated") };
            vec![Certificate::FiniteS(finite_s_report(s, &config.phis(), &opts)?)]
        }
        CommandKind::Export => unreachable!("export re-reads a bundle"),
    })
}

/// Deterministic part of the bundle.
pub fn bundle_body(config: &RunConfig, certificates: &[Certificate]) -> Result<Value> {
    let certs = serde_json::to_value(certificates).map_err(|e| Error::Invariant(e.to_string()))?;
    let config_echo = serde_json::to_value(config).map_err(|e| Error::Invariant(e.to_string()))?;
    Ok(json!({
        "tool": TOOL,
        "version": env!("CARGO_PKG_VERSION"),
        "command": config.command,
        "config": config_echo,
        "certificates": certs,
        "pass": certificates.iter().all(Certificate::pass),
    }))
}

fn sidecar(config: &RunConfig) -> Value {
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    json!({
        "generated_at_unix": now,
        "parallel": config.parallel,
        "out": config.out.as_ref().map(|p| p.display().to_string()),
    })
}

/// Canonical text of a certificate body; keys come out sorted.
pub fn body_text(body: &Value) -> String {
    serde_json::to_string_pretty(body).expect("values serialize")
}

fn render(format: Format, body: &Value, side: &Value, certificates: &[Certificate]) -> Result<String> {
    Ok(match format {
        Format::Json => {
            let mut s = body_text(&json!({"body": body, "sidecar": side}));
            s.push('\n');
            s
        }
        Format::Csv => {
            let rows: Vec<RatioRow> = certificates.iter().filter_map(Certificate::rows).flatten().cloned().collect();
            if rows.is_empty() {
                return Err(Error::Usage("--format: csv needs ratio rows, and this bundle has none".into()));
            }
            rows_to_csv(&rows)
        }
        Format::Human => human(certificates),
    })
}

fn human(certificates: &[Certificate]) -> String {
    let mut out = String::new();
    let mark = |b: bool| if b { "PASS" } else { "FAIL" };
    for c in certificates {
        match c {
            Certificate::Lemma1(c) => {
                let _ = writeln!(out, "planar certificate {:?}: k={} J={}", c.sequence, c.k, c.levels);
                let _ = writeln!(out, "  union measure  {}", c.union_measure);
                let _ = writeln!(out, "  bound          {}", c.bound);
                let _ = writeln!(out, "  {}", mark(c.pass));
            }
            Certificate::Theorem(c) => {
                let _ = writeln!(out, "slab certificate {:?}: k={}", c.sequence, c.k);
                for s in &c.slabs {
                    let _ = writeln!(out, "  r={:<3} copies={} contribution={}", s.r, s.copies, s.contribution);
                }
                let _ = writeln!(out, "  total {}  bound {}  {}", c.total, c.bound, mark(c.pass));
            }
            Certificate::Oracle(c) => {
                let _ = writeln!(
                    out,
                    "oracle {:?}: certificate {} oracle {} inclusion {}  {}",
                    c.sequence, c.certificate_measure, c.oracle_measure, c.inclusion, mark(c.pass)
                );
            }
            Certificate::Sharpness(c) => {
                let _ = writeln!(out, "{:>4} {:>2} {:>26}", "k", "p", "ratio");
                for r in &c.rows {
                    let _ = writeln!(out, "{:>4} {:>2} {:>26}", r.k, r.p, r.ratio.to_string());
                }
                if let Some(t) = &c.trend {
                    for p in &t.phis {
                        let _ = writeln!(out, "p={} {:?}, max ratio {:.6}", p.p, p.classification, p.max_ratio);
                    }
                    let _ = writeln!(out, "{}", t.note);
                }
                let _ = writeln!(out, "{}", mark(c.pass));
            }
            Certificate::FiniteS(c) => {
                let _ = writeln!(out, "S = {:?}: k_max = {}, chain {:?}", c.s, c.k_max, c.sequence);
                let _ = writeln!(out, "capped ratio {}", c.capped_ratio);
                let _ = writeln!(out, "{}", c.note);
            }
        }
    }
    out
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io { path: p.to_path_buf(), source }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| Error::Io { path: "<stdout>".into(), source }),
    }
}

/// Read a saved bundle, returning its body and certificates.
pub fn read_bundle(path: &Path) -> Result<(Value, Vec<Certificate>)> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let malformed = |msg: String| Error::Malformed { path: path.to_path_buf(), msg };
    let v: Value = serde_json::from_str(&text).map_err(|e| malformed(e.to_string()))?;
    let body = v.get("body").cloned().ok_or_else(|| malformed("missing \"body\"".into()))?;
    let certs = body.get("certificates").cloned().ok_or_else(|| malformed("missing \"certificates\"".into()))?;
    let certs: Vec<Certificate> = serde_json::from_value(certs).map_err(|e| malformed(e.to_string()))?;
    Ok((body, certs))
}

fn run_checked(config: &RunConfig) -> Result<bool> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallel)
        .build()
        .map_err(|e| Error::Invariant(format!("thread pool: {e}")))?;
    let (body, certs) = if config.command == CommandKind::Export {
        read_bundle(config.input.as_deref().expect("validated"))?
    } else {
        let certs = pool.install(|| execute(config))?;
        (bundle_body(config, &certs)?, certs)
    };
    let text = render(config.format, &body, &sidecar(config), &certs)?;
    write_output(config.out.as_deref(), &text)?;
    Ok(body["pass"].as_bool().unwrap_or(false))
}

/// Run a validated configuration and return the process exit status:
/// 0 all certificates pass, 1 some certificate fails, 2 invalid input,
/// 3 internal inconsistency, 4 I/O.
pub fn run(config: &RunConfig) -> i32 {
    match run_checked(config) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Parse `argv` and run it.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match parse_config(argv) {
        Ok(config) => run(&config),
        Err(ParseOutcome::Clap(e)) => {
            let _ = e.print();
            if e.use_stderr() {
                2
            } else {
                0
            }
        }
        Err(ParseOutcome::Invalid(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
