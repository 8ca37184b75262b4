use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::basis3d::BasisSpec;
use crate::error::{Error, Result};
use crate::rare_sets::{Engine, ExponentSequence, CROSSCHECK_MAX_LOG2};
use crate::sharpness::PhiSpec;

#[derive(Debug, Parser)]
#[command(name = "crystalcert", version, about = "Exact certificates for rare-basis crystal constructions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify the planar superlevel-set lower bound.
    VerifyLemma1(Flags),
    /// Certify the slab-by-slab lower bound for `Z_k`.
    VerifyTheorem(Flags),
    /// Compare the certificate region with a brute-force superlevel set.
    OracleCheck(Flags),
    /// Tabulate blow-up ratios for `x ln(1+x)^p`.
    SharpnessTable(Flags),
    /// Capacity and capped ratios for a finite scale set.
    FiniteSReport(Flags),
    /// Re-emit a saved bundle.
    Export(Flags),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Human,
}

#[derive(Debug, Args)]
pub struct Flags {
    /// Explicit exponents, e.g. 1,2,4,8.
    #[arg(long, value_delimiter = ',')]
    pub sequence: Option<Vec<u32>>,
    /// Doubling sequence m_1, 2 m_1, 4 m_1, ...
    #[arg(long)]
    pub doubling: bool,
    #[arg(long)]
    pub m1: Option<u32>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Finite scale set S.
    #[arg(long, value_delimiter = ',')]
    pub finite_s: Option<Vec<u32>>,
    #[arg(long)]
    pub engine: Option<Engine>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    #[arg(long)]
    pub kmin: Option<usize>,
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub phi: Option<Vec<u8>>,
    /// Saved bundle read by `export`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Random members checked per family when exhaustive checks are too large.
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    VerifyLemma1,
    VerifyTheorem,
    OracleCheck,
    SharpnessTable,
    FiniteSReport,
    Export,
}

impl CommandKind {
    fn is_certificate(self) -> bool {
        matches!(self, CommandKind::VerifyLemma1 | CommandKind::VerifyTheorem | CommandKind::OracleCheck)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisMode {
    Sequence(Vec<u32>),
    Doubling { m1: u32, k: Option<usize> },
    FiniteS(Vec<u32>),
}

/// Validated command line. `parallel` and `out` stay out of the echoed
/// configuration so certificate bodies do not depend on them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub basis: Option<BasisMode>,
    pub k: Option<usize>,
    pub kmin: Option<usize>,
    pub kmax: Option<usize>,
    pub engine: Option<Engine>,
    pub format: Format,
    pub phi: Vec<u8>,
    pub samples: usize,
    #[serde(skip)]
    pub input: Option<PathBuf>,
    #[serde(skip)]
    pub parallel: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

fn usage(flag: &str, msg: impl std::fmt::Display) -> Error {
    Error::Usage(format!("{flag}: {msg}"))
}

/// Parse and validate `argv` (including the program name).
pub fn parse_config<I, T>(argv: I) -> std::result::Result<RunConfig, ParseOutcome>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(ParseOutcome::Clap)?;
    config_from(cli).map_err(ParseOutcome::Invalid)
}

/// Why parsing stopped: clap handled it (help, version, unknown flag) or
/// the flags were well-formed but inconsistent.
#[derive(Debug)]
pub enum ParseOutcome {
    Clap(clap::Error),
    Invalid(Error),
}

fn config_from(cli: Cli) -> Result<RunConfig> {
    let (command, f) = match cli.command {
        Command::VerifyLemma1(f) => (CommandKind::VerifyLemma1, f),
        Command::VerifyTheorem(f) => (CommandKind::VerifyTheorem, f),
        Command::OracleCheck(f) => (CommandKind::OracleCheck, f),
        Command::SharpnessTable(f) => (CommandKind::SharpnessTable, f),
        Command::FiniteSReport(f) => (CommandKind::FiniteSReport, f),
        Command::Export(f) => (CommandKind::Export, f),
    };
    if f.parallel == 0 {
        return Err(usage("--parallel", "must be at least 1"));
    }
    if f.samples == 0 {
        return Err(usage("--samples", "must be at least 1"));
    }

    let modes = [f.sequence.is_some(), f.doubling, f.finite_s.is_some()].iter().filter(|&&b| b).count();
    if modes > 1 {
        return Err(usage("--sequence/--doubling/--finite-s", "choose exactly one basis mode"));
    }
    if f.m1.is_some() && !f.doubling {
        return Err(usage("--m1", "only valid with --doubling"));
    }
    let basis = if let Some(s) = f.sequence.clone() {
        if f.k.is_some() {
            return Err(usage("--k", "the length of --sequence already fixes k"));
        }
        ExponentSequence::new(s.clone())?;
        Some(BasisMode::Sequence(s))
    } else if f.doubling {
        let m1 = f.m1.ok_or_else(|| usage("--m1", "required with --doubling"))?;
        if m1 == 0 {
            return Err(usage("--m1", "must be at least 1"));
        }
        Some(BasisMode::Doubling { m1, k: f.k })
    } else {
        f.finite_s.clone().map(BasisMode::FiniteS)
    };

    let phi = f.phi.clone().unwrap_or_else(|| PhiSpec::all().iter().map(|p| p.p).collect());
    if let Some(&p) = phi.iter().find(|&&p| p > PhiSpec::MAX_P) {
        return Err(usage("--phi", format!("exponent {p} is not in 0..={}", PhiSpec::MAX_P)));
    }

    let table = matches!(command, CommandKind::SharpnessTable);
    if !table && (f.kmin.is_some() || f.kmax.is_some()) {
        return Err(usage(if f.kmax.is_some() { "--kmax" } else { "--kmin" }, "only valid for sharpness-table"));
    }
    if command == CommandKind::Export {
        if f.input.is_none() {
            return Err(usage("--input", "export needs a saved bundle"));
        }
        if basis.is_some() {
            return Err(usage("--sequence/--doubling/--finite-s", "export takes no basis"));
        }
    } else if f.input.is_some() {
        return Err(usage("--input", "only valid for export"));
    }

    let k = match (&basis, command) {
        (_, CommandKind::Export) => None,
        (None, _) => return Err(usage("--sequence/--doubling/--finite-s", "a basis is required")),
        (Some(BasisMode::Sequence(s)), _) => Some(s.len()),
        (Some(BasisMode::Doubling { k, .. }), CommandKind::SharpnessTable) => *k,
        (Some(BasisMode::Doubling { k, .. }), _) => Some(k.ok_or_else(|| usage("--k", "required with --doubling"))?),
        (Some(BasisMode::FiniteS(s)), c) => {
            if s.is_empty() {
                return Err(Error::EmptyBasis);
            }
            match c {
                CommandKind::FiniteSReport | CommandKind::SharpnessTable => f.k,
                _ => Some(f.k.ok_or_else(|| usage("--k", "required with --finite-s"))?),
            }
        }
    };
    if command == CommandKind::FiniteSReport && !matches!(basis, Some(BasisMode::FiniteS(_))) {
        return Err(usage("--finite-s", "finite-s-report needs a finite scale set"));
    }
    if let Some(0) = k {
        return Err(usage("--k", "must be at least 1"));
    }

    let (kmin, kmax) = if table {
        let kmax = f.kmax.or(k).ok_or_else(|| usage("--kmax", "required for sharpness-table"))?;
        let kmin = f.kmin.unwrap_or(4.min(kmax));
        if kmin == 0 || kmin > kmax {
            return Err(usage("--kmin", format!("need 1 <= kmin <= kmax, got {kmin}..{kmax}")));
        }
        (Some(kmin), Some(kmax))
    } else {
        (None, None)
    };

    if command.is_certificate() {
        if let (Some(engine), Some(top)) = (f.engine, top_exponent(basis.as_ref(), k)) {
            if top <= CROSSCHECK_MAX_LOG2 && engine != Engine::Both {
                return Err(usage(
                    "--engine",
                    format!("m_k = {top} <= {CROSSCHECK_MAX_LOG2} requires the cross-checking engine 'both'"),
                ));
            }
        }
    }
    if f.format == Format::Csv && !matches!(command, CommandKind::SharpnessTable | CommandKind::FiniteSReport | CommandKind::Export) {
        return Err(usage("--format", "csv is only available for ratio tables"));
    }

    Ok(RunConfig {
        command,
        basis,
        k,
        kmin,
        kmax,
        engine: f.engine,
        format: f.format,
        phi,
        samples: f.samples,
        input: f.input,
        parallel: f.parallel,
        out: f.out,
    })
}

/// `m_k` when it is known before any certificate work.
fn top_exponent(basis: Option<&BasisMode>, k: Option<usize>) -> Option<u32> {
    match basis? {
        BasisMode::Sequence(s) => s.last().copied(),
        BasisMode::Doubling { m1, .. } => {
            let k = k?;
            m1.checked_mul(1u32.checked_shl(k as u32 - 1)?)
        }
        BasisMode::FiniteS(s) => BasisSpec::finite(s.iter().copied()).ok()?.doubling_subsequence(k?).ok().map(|q| q.top()),
    }
}

impl RunConfig {
    /// The basis as a rule that yields doubling subsequences.
    pub fn basis_spec(&self) -> Result<BasisSpec> {
        match self.basis.as_ref().ok_or_else(|| usage("--sequence", "a basis is required"))? {
            BasisMode::Sequence(s) => {
                let seq = ExponentSequence::new(s.clone())?;
                seq.require_doubling()?;
                BasisSpec::finite(s.iter().copied())
            }
            BasisMode::Doubling { m1, .. } => BasisSpec::doubling(*m1),
            BasisMode::FiniteS(s) => BasisSpec::finite(s.iter().copied()),
        }
    }

    /// The exponent sequence for the planar commands.
    pub fn sequence(&self) -> Result<ExponentSequence> {
        match self.basis.as_ref().ok_or_else(|| usage("--sequence", "a basis is required"))? {
            BasisMode::Sequence(s) => ExponentSequence::new(s.clone()),
            _ => self.basis_spec()?.doubling_subsequence(self.k.expect("validated")),
        }
    }

    pub fn phis(&self) -> Vec<PhiSpec> {
        self.phi.iter().map(|&p| PhiSpec { p }).collect()
    }
}
