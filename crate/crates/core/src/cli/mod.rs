//! Command-line front end.

mod config;
mod run;

pub use config::{parse_config, BasisMode, Cli, Command, CommandKind, Flags, Format, ParseOutcome, RunConfig};
pub use run::{body_text, bundle_body, execute, read_bundle, run, run_cli, Certificate, SharpnessReport, TOOL};
