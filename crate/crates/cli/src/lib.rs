//! The `edm-rulex` pipeline as a library.
//!
//! Each subcommand is a function over a [`RunConfig`] that reads and writes
//! artifacts in the output directory. Stage seeds are derived from the
//! master seed, so one config and seed reproduce every artifact byte for
//! byte.

pub mod commands;
pub mod config;
pub mod report;
pub mod stats;

use std::fs;
use std::path::Path;

use rulex_core::{Error, ErrorKind, Result};
use serde::{de::DeserializeOwned, Serialize};

pub use commands::{cmd_extract, cmd_generate, cmd_report, cmd_stats, cmd_train};
pub use config::RunConfig;

pub const COHORT_CSV: &str = "cohort.csv";
pub const COHORT_META: &str = "cohort.meta.json";
pub const MODEL_JSON: &str = "model.json";
pub const TRAIN_LOG: &str = "train_log.json";
pub const RULESET_JSON: &str = "ruleset.json";
pub const RULES_TXT: &str = "rules.txt";
pub const STATS_JSON: &str = "stats.json";
pub const REPORT_TXT: &str = "report.txt";

/// Process exit status for an error.
pub fn exit_code(error: &Error) -> i32 {
    match error.kind() {
        ErrorKind::Validation => 2,
        ErrorKind::Numeric => 3,
        ErrorKind::Io => 4,
    }
}

fn io_context(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_context(path, e))
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_context(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_context(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub(crate) fn file_hash(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| io_context(path, e))?;
    Ok(rulex_core::hashing::sha256_hex(&bytes))
}
