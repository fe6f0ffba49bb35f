//! Output formats, numeric formatting, and file/stdout routing.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use bellgap::{Error, Result};
use clap::ValueEnum;
use serde::Serialize;

/// Output format of a command's report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    /// Machine-readable, full fidelity.
    Json,
    /// Tabular, 17-significant-digit reals, one header row.
    Csv,
    /// Human-readable summary.
    Md,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "md" => Ok(Self::Md),
            other => Err(Error::InvalidInput(format!(
                "unknown format {other:?}, expected json, csv, or md"
            ))),
        }
    }
}

/// A real with 17 significant digits, enough to round-trip an `f64`.
pub fn real17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Numeric(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// One CSV line; fields are joined with commas and must not contain them.
pub fn csv_line<S: AsRef<str>>(fields: &[S]) -> String {
    let mut line = String::new();
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        line.push_str(f.as_ref());
    }
    line.push('\n');
    line
}

/// A `# key = value` provenance comment block for CSV and md outputs.
pub fn provenance_lines(command: &str, seed: Option<u64>, config_hash: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# tool = bellgap {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "# command = {command}");
    if let Some(seed) = seed {
        let _ = writeln!(s, "# seed = {seed}");
    }
    let _ = writeln!(s, "# config_hash = {config_hash}");
    s
}

/// Writes `content` to `out`, or to stdout when `out` is `None`.
pub fn write_output(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Markdown `key: value` line with aligned columns, for summary blocks.
pub fn kv_line(key: &str, value: impl AsRef<str>) -> String {
    format!("- {key}: {}\n", value.as_ref())
}
