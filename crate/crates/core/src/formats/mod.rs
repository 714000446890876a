//! File formats used by the command-line tool: text logs, PGM maps with a
//! key=value sidecar, world and scenario descriptions, configuration
//! overrides, trajectories and PPM renders.

pub mod config;
pub mod log;
pub mod map;
pub mod render;
pub mod scenario;
pub mod script;
pub mod trajectory;
pub mod world;

use std::path::Path;

use crate::error::{Error, Result};

/// One `key = value` line with its 1-based line number.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Splits `key = value` text. Blank lines and `#` comments are skipped.
pub fn key_values(text: &str, path: &Path) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split_once('#').map_or(raw, |(head, _)| head).trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::parse(path, n + 1, format!("expected key = value, got {line:?}"))
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::parse(path, n + 1, "empty key"));
        }
        out.push(Entry {
            line: n + 1,
            key: key.to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Parses whitespace-separated finite floats, requiring exactly `n`.
pub(crate) fn floats(value: &str, n: usize, path: &Path, line: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = value
        .split_ascii_whitespace()
        .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::parse(path, line, format!("expected numbers, got {value:?}")))?;
    if v.len() != n {
        return Err(Error::parse(
            path,
            line,
            format!("expected {n} numbers, got {}", v.len()),
        ));
    }
    Ok(v)
}

pub(crate) fn float(value: &str, path: &Path, line: usize) -> Result<f64> {
    Ok(floats(value, 1, path, line)?[0])
}
