//! Filesystem and serialization helpers shared by every stage: atomic file
//! writes, content hashing, RFC 3339 timestamp conversion, line-oriented
//! JSON, and 17-significant-digit float formatting for artifacts that must
//! round-trip bit-exactly.

use std::fs;
use std::path::Path;

use anyhow::Context;
use chrono::SecondsFormat;
use serde::de::DeserializeOwned;
use serde::{Serialize as _, Serializer};
use sha2::{Digest, Sha256};

use crate::err::{CliError, Result};

/// Writes `bytes` to `path` atomically: the content lands in a temporary
/// file in the same directory and is renamed into place, so a crash mid-write
/// never leaves a truncated artifact behind.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let parent = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(parent)
        .with_context(|| format!("creating directory {}", parent.display()))
        .map_err(CliError::Internal)?;
    let mut tmp = tempfile::NamedTempFile::new_in(parent)
        .with_context(|| format!("creating temporary file in {}", parent.display()))
        .map_err(CliError::Internal)?;
    use std::io::Write as _;
    tmp.write_all(bytes)
        .with_context(|| format!("writing temporary file for {}", path.display()))
        .map_err(CliError::Internal)?;
    tmp.persist(path)
        .with_context(|| format!("renaming temporary file into {}", path.display()))
        .map_err(CliError::Internal)?;
    Ok(())
}

/// SHA-256 of a byte slice, lowercase hex.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        use std::fmt::Write as _;
        let _ = write!(out, "{byte:02x}");
    }
    out
}

/// Reads a file that a stage depends on. A missing file is a user-facing
/// error naming the path, so stage-order mistakes produce exit code 2 with
/// an actionable message.
pub fn read_input(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::usage(format!("missing input file: {}", path.display()))
        } else {
            CliError::Internal(anyhow::Error::new(e).context(format!("reading {}", path.display())))
        }
    })
}

pub fn read_input_string(path: &Path) -> Result<String> {
    let bytes = read_input(path)?;
    String::from_utf8(bytes)
        .map_err(|_| CliError::usage(format!("{} is not valid UTF-8", path.display())))
}

/// Parses an RFC 3339 timestamp (e.g. `2024-05-01T12:00:00Z`) into Unix
/// seconds.
pub fn parse_rfc3339(s: &str, what: &str) -> Result<i64> {
    chrono::DateTime::parse_from_rfc3339(s)
        .map(|dt| dt.timestamp())
        .map_err(|e| CliError::usage(format!("{what}: invalid RFC 3339 timestamp {s:?}: {e}")))
}

/// Formats Unix seconds as a UTC RFC 3339 timestamp with second precision.
pub fn format_rfc3339(secs: i64) -> String {
    match chrono::DateTime::from_timestamp(secs, 0) {
        Some(dt) => dt.to_rfc3339_opts(SecondsFormat::Secs, true),
        // Out-of-range timestamps cannot occur for artifacts we generated,
        // but degrade gracefully rather than panicking on foreign data.
        None => format!("{secs}"),
    }
}

/// Parses a JSON-lines file, reporting the 1-based line number on failure.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = read_input_string(path)?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(line)
            .map_err(|e| CliError::usage(format!("{} line {}: {}", path.display(), idx + 1, e)))?;
        out.push(record);
    }
    Ok(out)
}

/// Serializes records as JSON lines (one compact object per line).
pub fn to_jsonl<T: serde::Serialize>(records: &[T]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for record in records {
        let line = serde_json::to_vec(record)
            .context("serializing JSON line")
            .map_err(CliError::Internal)?;
        buf.extend_from_slice(&line);
        buf.push(b'\n');
    }
    Ok(buf)
}

/// Formats a float with 17 significant digits, enough for `f64` values to
/// round-trip bit-exactly across write/read cycles.
pub fn fmt17(x: f64) -> Result<String> {
    if !x.is_finite() {
        return Err(CliError::Internal(anyhow::anyhow!(
            "refusing to serialize non-finite float {x}"
        )));
    }
    Ok(format!("{x:.16e}"))
}

/// Serde serializer emitting a float as a raw 17-significant-digit JSON
/// number (bypasses serde_json's shortest-representation formatting).
pub fn ser_f64_17<S: Serializer>(x: &f64, ser: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::Error as _;
    if !x.is_finite() {
        return Err(S::Error::custom(format!("non-finite float {x}")));
    }
    let raw =
        serde_json::value::RawValue::from_string(format!("{x:.16e}")).map_err(S::Error::custom)?;
    raw.serialize(ser)
}

/// Like [`ser_f64_17`] for a vector of floats.
pub fn ser_vec_f64_17<S: Serializer>(
    xs: &Vec<f64>,
    ser: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::{Error as _, SerializeSeq as _};
    let mut seq = ser.serialize_seq(Some(xs.len()))?;
    for x in xs {
        if !x.is_finite() {
            return Err(S::Error::custom(format!("non-finite float {x}")));
        }
        let raw = serde_json::value::RawValue::from_string(format!("{x:.16e}"))
            .map_err(S::Error::custom)?;
        seq.serialize_element(&raw)?;
    }
    seq.end()
}

/// Like [`ser_vec_f64_17`] for a list of rows.
pub fn ser_mat_f64_17<S: Serializer>(
    rows: &Vec<Vec<f64>>,
    ser: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::{Error as _, SerializeSeq as _};
    let mut seq = ser.serialize_seq(Some(rows.len()))?;
    for row in rows {
        let mut items = Vec::with_capacity(row.len());
        for x in row {
            if !x.is_finite() {
                return Err(S::Error::custom(format!("non-finite float {x}")));
            }
            items.push(
                serde_json::value::RawValue::from_string(format!("{x:.16e}"))
                    .map_err(S::Error::custom)?,
            );
        }
        seq.serialize_element(&items)?;
    }
    seq.end()
}

/// Pretty-prints a serializable value with a trailing newline.
pub fn to_json_pretty<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut buf = serde_json::to_vec_pretty(value)
        .context("serializing JSON document")
        .map_err(CliError::Internal)?;
    buf.push(b'\n');
    Ok(buf)
}
