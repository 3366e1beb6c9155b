//! `key=value` text format: one pair per line, `#` starts a comment line.

use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct KvError {
    pub line: usize,
    pub message: String,
}

/// Parses `key=value` lines. Keys and values are trimmed; later keys win.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, KvError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(KvError { line: i + 1, message: format!("expected key=value, found `{line}`") });
        };
        let k = k.trim();
        if k.is_empty() {
            return Err(KvError { line: i + 1, message: "empty key".into() });
        }
        map.insert(k.to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Renders pairs in the given order.
pub fn render_kv<'a>(pairs: impl IntoIterator<Item = (&'a str, String)>) -> String {
    let mut out = String::new();
    for (k, v) in pairs {
        let _ = writeln!(out, "{k}={v}");
    }
    out
}
