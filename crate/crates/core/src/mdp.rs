//! The `.mdp` text grammar: one `key = value ; comment` entry per line.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Column width the key is padded to when rendering.
pub const KEY_WIDTH: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MdpEntry {
    pub key: String,
    pub value: String,
    pub comment: String,
}

impl MdpEntry {
    pub fn new(key: impl Into<String>, value: impl Into<String>, comment: impl Into<String>) -> Self {
        MdpEntry {
            key: key.into(),
            value: value.into(),
            comment: comment.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MdpError {
    #[error("line {line}: duplicate key {key:?}")]
    DuplicateKey { key: String, line: usize },
    #[error("line {line}: malformed line")]
    MalformedLine { line: usize },
}

/// Renders a single entry. Keys shorter than [`KEY_WIDTH`] are padded with spaces.
pub fn render_entry(entry: &MdpEntry) -> String {
    let mut line = format!("{:<width$}= {}", entry.key, entry.value, width = KEY_WIDTH);
    if !entry.comment.is_empty() {
        line.push_str(" ; ");
        line.push_str(&entry.comment);
    }
    line
}

/// Renders entries with LF endings and a trailing newline.
pub fn render_entries(entries: &[MdpEntry]) -> String {
    let mut out = String::new();
    for entry in entries {
        out.push_str(&render_entry(entry));
        out.push('\n');
    }
    out
}

/// Parses one line; `Ok(None)` for blank and comment-only lines.
pub fn parse_line(raw: &str, line: usize) -> Result<Option<MdpEntry>, MdpError> {
    let text = raw.trim_end_matches('\r');
    let (body, comment) = match text.find(';') {
        Some(pos) => (&text[..pos], text[pos + 1..].trim()),
        None => (text, ""),
    };
    if body.trim().is_empty() {
        return Ok(None);
    }
    let (key, value) = body.split_once('=').ok_or(MdpError::MalformedLine { line })?;
    let key = key.trim();
    if key.is_empty() || key.contains(char::is_whitespace) {
        return Err(MdpError::MalformedLine { line });
    }
    Ok(Some(MdpEntry::new(key, value.trim(), comment)))
}

/// Parses `.mdp` text into ordered entries. Keys are compared with `-` and `_`
/// treated as equivalent, as the engine does.
pub fn parse_entries(text: &str) -> Result<Vec<MdpEntry>, MdpError> {
    let mut entries: Vec<MdpEntry> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if let Some(entry) = parse_line(raw, line)? {
            let canon = canonical_key(&entry.key);
            if entries.iter().any(|e| canonical_key(&e.key) == canon) {
                return Err(MdpError::DuplicateKey { key: entry.key, line });
            }
            entries.push(entry);
        }
    }
    Ok(entries)
}

pub fn canonical_key(key: &str) -> String {
    key.trim().replace('_', "-").to_ascii_lowercase()
}
