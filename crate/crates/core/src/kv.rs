//! Flat `key = value` text blocks with `#` comments.
//!
//! Used for screen specifications and experiment configuration files. Every
//! error carries the 1-based line number it refers to.

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KeyValues {
    entries: Vec<Entry>,
}

#[derive(Clone, Debug, PartialEq)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

pub fn parse_key_values(text: &str) -> Result<KeyValues> {
    let mut entries: Vec<Entry> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::Parse { line, message: format!("expected `key = value`, found `{content}`") })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(Error::Parse { line, message: "empty key".into() });
        }
        if value.is_empty() {
            return Err(Error::Parse { line, message: format!("missing value for `{key}`") });
        }
        if let Some(prev) = entries.iter().find(|e| e.key == key) {
            return Err(Error::Parse { line, message: format!("duplicate key `{key}` (first set on line {})", prev.line) });
        }
        entries.push(Entry { key: key.to_string(), value: value.to_string(), line });
    }
    Ok(KeyValues { entries })
}

impl KeyValues {
    fn entry(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entry(key).map(|e| e.value.as_str())
    }

    pub fn line_of(&self, key: &str) -> Option<usize> {
        self.entry(key).map(|e| e.line)
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Some)
                .ok_or_else(|| Error::Parse { line: e.line, message: format!("`{}` is not a finite number: `{}`", e.key, e.value) }),
        }
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.get_f64(key)?
            .ok_or_else(|| Error::Parse { line: self.last_line(), message: format!("missing required key `{key}`") })
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<usize>()
                .map(Some)
                .map_err(|_| Error::Parse { line: e.line, message: format!("`{}` is not a non-negative integer: `{}`", e.key, e.value) }),
        }
    }

    /// Fail on the first key not in `allowed`.
    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        match self.entries.iter().find(|e| !allowed.contains(&e.key.as_str())) {
            Some(e) => Err(Error::Parse { line: e.line, message: format!("unknown key `{}`", e.key) }),
            None => Ok(()),
        }
    }

    fn last_line(&self) -> usize {
        self.entries.last().map_or(1, |e| e.line)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
