//! Flat key-value configuration documents.
//!
//! The on-disk format is UTF-8 text, one `name = value` pair per line.
//! `#` starts a comment (full-line or trailing) and blank lines are ignored.
//! Values are kept as raw strings; typed accessors parse on demand so that
//! the same document can carry model parameters, mesh/run settings and
//! initial-condition blocks.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `name = value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("key `{key}`: expected a number, got `{value}`")]
    NotNumeric { key: String, value: String },
    #[error("key `{key}`: expected an integer, got `{value}`")]
    NotInteger { key: String, value: String },
    #[error("missing required key `{0}`")]
    Missing(String),
}

/// Parsed configuration document. Preserves the order keys appeared in.
#[derive(Debug, Clone, Default)]
pub struct Document {
    entries: Vec<(String, String)>,
    index: HashMap<String, usize>,
}

impl Document {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut doc = Document::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let stripped = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let stripped = stripped.trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped.split_once('=').ok_or_else(|| ConfigError::Malformed {
                line,
                text: stripped.to_string(),
            })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(ConfigError::Malformed {
                    line,
                    text: stripped.to_string(),
                });
            }
            if doc.index.contains_key(key) {
                return Err(ConfigError::Duplicate {
                    line,
                    key: key.to_string(),
                });
            }
            doc.set(key, value);
        }
        Ok(doc)
    }

    /// Insert or overwrite a key.
    pub fn set(&mut self, key: &str, value: &str) {
        match self.index.get(key) {
            Some(&i) => self.entries[i].1 = value.to_string(),
            None => {
                self.index.insert(key.to_string(), self.entries.len());
                self.entries.push((key.to_string(), value.to_string()));
            }
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.index.get(key).map(|&i| self.entries[i].1.as_str())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.index.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| ConfigError::NotNumeric {
                    key: key.to_string(),
                    value: v.to_string(),
                }),
        }
    }

    pub fn require_f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.get_f64(key)?
            .ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.get_f64(key)?.unwrap_or(default))
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| ConfigError::NotInteger {
                    key: key.to_string(),
                    value: v.to_string(),
                }),
        }
    }

    pub fn get_u32(&self, key: &str) -> Result<Option<u32>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<u32>()
                .map(Some)
                .map_err(|_| ConfigError::NotInteger {
                    key: key.to_string(),
                    value: v.to_string(),
                }),
        }
    }

    /// Comma-separated list of numbers.
    pub fn get_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => {
                let mut out = Vec::new();
                for part in v.split(',') {
                    let part = part.trim();
                    out.push(part.parse::<f64>().map_err(|_| ConfigError::NotNumeric {
                        key: key.to_string(),
                        value: part.to_string(),
                    })?);
                }
                Ok(Some(out))
            }
        }
    }

    /// Render back to the on-disk format. Numbers written through [`Document::set`]
    /// with `format_f64` round-trip bit-exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

/// Shortest decimal representation that parses back to the same f64.
pub fn format_f64(v: f64) -> String {
    let mut s = format!("{v}");
    // `{}` on f64 never prints an exponent; fall back for extreme magnitudes.
    if s.parse::<f64>() != Ok(v) {
        s = format!("{v:e}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blanks() {
        let doc = Document::parse("# header\n\n a = 1.5 # trailing\nb=2\n").unwrap();
        assert_eq!(doc.get_f64("a").unwrap(), Some(1.5));
        assert_eq!(doc.get_f64("b").unwrap(), Some(2.0));
        assert_eq!(doc.keys().count(), 2);
    }

    #[test]
    fn rejects_malformed_line() {
        let err = Document::parse("just words\n").unwrap_err();
        assert!(matches!(err, ConfigError::Malformed { line: 1, .. }));
    }

    #[test]
    fn rejects_duplicates() {
        let err = Document::parse("a = 1\na = 2\n").unwrap_err();
        assert!(matches!(err, ConfigError::Duplicate { line: 2, .. }));
    }

    #[test]
    fn non_numeric_is_reported_with_key() {
        let doc = Document::parse("a = fast\n").unwrap();
        let err = doc.get_f64("a").unwrap_err();
        assert!(matches!(err, ConfigError::NotNumeric { .. }));
    }

    #[test]
    fn format_round_trips() {
        for v in [0.1125, 2.88e-3, 4e-13, 1.0 / 3.0, 6.02e23, 5e-324] {
            assert_eq!(format_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn list_values() {
        let doc = Document::parse("knots = 0, 6, 3, 0\n").unwrap();
        assert_eq!(doc.get_f64_list("knots").unwrap().unwrap(), vec![0.0, 6.0, 3.0, 0.0]);
    }
}
