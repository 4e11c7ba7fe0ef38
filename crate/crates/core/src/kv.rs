//! Flat `key = value` text files used for presets, manifests and checkpoints.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are unique.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KvError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("missing key `{0}`")]
    Missing(String),
    #[error("line {line}: cannot parse `{key}` from {value:?}")]
    BadValue { line: usize, key: String, value: String },
    #[error("unknown key `{key}` on line {line}")]
    Unknown { line: usize, key: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl KvError {
    /// Source line the error points at, when there is one.
    pub fn line(&self) -> Option<usize> {
        match self {
            KvError::Malformed { line, .. }
            | KvError::Duplicate { line, .. }
            | KvError::BadValue { line, .. }
            | KvError::Unknown { line, .. } => Some(*line),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvMap {
    entries: Vec<(String, String, usize)>,
}

impl KvMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self, KvError> {
        let mut map = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((k, v)) = trimmed.split_once('=') else {
                return Err(KvError::Malformed {
                    line,
                    text: raw.to_string(),
                });
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(KvError::Malformed {
                    line,
                    text: raw.to_string(),
                });
            }
            if map.entries.iter().any(|(key, _, _)| key == k) {
                return Err(KvError::Duplicate {
                    line,
                    key: k.to_string(),
                });
            }
            map.entries.push((k.to_string(), v.to_string(), line));
        }
        Ok(map)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, KvError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl ToString) {
        let key = key.into();
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _, _)| *k == key) {
            Some(entry) => entry.1 = value,
            None => {
                let line = self.entries.len() + 1;
                self.entries.push((key, value, line));
            }
        }
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, _)| v.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, KvError> {
        let Some((_, v, line)) = self.entries.iter().find(|(k, _, _)| k == key) else {
            return Ok(None);
        };
        v.parse().map(Some).map_err(|_| KvError::BadValue {
            line: *line,
            key: key.to_string(),
            value: v.clone(),
        })
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, KvError> {
        self.get(key)?.ok_or_else(|| KvError::Missing(key.to_string()))
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, KvError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Fails on the first key not in `known`.
    pub fn deny_unknown(&self, known: &[&str]) -> Result<(), KvError> {
        match self.entries.iter().find(|(k, _, _)| !known.contains(&k.as_str())) {
            Some((k, _, line)) => Err(KvError::Unknown {
                line: *line,
                key: k.clone(),
            }),
            None => Ok(()),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _, _)| k.as_str())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), KvError> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }
}

impl std::fmt::Display for KvMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut out = String::new();
        for (k, v, _) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        f.write_str(&out)
    }
}
