//! Structured-text dialect shared by robot description and scenario files.
//!
//! ```text
//! # comment
//! [section name]
//! key = 1.0 2.0 3.0
//! ```
//!
//! Sections keep their file order, `#` starts a comment, values are
//! whitespace-separated tokens. Consumers drain the keys they understand and
//! then call [`Section::finish`], which rejects anything left over — unknown
//! keys are always an error, never silently ignored.

use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value` or `[section]`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: key `{key}` appears before any section header")]
    KeyOutsideSection { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}` in section [{section}]")]
    DuplicateKey { line: usize, section: String, key: String },
    #[error("missing section [{0}]")]
    MissingSection(String),
    #[error("section [{section}]: missing key `{key}`")]
    MissingKey { section: String, key: String },
    #[error("section [{section}]: unknown key(s): {keys}")]
    UnknownKeys { section: String, keys: String },
    #[error("section [{section}], key `{key}`: {reason}")]
    BadValue { section: String, key: String, reason: String },
}

/// A parsed file: ordered list of sections.
#[derive(Debug, Clone)]
pub struct Document {
    sections: Vec<Section>,
}

/// One `[name]` block with its key/value entries.
#[derive(Debug, Clone)]
pub struct Section {
    pub name: String,
    entries: BTreeMap<String, String>,
}

impl Document {
    pub fn parse(text: &str) -> Result<Document, ConfigError> {
        let mut sections: Vec<Section> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if stripped.is_empty() {
                continue;
            }
            if let Some(name) = stripped.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::Malformed { line, text: stripped.to_string() })?
                    .trim()
                    .to_string();
                sections.push(Section { name, entries: BTreeMap::new() });
                continue;
            }
            let (key, value) = stripped
                .split_once('=')
                .ok_or_else(|| ConfigError::Malformed { line, text: stripped.to_string() })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            let section = sections.last_mut().ok_or_else(|| ConfigError::KeyOutsideSection {
                line,
                key: key.clone(),
            })?;
            if section.entries.insert(key.clone(), value).is_some() {
                return Err(ConfigError::DuplicateKey { line, section: section.name.clone(), key });
            }
        }
        Ok(Document { sections })
    }

    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    /// Removes and returns the unique section with the given name.
    pub fn take_section(&mut self, name: &str) -> Result<Section, ConfigError> {
        let pos = self
            .sections
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| ConfigError::MissingSection(name.to_string()))?;
        Ok(self.sections.remove(pos))
    }

    /// Errors if any section is still present (consumers must drain all).
    pub fn finish(self) -> Result<(), ConfigError> {
        if let Some(s) = self.sections.first() {
            return Err(ConfigError::MissingSection(format!("unexpected section [{}]", s.name)));
        }
        Ok(())
    }
}

impl Section {
    fn bad(&self, key: &str, reason: impl Into<String>) -> ConfigError {
        ConfigError::BadValue { section: self.name.clone(), key: key.to_string(), reason: reason.into() }
    }

    pub fn take_raw(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    pub fn take_str(&mut self, key: &str) -> Result<String, ConfigError> {
        self.take_raw(key).ok_or_else(|| ConfigError::MissingKey {
            section: self.name.clone(),
            key: key.to_string(),
        })
    }

    pub fn take_usize(&mut self, key: &str) -> Result<usize, ConfigError> {
        let raw = self.take_str(key)?;
        raw.parse().map_err(|_| self.bad(key, format!("`{raw}` is not a non-negative integer")))
    }

    pub fn take_u64_or(&mut self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.take_raw(key) {
            None => Ok(default),
            Some(raw) => {
                raw.parse().map_err(|_| self.bad(key, format!("`{raw}` is not an integer")))
            }
        }
    }

    pub fn take_f64(&mut self, key: &str) -> Result<f64, ConfigError> {
        let raw = self.take_str(key)?;
        raw.parse().map_err(|_| self.bad(key, format!("`{raw}` is not a number")))
    }

    /// Fixed-length list of numbers.
    pub fn take_f64s(&mut self, key: &str, expect: usize) -> Result<Vec<f64>, ConfigError> {
        let list = self.take_f64_list(key)?;
        if list.len() != expect {
            return Err(self.bad(key, format!("expected {expect} numbers, got {}", list.len())));
        }
        Ok(list)
    }

    /// List of numbers whose length must be one of `choices`.
    pub fn take_f64s_of(&mut self, key: &str, choices: &[usize]) -> Result<Vec<f64>, ConfigError> {
        let list = self.take_f64_list(key)?;
        if !choices.contains(&list.len()) {
            return Err(self.bad(
                key,
                format!("expected one of {choices:?} numbers, got {}", list.len()),
            ));
        }
        Ok(list)
    }

    fn take_f64_list(&mut self, key: &str) -> Result<Vec<f64>, ConfigError> {
        let raw = self.take_str(key)?;
        raw.split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| self.bad(key, format!("`{tok}` is not a number")))
            })
            .collect()
    }

    /// Optional variant of [`Section::take_f64s`].
    pub fn take_f64s_opt(&mut self, key: &str, expect: usize) -> Result<Option<Vec<f64>>, ConfigError> {
        if self.entries.contains_key(key) {
            Ok(Some(self.take_f64s(key, expect)?))
        } else {
            Ok(None)
        }
    }

    /// Rejects any keys that were not drained.
    pub fn finish(self) -> Result<(), ConfigError> {
        if self.entries.is_empty() {
            return Ok(());
        }
        let keys = self.entries.keys().cloned().collect::<Vec<_>>().join(", ");
        Err(ConfigError::UnknownKeys { section: self.name, keys })
    }
}
