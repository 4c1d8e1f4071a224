//! Sectioned `key = value` configuration text.
//!
//! ```text
//! # comment
//! [rx]
//! radius_m = 0.03
//! c_l_f = 10e-12
//! ```
//!
//! Keys outside any section are rejected, as are duplicate keys. Values
//! are kept as text and converted on access so error messages can point at
//! the offending line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{ConfigError, HbcError, Result};

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
    base_dir: Option<PathBuf>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut sections: BTreeMap<String, BTreeMap<String, Entry>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                    line,
                    message: format!("unterminated section header `{content}`"),
                })?;
                let name = name.trim();
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(ConfigError::Syntax {
                        line,
                        message: format!("invalid section name `{name}`"),
                    });
                }
                sections.entry(name.to_string()).or_default();
                current = Some(name.to_string());
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ConfigError::Syntax { line, message: "empty key".into() });
            }
            let section = current.clone().ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("key `{key}` appears before any [section]"),
            })?;
            let entries = sections.entry(section.clone()).or_default();
            if entries.contains_key(key) {
                return Err(ConfigError::Duplicate {
                    section,
                    key: key.to_string(),
                    line,
                });
            }
            entries.insert(key.to_string(), Entry { value: value.to_string(), line });
        }
        Ok(Config { sections, base_dir: None })
    }

    /// Reads and parses `path`; relative table paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HbcError::io(path, e))?;
        let mut cfg = Config::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn with_base_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.base_dir = Some(dir.into());
        self
    }

    pub fn base_dir(&self) -> Option<&Path> {
        self.base_dir.as_deref()
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    pub fn contains(&self, section: &str, key: &str) -> bool {
        self.sections.get(section).is_some_and(|s| s.contains_key(key))
    }

    pub fn get_str(&self, section: &str, key: &str) -> Option<&str> {
        self.entry(section, key).map(|e| e.value.as_str())
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section).and_then(|s| s.get(key))
    }

    pub fn get_f64(&self, section: &str, key: &str) -> Result<Option<f64>, ConfigError> {
        let Some(e) = self.entry(section, key) else {
            return Ok(None);
        };
        match e.value.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            _ => Err(self.bad(section, key, e, "finite number")),
        }
    }

    pub fn require_f64(&self, section: &str, key: &str) -> Result<f64, ConfigError> {
        self.get_f64(section, key)?.ok_or_else(|| missing(section, key))
    }

    pub fn get_usize(&self, section: &str, key: &str) -> Result<Option<usize>, ConfigError> {
        let Some(e) = self.entry(section, key) else {
            return Ok(None);
        };
        e.value
            .parse::<usize>()
            .map(Some)
            .map_err(|_| self.bad(section, key, e, "nonnegative integer"))
    }

    pub fn get_bool(&self, section: &str, key: &str) -> Result<Option<bool>, ConfigError> {
        let Some(e) = self.entry(section, key) else {
            return Ok(None);
        };
        match e.value.as_str() {
            "true" | "yes" | "1" => Ok(Some(true)),
            "false" | "no" | "0" => Ok(Some(false)),
            _ => Err(self.bad(section, key, e, "boolean")),
        }
    }

    fn bad(&self, section: &str, key: &str, e: &Entry, expected: &'static str) -> ConfigError {
        ConfigError::BadValue {
            section: section.to_string(),
            key: key.to_string(),
            line: e.line,
            expected,
            value: e.value.clone(),
        }
    }

    /// Sets or replaces a value; used by sweeps to override one parameter.
    pub fn set(&mut self, section: &str, key: &str, value: impl ToString) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), Entry { value: value.to_string(), line: 0 });
    }

    pub fn remove(&mut self, section: &str, key: &str) {
        if let Some(s) = self.sections.get_mut(section) {
            s.remove(key);
        }
    }

    /// Canonical text form; parsing it yields an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, entries) in &self.sections {
            let _ = writeln!(out, "[{name}]");
            for (k, e) in entries {
                let _ = writeln!(out, "{k} = {}", e.value);
            }
            out.push('\n');
        }
        out
    }
}

pub(crate) fn missing(section: &str, key: &str) -> ConfigError {
    ConfigError::Missing {
        section: section.to_string(),
        key: key.to_string(),
    }
}
