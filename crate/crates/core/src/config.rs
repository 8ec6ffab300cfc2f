//! Run configuration and the provenance block written at the top of every
//! text artifact.
//!
//! An artifact starts with zero or more `# key=value` lines (sorted by key),
//! followed by the format's own header line and body.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Key used to tie artifacts back to the corpus they were derived from.
pub const SOURCE_KEY: &str = "source_sha256";

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.entries.insert(key.into(), value.to_string());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn parse_value<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| Error::InvalidConfig(format!("cannot parse {key}={raw}"))),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries of `other` that are not already present.
    pub fn merge_missing(&mut self, other: &RunConfig) {
        for (k, v) in other.iter() {
            self.entries.entry(k.to_string()).or_insert_with(|| v.to_string());
        }
    }

    /// Copy the corpus lineage of an input artifact into this config.
    pub fn inherit_source(&mut self, input: &RunConfig) {
        if let Some(src) = input.get(SOURCE_KEY) {
            self.set(SOURCE_KEY, src);
        }
    }

    /// Parse a `key=value` config file. Blank lines and `#` comments are ignored.
    pub fn from_kv_text(text: &str, origin: &str) -> Result<Self> {
        let mut cfg = RunConfig::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(origin, i + 1, "expected key=value"))?;
            let k = k.trim().trim_start_matches("--");
            cfg.set(k.replace('_', "-"), v.trim());
        }
        Ok(cfg)
    }

    pub fn from_kv_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_kv_text(&text, &path.display().to_string())
    }

    /// Render as the provenance block (`# key=value` per line).
    pub fn to_header(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "# {k}={v}");
        }
        out
    }
}

/// Split an artifact into its provenance block and the remaining lines.
///
/// Returned lines carry their 1-based line number in the original file.
pub fn split_provenance(text: &str) -> (RunConfig, Vec<(usize, &str)>) {
    let mut cfg = RunConfig::new();
    let mut rest = Vec::new();
    let mut in_block = true;
    for (i, line) in text.lines().enumerate() {
        if in_block {
            if let Some(body) = line.strip_prefix("# ") {
                if let Some((k, v)) = body.split_once('=') {
                    cfg.set(k, v);
                    continue;
                }
            }
            in_block = false;
        }
        rest.push((i + 1, line));
    }
    (cfg, rest)
}

/// Check that every config carrying a source digest agrees on it.
pub fn check_same_source<'a>(configs: impl IntoIterator<Item = (&'a str, &'a RunConfig)>) -> Result<()> {
    let mut seen: Option<(&str, &str)> = None;
    for (name, cfg) in configs {
        let Some(src) = cfg.get(SOURCE_KEY) else {
            continue;
        };
        match seen {
            None => seen = Some((name, src)),
            Some((first, expected)) if expected != src => {
                return Err(Error::ProvenanceMismatch(format!(
                    "{first} has {SOURCE_KEY}={expected} but {name} has {src}"
                )))
            }
            _ => {}
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provenance_round_trip() {
        let mut cfg = RunConfig::new();
        cfg.set("window", 2).set("command", "count");
        let text = format!("{}3 6\n0 1 3\n", cfg.to_header());
        assert!(text.starts_with("# command=count\n# window=2\n"));
        let (back, rest) = split_provenance(&text);
        assert_eq!(back, cfg);
        assert_eq!(rest, vec![(3, "3 6"), (4, "0 1 3")]);
    }

    #[test]
    fn kv_file_normalizes_keys() {
        let cfg = RunConfig::from_kv_text("# c\n--min_count = 3\nwindow=2\n\n", "x").unwrap();
        assert_eq!(cfg.get("min-count"), Some("3"));
        assert_eq!(cfg.parse_value::<usize>("window").unwrap(), Some(2));
        assert!(RunConfig::from_kv_text("oops", "x").is_err());
    }

    #[test]
    fn mixed_sources_rejected() {
        let mut a = RunConfig::new();
        a.set(SOURCE_KEY, "aa");
        let mut b = RunConfig::new();
        b.set(SOURCE_KEY, "bb");
        let none = RunConfig::new();
        assert!(check_same_source([("a", &a), ("n", &none), ("a2", &a)]).is_ok());
        let err = check_same_source([("a", &a), ("b", &b)]).unwrap_err();
        assert_eq!(err.category(), "provenance-mismatch");
    }
}
