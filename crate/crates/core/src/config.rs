//! Flat `key=value` configuration files and codebook resolution.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::codec_fl::{build_shuffled_concat, ConcatCodebook, FlCodebook, FlCodebookFile};
use crate::codec_vl::VlCodebook;
use crate::error::{Error, Result};

/// Parsed `key=value` pairs. `#` starts a comment; blank lines are ignored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Format {
                line: i + 1,
                message: format!("expected `key=value`, got `{line}`"),
            })?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Format {
                    line: i + 1,
                    message: "empty key".into(),
                });
            }
            if entries.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Format {
                    line: i + 1,
                    message: format!("duplicate key `{k}`"),
                });
            }
        }
        Ok(KeyValues { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Format { line, message } => Error::Config(format!("{}:{line}: {message}", path.display())),
            other => other,
        })
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("bad value `{v}` for `{key}`"))),
        }
    }

    pub fn parse_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| v.parse().map_err(|_| Error::Config(format!("bad value `{v}` for `{key}`"))))
            .transpose()
    }

    /// Integer that may be written in scientific notation, e.g. `4e4`.
    pub fn count_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse_count(v).ok_or_else(|| Error::Config(format!("bad count `{v}` for `{key}`"))),
        }
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        let Some(v) = self.get(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| Error::Config(format!("bad list item `{s}` in `{key}`"))))
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    /// Fails on any key outside `known`, catching typos early.
    pub fn reject_unknown(&self, known: &[&str]) -> Result<()> {
        match self.entries.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(Error::Config(format!("unknown key `{k}`"))),
            None => Ok(()),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

pub fn parse_count(s: &str) -> Option<u64> {
    let s = s.trim();
    if let Ok(n) = s.parse::<u64>() {
        return Some(n);
    }
    let f: f64 = s.parse().ok()?;
    (f >= 0.0 && f.fract() == 0.0 && f < 1.8e19).then_some(f as u64)
}

/// `builtin:4b6b` or a codebook file. `shuffle_seed` builds a concatenated
/// codebook with an independently shuffled mapping per frame.
pub fn resolve_fl_codebook(spec: &str, frames: usize, shuffle_seed: Option<u64>) -> Result<ConcatCodebook> {
    let file = match spec {
        "builtin:4b6b" => FlCodebookFile::Single(FlCodebook::four_b_six_b()),
        s if s.starts_with("builtin:") => return Err(Error::Config(format!("unknown fixed-length codebook `{s}`"))),
        path => FlCodebookFile::load(Path::new(path))?,
    };
    match (file, shuffle_seed) {
        (FlCodebookFile::Single(cb), Some(seed)) => build_shuffled_concat(&cb, frames.max(1), seed),
        (FlCodebookFile::Concat(_), Some(_)) => Err(Error::Config(
            "shuffle_seed applies only to single-frame codebooks".into(),
        )),
        (file, None) => file.into_concat(frames),
    }
}

/// `builtin:rll13`, `builtin:dcfree-vl` or a codebook file.
pub fn resolve_vl_codebook(spec: &str) -> Result<VlCodebook> {
    match spec {
        "builtin:rll13" => Ok(VlCodebook::rll_1_3()),
        "builtin:dcfree-vl" => Ok(VlCodebook::dc_free_two_state()),
        s if s.starts_with("builtin:") => Err(Error::Config(format!("unknown variable-length codebook `{s}`"))),
        path => VlCodebook::load(Path::new(path)),
    }
}

/// Stable 64-bit FNV-1a hash, used to tag outputs with their configuration.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}
