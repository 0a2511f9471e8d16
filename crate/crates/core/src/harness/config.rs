//! Flat `key=value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Values given on the
//! command line take precedence over the file.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::{Error, Result};

/// Keys understood by the CLI.
pub const KNOWN_KEYS: [&str; 14] = [
    "alpha",
    "base",
    "d",
    "delta",
    "iters",
    "m",
    "mu",
    "record_every",
    "seed",
    "sigma2",
    "tuned_stepsize",
    "warmup",
    "x0",
    "n",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value, found {line:?}", lineno + 1)))?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::Parse(format!("line {}: unknown key {key:?}", lineno + 1)));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| Error::Parse(format!("config key {key}: {v:?}: {e}"))))
            .transpose()
    }

    /// `cli`, else the file's value, else `default`.
    pub fn pick<T: FromStr>(&self, key: &str, cli: Option<T>, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match cli {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }

    /// Like [`pick`](Self::pick) without a default.
    pub fn pick_opt<T: FromStr>(&self, key: &str, cli: Option<T>) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match cli {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    pub fn flag(&self, key: &str, cli: bool) -> Result<bool> {
        Ok(cli || self.get::<bool>(key)?.unwrap_or(false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let c = ConfigFile::parse("# comment\n\nalpha = 0.5\nseed=9\nwarmup=true\n").unwrap();
        assert_eq!(c.pick("alpha", None, 1e-4).unwrap(), 0.5);
        assert_eq!(c.pick("alpha", Some(0.25), 1e-4).unwrap(), 0.25);
        assert_eq!(c.pick("mu", None, 0.1).unwrap(), 0.1);
        assert_eq!(c.pick_opt::<u64>("seed", None).unwrap(), Some(9));
        assert!(c.flag("warmup", false).unwrap());
        assert!(!ConfigFile::default().flag("warmup", false).unwrap());
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(ConfigFile::parse("alpha 0.5").is_err());
        assert!(ConfigFile::parse("colour=blue").is_err());
        let c = ConfigFile::parse("alpha=fast").unwrap();
        assert!(c.pick::<f64>("alpha", None, 1.0).is_err());
    }
}
