//! Flat configuration files.
//!
//! One `key = value` pair per line; blank lines and lines starting with `#`
//! are ignored. Keys are the long flag names with `-` replaced by `_`; lists
//! are comma separated and switches take `true` or `false`.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{usage, CliResult};

/// Keys accepted by every subcommand.
pub const GLOBAL_KEYS: &[&str] = &["output", "format", "workers"];

#[derive(Debug, Default)]
pub struct Settings {
    entries: BTreeMap<String, String>,
    origin: String,
}

impl Settings {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| usage(format!("{origin}:{}: expected `key = value`", k + 1)))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(usage(format!("{origin}:{}: empty key", k + 1)));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(usage(format!("{origin}:{}: duplicate key `{key}`", k + 1)));
            }
        }
        Ok(Self { entries, origin: origin.to_string() })
    }

    /// Rejects keys outside the subcommand's schema.
    pub fn validate(&self, command: &str, keys: &[&str]) -> CliResult<()> {
        for key in self.entries.keys() {
            if !keys.contains(&key.as_str()) && !GLOBAL_KEYS.contains(&key.as_str()) {
                let mut allowed: Vec<&str> = keys.iter().chain(GLOBAL_KEYS).copied().collect();
                allowed.sort_unstable();
                return Err(usage(format!(
                    "{}: key `{key}` is not valid for `{command}` (allowed: {})",
                    self.origin,
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    fn parse_value<T: FromStr>(&self, key: &str, value: &str) -> CliResult<T>
    where
        T::Err: Display,
    {
        value.parse().map_err(|e| usage(format!("{}: bad value for `{key}`: {e}", self.origin)))
    }

    /// The flag if given, else the file entry.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T::Err: Display,
    {
        match (flag, self.entries.get(key)) {
            (Some(v), _) => Ok(Some(v)),
            (None, Some(raw)) => self.parse_value(key, raw).map(Some),
            (None, None) => Ok(None),
        }
    }

    pub fn pick_list<T: FromStr>(&self, flag: Option<Vec<T>>, key: &str) -> CliResult<Option<Vec<T>>>
    where
        T::Err: Display,
    {
        match (flag, self.entries.get(key)) {
            (Some(v), _) => Ok(Some(v)),
            (None, Some(raw)) => {
                raw.split(',').map(|v| self.parse_value(key, v.trim())).collect::<CliResult<_>>().map(Some)
            }
            (None, None) => Ok(None),
        }
    }

    /// A switch set on the command line stays set.
    pub fn pick_switch(&self, flag: bool, key: &str) -> CliResult<bool> {
        Ok(flag || self.pick::<bool>(None, key)?.unwrap_or(false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let s = Settings::parse("# run\nseed = 7\n\nxi = 2, 4\nmc_check = true\n", "test").unwrap();
        assert_eq!(s.pick::<u64>(None, "seed").unwrap(), Some(7));
        assert_eq!(s.pick(Some(9u64), "seed").unwrap(), Some(9));
        assert_eq!(s.pick_list::<f64>(None, "xi").unwrap(), Some(vec![2.0, 4.0]));
        assert!(s.pick_switch(false, "mc_check").unwrap());
        assert_eq!(s.pick::<u64>(None, "samples").unwrap(), None);
    }

    #[test]
    fn rejects_malformed_files() {
        assert!(Settings::parse("seed 7", "t").is_err());
        assert!(Settings::parse("seed = 1\nseed = 2", "t").is_err());
        assert!(Settings::parse(" = 2", "t").is_err());
        let s = Settings::parse("seed = x", "t").unwrap();
        assert!(s.pick::<u64>(None, "seed").is_err());
        let s = Settings::parse("colour = red", "t").unwrap();
        assert!(s.validate("tails", &["seed"]).is_err());
        let s = Settings::parse("workers = 2", "t").unwrap();
        assert!(s.validate("tails", &["seed"]).is_ok());
    }
}
