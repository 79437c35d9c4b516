//! Flat `key = value` configuration with fail-closed key tracking.
//!
//! Every key that reaches an experiment must be read by it; leftovers are a
//! validation error, so a typo never silently falls back to a default.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use polylab::Error;

/// Keys handled by the runner itself rather than by an experiment.
const RUNNER_KEYS: [&str; 3] = ["experiment", "seed", "out"];

#[derive(Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut cfg = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("config line {}: expected `key = value`", i + 1)))?;
            let key = k.trim().replace('-', "_");
            if key.is_empty() {
                return Err(bad(format!("config line {}: empty key", i + 1)));
            }
            if cfg.values.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(bad(format!("config line {}: duplicate key `{key}`", i + 1)));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Later sources override earlier ones.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.replace('-', "_"), value.into());
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.values.get(key).map(String::as_str)
    }

    pub fn str_or(&self, key: &str, default: &str) -> String {
        self.raw(key).unwrap_or(default).to_string()
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, Error> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| bad(format!("key `{key}`: cannot parse `{v}`"))),
        }
    }

    pub fn req<T: std::str::FromStr>(&self, key: &str) -> Result<T, Error> {
        self.get(key)?.ok_or_else(|| bad(format!("missing required key `{key}`")))
    }

    pub fn or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, Error> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list.
    pub fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, Error> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|t| t.trim().parse().map_err(|_| bad(format!("key `{key}`: cannot parse `{t}`"))))
                .collect::<Result<Vec<T>, Error>>()
                .map(Some),
        }
    }

    pub fn list_req<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>, Error> {
        self.list(key)?.ok_or_else(|| bad(format!("missing required key `{key}`")))
    }

    /// Points written as `x1,x2;y1,y2;...`.
    pub fn points(&self, key: &str) -> Result<Option<Vec<Vec<f64>>>, Error> {
        let Some(v) = self.raw(key) else { return Ok(None) };
        let mut out = Vec::new();
        for p in v.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let coords = p
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| bad(format!("key `{key}`: cannot parse `{t}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            out.push(coords);
        }
        Ok(Some(out))
    }

    /// Error on keys no part of the experiment asked for.
    pub fn finish(&self) -> Result<(), Error> {
        let used = self.used.borrow();
        let unknown: Vec<&str> = self
            .values
            .keys()
            .map(String::as_str)
            .filter(|k| !used.contains(*k) && !RUNNER_KEYS.contains(k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(bad(format!("unknown key(s) for this experiment: {}", unknown.join(", "))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_tracks() {
        let c = Config::parse("# comment\nalpha = 1.5\nn-grid = 8, 16 # trailing\n").unwrap();
        assert_eq!(c.req::<f64>("alpha").unwrap(), 1.5);
        assert!(c.finish().is_err());
        assert_eq!(c.list_req::<u64>("n_grid").unwrap(), vec![8, 16]);
        c.finish().unwrap();
    }

    #[test]
    fn rejects_duplicates_and_garbage() {
        assert!(Config::parse("a = 1\na = 2").is_err());
        assert!(Config::parse("just words").is_err());
        let c = Config::parse("d = two").unwrap();
        assert!(c.req::<usize>("d").is_err());
    }

    #[test]
    fn points_syntax() {
        let c = Config::parse("points = 1,0; 0,2").unwrap();
        assert_eq!(c.points("points").unwrap().unwrap(), vec![vec![1.0, 0.0], vec![0.0, 2.0]]);
    }
}
