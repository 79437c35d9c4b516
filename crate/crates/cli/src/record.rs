//! Output tables and the append-only run record.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Full-precision, round-trip exact float text.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> std::io::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| e.into_error())
    }
}

/// What an experiment hands back to the runner.
#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<(String, Table)>,
    pub diagnostics: BTreeMap<String, Value>,
    /// A numerical diagnostic failed; outputs are still written.
    pub diagnostic_failure: Option<String>,
}

impl Outcome {
    pub fn single(table: Table) -> Self {
        Outcome { tables: vec![(String::new(), table)], ..Default::default() }
    }

    pub fn diag(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.diagnostics.insert(key.to_string(), v.into());
        self
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the canonical (sorted) configuration, seed included.
pub fn config_hash(experiment: &str, seed: u64, entries: &BTreeMap<String, String>) -> String {
    let mut text = format!("experiment={experiment}\nseed={seed}\n");
    for (k, v) in entries {
        if k != "experiment" && k != "seed" && k != "out" {
            text.push_str(&format!("{k}={v}\n"));
        }
    }
    sha256_hex(text.as_bytes())
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Output path for a named table: `out.csv` for the main one, `out.name.csv` otherwise.
pub fn table_path(out: &Path, name: &str) -> PathBuf {
    if name.is_empty() {
        return out.to_path_buf();
    }
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    out.with_file_name(format!("{stem}.{name}.{ext}"))
}

pub fn record_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".runs.jsonl");
    PathBuf::from(s)
}

#[allow(clippy::too_many_arguments)]
pub fn run_record(
    experiment: &str,
    hash: &str,
    seed: u64,
    config: &BTreeMap<String, String>,
    started: f64,
    finished: f64,
    outputs: Vec<Value>,
    outcome: &Outcome,
) -> Value {
    json!({
        "experiment": experiment,
        "config_hash": hash,
        "seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "started_unix": started,
        "finished_unix": finished,
        "outputs": outputs,
        "diagnostics": outcome.diagnostics,
        "status": if outcome.diagnostic_failure.is_some() { "diagnostic_failure" } else { "ok" },
    })
}

pub fn append_record(path: &Path, record: &Value) -> std::io::Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    writeln!(f, "{record}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 6.02e23, -0.0, 2.5] {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn hash_ignores_order_and_out() {
        let mut a = BTreeMap::new();
        a.insert("alpha".to_string(), "1.5".to_string());
        a.insert("d".to_string(), "2".to_string());
        let mut b = a.clone();
        b.insert("out".to_string(), "x.csv".to_string());
        assert_eq!(config_hash("model.classify", 1, &a), config_hash("model.classify", 1, &b));
        assert_ne!(config_hash("model.classify", 1, &a), config_hash("model.classify", 2, &a));
    }

    #[test]
    fn side_table_names() {
        assert_eq!(table_path(Path::new("r/a.csv"), "rows"), PathBuf::from("r/a.rows.csv"));
        assert_eq!(record_path(Path::new("r/a.csv")), PathBuf::from("r/a.csv.runs.jsonl"));
    }
}
