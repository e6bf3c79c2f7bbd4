use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, HarnessError, SCHEMA_VERSION};

/// Name of the JSON sidecar written next to the CSV files.
pub const SIDECAR: &str = "run.json";
/// Column carrying the config hash in every CSV.
pub const HASH_COLUMN: &str = "config_hash";

/// One scalar result, appended to `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub estimator: String,
    pub key: String,
    pub value: f64,
    pub std_error: Option<f64>,
    pub n_samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub schema: u32,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub files: Vec<String>,
    pub failures: Vec<String>,
    pub wall_time_seconds: f64,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}

/// Collects output files for one run; everything is written from one thread
/// after the estimators have reduced their results.
pub struct OutputDir {
    dir: PathBuf,
    hash: String,
    files: Vec<String>,
    records: Vec<ResultRecord>,
}

impl OutputDir {
    pub fn create(dir: &Path, hash: String) -> Result<Self, HarnessError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), hash, files: Vec::new(), records: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn records(&self) -> &[ResultRecord] {
        &self.records
    }

    fn experiment_id(&self) -> String {
        self.hash[..12].to_string()
    }

    /// Writes `name` with the given header plus a trailing hash column.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), HarnessError> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
        let mut head: Vec<&str> = header.to_vec();
        head.push(HASH_COLUMN);
        w.write_record(&head).map_err(|e| io_err(&path, e))?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            w.write_record(row.iter().map(String::as_str).chain([self.hash.as_str()])).map_err(|e| io_err(&path, e))?;
        }
        w.flush().map_err(|e| io_err(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Writes a text dump whose first line is `# config_hash <hash>`.
    pub fn write_text(&mut self, name: &str, body: &[u8]) -> Result<(), HarnessError> {
        let path = self.dir.join(name);
        let mut content = format!("# {HASH_COLUMN} {}\n", self.hash).into_bytes();
        content.extend_from_slice(body);
        fs::write(&path, content).map_err(|e| io_err(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn record(&mut self, estimator: &str, key: impl Into<String>, value: f64, std_error: Option<f64>, n_samples: Option<usize>) {
        let experiment = self.experiment_id();
        self.records.push(ResultRecord { experiment, estimator: estimator.into(), key: key.into(), value, std_error, n_samples });
    }

    /// Writes `results.csv` and the sidecar.
    pub fn finish(mut self, config: &ExperimentConfig, failures: &[String], wall_time: f64) -> Result<Vec<String>, HarnessError> {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        let rows: Vec<Vec<String>> = self
            .records
            .iter()
            .map(|r| {
                vec![
                    r.experiment.clone(),
                    r.estimator.clone(),
                    r.key.clone(),
                    r.value.to_string(),
                    opt(r.std_error),
                    r.n_samples.map(|n| n.to_string()).unwrap_or_default(),
                ]
            })
            .collect();
        self.write_csv("results.csv", &["experiment", "estimator", "key", "value", "std_error", "n_samples"], &rows)?;
        let sidecar = Sidecar {
            schema: SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: self.hash.clone(),
            seed: config.seed,
            config: serde_json::to_value(config).expect("config serializes"),
            files: self.files.clone(),
            failures: failures.to_vec(),
            wall_time_seconds: wall_time,
        };
        let path = self.dir.join(SIDECAR);
        let text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
        fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        Ok(self.files)
    }
}

/// Checks that the sidecar's hash matches its config and that every listed
/// file carries that hash. Returns one message per problem.
pub fn verify_dir(dir: &Path) -> Result<Vec<String>, HarnessError> {
    let path = dir.join(SIDECAR);
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let sidecar: Sidecar = serde_json::from_str(&text).map_err(|e| io_err(&path, e))?;
    let mut problems = Vec::new();
    match serde_json::from_value::<ExperimentConfig>(sidecar.config.clone()) {
        Ok(config) if config.hash() == sidecar.config_hash => {}
        Ok(config) => problems.push(format!("{SIDECAR}: config hashes to {}, sidecar says {}", config.hash(), sidecar.config_hash)),
        Err(e) => problems.push(format!("{SIDECAR}: config does not parse: {e}")),
    }
    for name in &sidecar.files {
        let file = dir.join(name);
        if name.ends_with(".csv") {
            let mut r = match csv::Reader::from_path(&file) {
                Ok(r) => r,
                Err(e) => {
                    problems.push(format!("{name}: {e}"));
                    continue;
                }
            };
            let headers = r.headers().map_err(|e| io_err(&file, e))?.clone();
            let Some(col) = headers.iter().position(|h| h == HASH_COLUMN) else {
                problems.push(format!("{name}: no {HASH_COLUMN} column"));
                continue;
            };
            for (i, rec) in r.records().enumerate() {
                match rec {
                    Ok(rec) if rec.get(col) == Some(sidecar.config_hash.as_str()) => {}
                    Ok(_) => problems.push(format!("{name}: row {} has a different config hash", i + 1)),
                    Err(e) => problems.push(format!("{name}: row {}: {e}", i + 1)),
                }
            }
        } else {
            let expected = format!("# {HASH_COLUMN} {}", sidecar.config_hash);
            match fs::read_to_string(&file) {
                Ok(body) if body.lines().next() == Some(expected.as_str()) => {}
                Ok(_) => problems.push(format!("{name}: config hash line missing or different")),
                Err(e) => problems.push(format!("{name}: {e}")),
            }
        }
    }
    Ok(problems)
}
