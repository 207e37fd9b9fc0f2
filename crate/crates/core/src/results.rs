//! Per-run results table shared by sweeps and the statistics.
//!
//! One row per run, keyed by the hash of its configuration so an interrupted
//! sweep can skip runs that already finished. Failed runs keep their row with
//! `status = error` and never enter the statistics.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::sim::RunRecord;
use crate::stats::Observation;

pub const RESULTS_MAGIC: &str = "# trustsim results v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub config_hash: String,
    pub status: Status,
    pub error: String,
    pub scenario: String,
    pub mode: String,
    pub enabled: bool,
    pub t_est: usize,
    pub noise: String,
    pub sigma_pla: f64,
    pub seed: u64,
    pub crashes: Option<u32>,
    pub progress: Option<f64>,
    pub success: Option<bool>,
    pub min_dist: Option<f64>,
    pub sim_time: Option<f64>,
    pub final_omega: Option<f64>,
    pub wall_time: Option<f64>,
    /// The full configuration as JSON.
    pub config: String,
}

/// Short label of the prediction degradation of a run.
pub fn noise_label(config: &ExperimentConfig) -> String {
    match &config.degradation {
        None => "none".to_string(),
        Some(d) => {
            let mut s = format!(
                "deg[{}-{}s,sigma={},bias={:.3}",
                d.onset_s, d.offset_s, d.sigma_deg, d.heading_bias
            );
            if d.shuffle_confidences {
                s.push_str(",shuffled");
            }
            s.push(']');
            s
        }
    }
}

impl ResultRow {
    fn axes(config: &ExperimentConfig, hash: &str) -> Self {
        ResultRow {
            config_hash: hash.to_string(),
            status: Status::Ok,
            error: String::new(),
            scenario: config.scenario.clone(),
            mode: config.mode.to_string(),
            enabled: config.trustmhe.enabled,
            t_est: config.trustmhe.t_est,
            noise: noise_label(config),
            sigma_pla: config.planner.sigma_pla,
            seed: config.seed,
            crashes: None,
            progress: None,
            success: None,
            min_dist: None,
            sim_time: None,
            final_omega: None,
            wall_time: None,
            config: config.to_json(),
        }
    }

    pub fn completed(config: &ExperimentConfig, hash: &str, record: &RunRecord) -> Self {
        ResultRow {
            crashes: Some(record.crashes),
            progress: Some(record.progress),
            success: Some(record.success),
            min_dist: Some(record.min_dist),
            sim_time: Some(record.sim_time),
            final_omega: Some(record.final_omega),
            wall_time: Some(record.wall_time),
            ..Self::axes(config, hash)
        }
    }

    pub fn failed(config: &ExperimentConfig, hash: &str, error: &str) -> Self {
        ResultRow {
            status: Status::Error,
            error: error.to_string(),
            ..Self::axes(config, hash)
        }
    }

    pub fn observation(&self) -> Option<Observation> {
        if self.status != Status::Ok {
            return None;
        }
        Some(Observation {
            scenario: self.scenario.clone(),
            mode: self.mode.clone(),
            noise: self.noise.clone(),
            sigma_pla: self.sigma_pla,
            enabled: self.enabled,
            t_est: self.t_est,
            seed: self.seed,
            crashes: self.crashes?,
            progress: self.progress?,
            success: self.success?,
            min_dist: self.min_dist?,
        })
    }
}

/// Appends rows, writing the magic line and header first if the file is new
/// or empty.
pub fn append_rows(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let fresh = std::fs::metadata(path).map_or(true, |m| m.len() == 0);
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    if fresh {
        writeln!(file, "{RESULTS_MAGIC}")?;
    }
    let mut w = csv::WriterBuilder::new()
        .has_headers(fresh)
        .from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    if first.trim_end() != RESULTS_MAGIC {
        return Err(Error::MalformedTable(format!(
            "{}: expected `{RESULTS_MAGIC}` on the first line",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for r in csv::Reader::from_reader(reader).deserialize() {
        rows.push(r?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictors::DegradationSchedule;

    fn record() -> RunRecord {
        RunRecord {
            crashes: 1,
            progress: 87.5,
            success: false,
            min_dist: 0.0,
            sim_time: 20.0,
            final_omega: 0.25,
            wall_time: 3.0,
            max_plan_ms: 10.0,
        }
    }

    #[test]
    fn round_trip_and_append() {
        let dir = std::env::temp_dir().join(format!("trustsim-results-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("results.csv");
        let _ = std::fs::remove_file(&path);
        let mut config = ExperimentConfig::new("junction");
        config.seed = 4;
        let ok = ResultRow::completed(&config, "abc", &record());
        let bad = ResultRow::failed(&config, "def", "boom, with a comma");
        append_rows(&path, &[ok.clone()]).unwrap();
        append_rows(&path, &[bad.clone()]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(RESULTS_MAGIC));
        assert_eq!(text.matches("config_hash").count(), 1);
        let rows = read_rows(&path).unwrap();
        assert_eq!(rows, vec![ok, bad]);
        let obs = rows[0].observation().unwrap();
        assert_eq!((obs.seed, obs.crashes, obs.noise.as_str()), (4, 1, "none"));
        assert!(rows[1].observation().is_none());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn rejects_foreign_files() {
        let path =
            std::env::temp_dir().join(format!("trustsim-foreign-{}.csv", std::process::id()));
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_rows(&path), Err(Error::MalformedTable(_))));
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn noise_labels() {
        let mut config = ExperimentConfig::new("junction");
        assert_eq!(noise_label(&config), "none");
        config.degradation = Some(DegradationSchedule {
            onset_s: 3.0,
            offset_s: 30.0,
            sigma_deg: 0.5,
            heading_bias: std::f64::consts::PI,
            shuffle_confidences: true,
        });
        assert_eq!(
            noise_label(&config),
            "deg[3-30s,sigma=0.5,bias=3.142,shuffled]"
        );
    }
}
