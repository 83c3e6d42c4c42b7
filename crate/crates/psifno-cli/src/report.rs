use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::{HarnessError, RunOutput};

pub const REPORT_VERSION: u32 = 1;

/// One CSV file: fixed header, rows already formatted.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&'static str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match header of {}", self.name);
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, HarnessError> {
        let path = dir.join(self.file_name());
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
        w.write_record(&self.header).map_err(|e| csv_err(&path, e))?;
        for r in &self.rows {
            w.write_record(r).map_err(|e| csv_err(&path, e))?;
        }
        w.flush().map_err(|e| HarnessError::io(&path, e))?;
        Ok(path)
    }
}

fn csv_err(path: &Path, e: csv::Error) -> HarnessError {
    HarnessError::io(path, std::io::Error::new(std::io::ErrorKind::Other, e))
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub pass: bool,
    /// Measured quantities.
    pub values: BTreeMap<String, f64>,
    /// Limits they were checked against.
    pub tolerances: BTreeMap<String, f64>,
    pub detail: String,
}

impl CriterionResult {
    pub fn new(id: u32, name: &str) -> Self {
        CriterionResult {
            id,
            name: name.to_string(),
            pass: true,
            values: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            detail: String::new(),
        }
    }

    /// Records `value` and requires `value <= limit`.
    pub fn at_most(&mut self, key: &str, value: f64, limit: f64) -> &mut Self {
        self.values.insert(key.into(), value);
        self.tolerances.insert(format!("{key}.max"), limit);
        if !(value <= limit) {
            self.fail(format!("{key} = {value:.3e} > {limit:.3e}"));
        }
        self
    }

    /// Records `value` and requires `value >= limit`.
    pub fn at_least(&mut self, key: &str, value: f64, limit: f64) -> &mut Self {
        self.values.insert(key.into(), value);
        self.tolerances.insert(format!("{key}.min"), limit);
        if !(value >= limit) {
            self.fail(format!("{key} = {value:.4} < {limit:.4}"));
        }
        self
    }

    pub fn within(&mut self, key: &str, value: f64, range: [f64; 2]) -> &mut Self {
        self.values.insert(key.into(), value);
        self.tolerances.insert(format!("{key}.min"), range[0]);
        self.tolerances.insert(format!("{key}.max"), range[1]);
        if !(value >= range[0] && value <= range[1]) {
            self.fail(format!("{key} = {value:.4} outside [{}, {}]", range[0], range[1]));
        }
        self
    }

    pub fn record(&mut self, key: &str, value: f64) -> &mut Self {
        self.values.insert(key.into(), value);
        self
    }

    pub fn require(&mut self, ok: bool, what: impl Into<String>) -> &mut Self {
        if !ok {
            self.fail(what.into());
        }
        self
    }

    fn fail(&mut self, why: String) {
        self.pass = false;
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        self.detail.push_str(&why);
    }

    /// `criterion 2 (darcy rate): PASS slope.k1=2.56 ...`
    pub fn summary_line(&self) -> String {
        let vals: Vec<String> = self.values.iter().map(|(k, v)| format!("{k}={v:.4e}")).collect();
        let mut line = format!(
            "criterion {} ({}): {} {}",
            self.id,
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            vals.join(" ")
        );
        if !self.detail.is_empty() {
            line.push_str(&format!(" [{}]", self.detail));
        }
        line
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: u32,
    pub experiment: String,
    pub seed: u64,
    pub pass: bool,
    pub criteria: Vec<CriterionResult>,
    pub slopes: BTreeMap<String, f64>,
}

/// What an experiment hands back before anything is written.
#[derive(Debug, Default)]
pub struct Outcome {
    pub criteria: Vec<CriterionResult>,
    pub slopes: BTreeMap<String, f64>,
    pub tables: Vec<Table>,
    pub timings: BTreeMap<String, f64>,
    /// Files the experiment wrote itself.
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn write(self, config: &ExperimentConfig, out: &Path) -> Result<RunOutput, HarnessError> {
        let mut files = self.files;
        for t in &self.tables {
            files.push(t.write(out)?);
        }
        let report = Report {
            version: REPORT_VERSION,
            experiment: config.experiment.kind().to_string(),
            seed: config.seed,
            pass: self.criteria.iter().all(|c| c.pass),
            criteria: self.criteria,
            slopes: self.slopes,
        };
        let summary = out.join("summary.json");
        write_json(&summary, &report)?;
        files.push(summary);
        let timings = out.join("timings.json");
        write_json(&timings, &self.timings)?;
        files.push(timings);
        Ok(RunOutput { report, files })
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}
