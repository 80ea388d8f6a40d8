//! Canonical trial CSV.
//!
//! ```text
//! dataset_id,task_id,group_id,subject_id,social,truth,initial_estimate,revised_estimate
//! ```
//!
//! One row per subject. Rows sharing `(dataset_id, task_id, group_id)` form a
//! trial. Subjects with a nonpositive initial or revised estimate are dropped.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRIAL_HEADER: [&str; 8] = [
    "dataset_id",
    "task_id",
    "group_id",
    "subject_id",
    "social",
    "truth",
    "initial_estimate",
    "revised_estimate",
];

/// One group answering one task.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub dataset_id: String,
    pub task_id: String,
    pub group_id: String,
    pub social: bool,
    pub truth: f64,
    pub initial_estimates: Vec<f64>,
    pub revised_estimates: Vec<f64>,
}

impl TrialRecord {
    pub fn validate(&self) -> Result<()> {
        let key = format!("{}/{}/{}", self.dataset_id, self.task_id, self.group_id);
        if self.initial_estimates.is_empty() {
            return Err(Error::EmptyInput(format!("trial {key} has no estimates")));
        }
        if self.initial_estimates.len() != self.revised_estimates.len() {
            return Err(Error::ParameterDomain(format!(
                "trial {key}: {} initial vs {} revised estimates",
                self.initial_estimates.len(),
                self.revised_estimates.len()
            )));
        }
        if !(self.truth.is_finite() && self.truth > 0.0) {
            return Err(Error::ParameterDomain(format!(
                "trial {key}: truth {} is not positive",
                self.truth
            )));
        }
        let all = self.initial_estimates.iter().chain(&self.revised_estimates);
        if let Some(bad) = all.into_iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::ParameterDomain(format!(
                "trial {key}: estimate {bad} is not positive"
            )));
        }
        Ok(())
    }

    /// Task key, unique across datasets.
    pub fn task_key(&self) -> (&str, &str) {
        (&self.dataset_id, &self.task_id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedTrials {
    pub trials: Vec<TrialRecord>,
    pub dropped_subjects: usize,
}

#[derive(Debug, Deserialize, Serialize)]
struct SubjectRow {
    dataset_id: String,
    task_id: String,
    group_id: String,
    subject_id: String,
    social: u8,
    truth: f64,
    initial_estimate: f64,
    revised_estimate: f64,
}

pub fn load_trials(path: impl AsRef<Path>) -> Result<LoadedTrials> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_trials(file)
}

/// Parses the canonical CSV from any reader. Trials keep the order of their
/// first row.
pub fn read_trials<R: Read>(reader: R) -> Result<LoadedTrials> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| parse_error(1, e))?.clone();
    if header.is_empty() {
        return Err(Error::EmptyInput("trial file has no header".into()));
    }
    if header.iter().ne(TRIAL_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `{}`, got `{}`",
                TRIAL_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut trials: Vec<TrialRecord> = Vec::new();
    let mut index: HashMap<(String, String, String), usize> = HashMap::new();
    let mut dropped = 0usize;
    let mut rows = 0usize;
    for result in rdr.records() {
        let record = result.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_error(line, e)
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row: SubjectRow = record
            .deserialize(Some(&header))
            .map_err(|e| parse_error(line, e))?;
        rows += 1;
        if row.social > 1 {
            return Err(Error::Parse {
                line,
                message: format!("social must be 0 or 1, got {}", row.social),
            });
        }
        if !(row.truth.is_finite() && row.truth > 0.0) {
            return Err(Error::Parse {
                line,
                message: format!("truth must be positive, got {}", row.truth),
            });
        }
        if !(row.initial_estimate.is_finite() && row.revised_estimate.is_finite()) {
            return Err(Error::Parse {
                line,
                message: "estimates must be finite".into(),
            });
        }
        if row.initial_estimate <= 0.0 || row.revised_estimate <= 0.0 {
            dropped += 1;
            continue;
        }
        let social = row.social == 1;
        let key = (row.dataset_id, row.task_id, row.group_id);
        let k = match index.get(&key) {
            Some(&k) => k,
            None => {
                trials.push(TrialRecord {
                    dataset_id: key.0.clone(),
                    task_id: key.1.clone(),
                    group_id: key.2.clone(),
                    social,
                    truth: row.truth,
                    initial_estimates: Vec::new(),
                    revised_estimates: Vec::new(),
                });
                index.insert(key, trials.len() - 1);
                trials.len() - 1
            }
        };
        let trial = &mut trials[k];
        if trial.social != social || trial.truth != row.truth {
            return Err(Error::Parse {
                line,
                message: format!(
                    "social/truth disagree with earlier rows of trial {}/{}/{}",
                    trial.dataset_id, trial.task_id, trial.group_id
                ),
            });
        }
        trial.initial_estimates.push(row.initial_estimate);
        trial.revised_estimates.push(row.revised_estimate);
    }
    if rows == 0 {
        return Err(Error::EmptyInput("trial file has no rows".into()));
    }
    if dropped > 0 {
        warn!("dropped {dropped} subject(s) with nonpositive estimates");
    }
    Ok(LoadedTrials {
        trials,
        dropped_subjects: dropped,
    })
}

fn parse_error(line: u64, e: csv::Error) -> Error {
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Writes trials in the canonical schema; subject ids are positions within
/// the group.
pub fn write_trials<W: Write>(trials: &[TrialRecord], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    w.write_record(TRIAL_HEADER)
        .map_err(|e| Error::Serialize(e.to_string()))?;
    for t in trials {
        for (k, (init, rev)) in t
            .initial_estimates
            .iter()
            .zip(&t.revised_estimates)
            .enumerate()
        {
            w.serialize(SubjectRow {
                dataset_id: t.dataset_id.clone(),
                task_id: t.task_id.clone(),
                group_id: t.group_id.clone(),
                subject_id: k.to_string(),
                social: t.social as u8,
                truth: t.truth,
                initial_estimate: *init,
                revised_estimate: *rev,
            })
            .map_err(|e| Error::Serialize(e.to_string()))?;
        }
    }
    w.flush().map_err(|e| Error::Serialize(e.to_string()))
}

pub fn save_trials(trials: &[TrialRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_trials(trials, &mut buf)?;
    crate::cli::write_atomic(path, &buf)
}
