use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::criteria::Kind;
use crate::quality::QualityReport;

pub const TRACE_VERSION: u32 = 1;

/// One optimizer iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Effective learning rate used for the step.
    pub lr: f64,
    /// Weighted sum of the sampled losses.
    pub loss: f64,
    pub ema: f64,
    /// Sampled loss per criterion, `None` when its weight was zero.
    pub losses: [Option<f64>; 9],
    pub weights: [f64; 9],
    /// Seconds since the run started.
    pub elapsed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub iteration: usize,
    pub report: QualityReport,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIterations,
    LearningRateFloor,
    /// The caller stopped the run.
    Interrupted,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub version: u32,
    pub records: Vec<IterationRecord>,
    pub snapshots: Vec<Snapshot>,
    pub stop: Option<StopReason>,
}

impl RunTrace {
    pub fn new() -> RunTrace {
        RunTrace {
            version: TRACE_VERSION,
            ..RunTrace::default()
        }
    }

    /// CSV header of [`RunTrace::to_csv`].
    pub fn csv_header() -> String {
        let mut h = String::from("iteration,lr,loss,ema");
        for k in Kind::ALL {
            let _ = write!(h, ",{k}");
        }
        for k in Kind::ALL {
            let _ = write!(h, ",w_{k}");
        }
        h
    }

    /// One row per iteration. Wall-clock times are left out so equal runs
    /// give equal files; inactive criteria have empty loss cells.
    pub fn to_csv(&self) -> String {
        let mut out = Self::csv_header();
        out.push('\n');
        for r in &self.records {
            let _ = write!(out, "{},{},{},{}", r.iteration, r.lr, r.loss, r.ema);
            for l in &r.losses {
                out.push(',');
                if let Some(v) = l {
                    let _ = write!(out, "{v}");
                }
            }
            for w in &r.weights {
                let _ = write!(out, ",{w}");
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace serializes")
    }

    pub fn from_json(text: &str) -> crate::Result<RunTrace> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }
}
