use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smooth-step interpolation from `from` at iteration `start` to `to` at
/// `stop`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub start: usize,
    pub stop: usize,
    pub from: f64,
    pub to: f64,
}

/// `3x^2 - 2x^3`.
pub fn smooth_step(x: f64) -> f64 {
    x * x * (3.0 - 2.0 * x)
}

/// Segment weight at iteration `t`, clamped outside `[start, stop]`.
pub fn smooth_step_weight(t: usize, seg: &Segment) -> Result<f64> {
    if seg.stop <= seg.start {
        return Err(Error::Config(format!(
            "schedule segment stops at {} but starts at {}",
            seg.stop, seg.start
        )));
    }
    let x = (t as f64 - seg.start as f64) / (seg.stop - seg.start) as f64;
    Ok((seg.to - seg.from) * smooth_step(x.clamp(0.0, 1.0)) + seg.from)
}

/// Weight over iterations: `initial` until the first segment, each
/// segment's `to` as a plateau until the next one starts.
///
/// In configuration files a plain number stands for a constant schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleRepr", into = "ScheduleRepr")]
pub struct Schedule {
    initial: f64,
    segments: Vec<Segment>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ScheduleRepr {
    Constant(f64),
    Piecewise {
        #[serde(default)]
        initial: f64,
        segments: Vec<Segment>,
    },
}

impl TryFrom<ScheduleRepr> for Schedule {
    type Error = Error;

    fn try_from(r: ScheduleRepr) -> Result<Self> {
        match r {
            ScheduleRepr::Constant(w) => Schedule::new(w, Vec::new()),
            ScheduleRepr::Piecewise { initial, segments } => Schedule::new(initial, segments),
        }
    }
}

impl From<Schedule> for ScheduleRepr {
    fn from(s: Schedule) -> Self {
        if s.segments.is_empty() {
            ScheduleRepr::Constant(s.initial)
        } else {
            ScheduleRepr::Piecewise {
                initial: s.initial,
                segments: s.segments,
            }
        }
    }
}

impl Schedule {
    pub fn new(initial: f64, segments: Vec<Segment>) -> Result<Schedule> {
        let bad = |w: f64| !(w.is_finite() && w >= 0.0);
        if bad(initial) {
            return Err(Error::Config(format!(
                "schedule weight {initial} must be finite and non-negative"
            )));
        }
        for (k, seg) in segments.iter().enumerate() {
            smooth_step_weight(seg.start, seg)?;
            if bad(seg.from) || bad(seg.to) {
                return Err(Error::Config(format!(
                    "schedule segment {k} has a negative or non-finite weight"
                )));
            }
            if k > 0 && seg.start < segments[k - 1].stop {
                return Err(Error::Config(format!(
                    "schedule segment {k} overlaps or precedes the one before it"
                )));
            }
        }
        Ok(Schedule { initial, segments })
    }

    pub fn constant(w: f64) -> Result<Schedule> {
        Schedule::new(w, Vec::new())
    }

    /// Constant `from` until `start`, smooth step to `to` at `stop`, then
    /// constant.
    pub fn ramp(start: usize, stop: usize, from: f64, to: f64) -> Result<Schedule> {
        Schedule::new(from, vec![Segment { start, stop, from, to }])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }

    pub fn at(&self, t: usize) -> f64 {
        let mut w = self.initial;
        for seg in &self.segments {
            if t < seg.start {
                break;
            }
            if t <= seg.stop {
                let x = (t - seg.start) as f64 / (seg.stop - seg.start) as f64;
                return (seg.to - seg.from) * smooth_step(x) + seg.from;
            }
            w = seg.to;
        }
        w
    }

    /// True if the weight is zero at every iteration.
    pub fn is_zero(&self) -> bool {
        self.initial == 0.0 && self.segments.iter().all(|s| s.from == 0.0 && s.to == 0.0)
    }

    /// True if the weight is positive at every iteration.
    pub fn is_positive(&self) -> bool {
        self.initial > 0.0 && self.segments.iter().all(|s| s.from > 0.0 && s.to > 0.0)
    }
}
