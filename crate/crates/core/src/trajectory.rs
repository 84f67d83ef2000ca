//! Trajectory data model: `(tid, x, y, z, t)` samples, discomfort reports,
//! validation, half-open window slicing and the CSV formats.

use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque object identifier. Carried through the pipeline, never interpreted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tid(Arc<str>);

impl Tid {
    pub fn new(id: impl AsRef<str>) -> Self {
        Tid(Arc::from(id.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Tid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Tid {
    fn from(s: &str) -> Self {
        Tid::new(s)
    }
}

/// One position sample in Unity Meters, timestamped in seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajPoint {
    pub tid: Tid,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub t: f64,
}

impl TrajPoint {
    pub fn new(tid: Tid, x: f64, y: f64, z: f64, t: f64) -> Self {
        TrajPoint { tid, x, y, z, t }
    }

    pub fn pos(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

pub(crate) fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Euclidean speed between two samples, in Um/s.
pub fn speed_between(p: &TrajPoint, q: &TrajPoint) -> Result<f64> {
    if !(p.t < q.t) {
        return Err(Error::NonIncreasingTime {
            earlier: p.t,
            later: q.t,
        });
    }
    Ok(distance(p.pos(), q.pos()) / (q.t - p.t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    NonFinite,
    NegativeTime,
    NonIncreasingTime,
    TidMismatch,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::NonFinite => "non-finite coordinate",
            Rule::NegativeTime => "negative t",
            Rule::NonIncreasingTime => "non-increasing t",
            Rule::TidMismatch => "tid mismatch",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Violation {
    pub index: usize,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at index {}", self.rule, self.index)
    }
}

/// Ordered samples of one moving object.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    points: Vec<TrajPoint>,
}

impl Trajectory {
    /// Wraps points without checking invariants; see [`Trajectory::validate`].
    pub fn from_points(points: Vec<TrajPoint>) -> Self {
        Trajectory { points }
    }

    /// Wraps points, rejecting any invariant violation.
    pub fn try_from_points(points: Vec<TrajPoint>) -> Result<Self> {
        let traj = Trajectory { points };
        match traj.validate() {
            Ok(()) => Ok(traj),
            Err(v) => Err(Error::invalid(format!(
                "invalid trajectory: {}",
                v.iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join("; ")
            ))),
        }
    }

    pub fn points(&self) -> &[TrajPoint] {
        &self.points
    }

    pub fn into_points(self) -> Vec<TrajPoint> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first_t(&self) -> Option<f64> {
        self.points.first().map(|p| p.t)
    }

    pub fn last_t(&self) -> Option<f64> {
        self.points.last().map(|p| p.t)
    }

    /// Checks every invariant and returns the full list of violations.
    pub fn validate(&self) -> std::result::Result<(), Vec<Violation>> {
        validate_trajectory(&self.points)
    }

    /// Points with `t0 <= t < t1`, order preserved.
    pub fn slice_window(&self, t0: f64, t1: f64) -> Result<Trajectory> {
        if !(t0 < t1) {
            return Err(Error::invalid(format!(
                "window start {t0} must precede end {t1}"
            )));
        }
        Ok(Trajectory {
            points: self
                .points
                .iter()
                .filter(|p| t0 <= p.t && p.t < t1)
                .cloned()
                .collect(),
        })
    }
}

/// Validates a point sequence against the trajectory invariants.
pub fn validate_trajectory(points: &[TrajPoint]) -> std::result::Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite() && p.t.is_finite()) {
            violations.push(Violation {
                index: i,
                rule: Rule::NonFinite,
            });
        }
        if p.t < 0.0 {
            violations.push(Violation {
                index: i,
                rule: Rule::NegativeTime,
            });
        }
        if i > 0 {
            if !(points[i - 1].t < p.t) {
                violations.push(Violation {
                    index: i,
                    rule: Rule::NonIncreasingTime,
                });
            }
            if points[0].tid != p.tid {
                violations.push(Violation {
                    index: i,
                    rule: Rule::TidMismatch,
                });
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Self-reported discomfort on the 0–10 scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscomfortReport {
    pub t: f64,
    pub score: u8,
}

impl DiscomfortReport {
    pub fn new(t: f64, score: u8) -> Result<Self> {
        if score > 10 {
            return Err(Error::invalid(format!(
                "discomfort score {score} outside 0..=10"
            )));
        }
        Ok(DiscomfortReport { t, score })
    }
}

/// One user session: the logged trajectory and its discomfort reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub user: String,
    pub trajectory: Trajectory,
    pub reports: Vec<DiscomfortReport>,
    pub sample_hz: f64,
}

impl SessionLog {
    /// Checks the trajectory, report ordering/range and that every report
    /// falls inside the logged span (one sampling interval of slack).
    pub fn validate(&self) -> Result<()> {
        self.trajectory.validate().map_err(|v| {
            Error::invalid(format!(
                "session {}: {}",
                self.user,
                v.iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join("; ")
            ))
        })?;
        if !(self.sample_hz > 0.0) {
            return Err(Error::invalid("sample_hz must be positive"));
        }
        let slack = 1.0 / self.sample_hz;
        let (first, last) = match (self.trajectory.first_t(), self.trajectory.last_t()) {
            (Some(a), Some(b)) => (a, b),
            _ if self.reports.is_empty() => return Ok(()),
            _ => return Err(Error::invalid("reports without trajectory")),
        };
        for (i, r) in self.reports.iter().enumerate() {
            if r.score > 10 {
                return Err(Error::invalid(format!(
                    "report {i}: score {} > 10",
                    r.score
                )));
            }
            if i > 0 && !(self.reports[i - 1].t < r.t) {
                return Err(Error::invalid(format!("report {i}: non-increasing t")));
            }
            if r.t < first - slack || r.t > last + slack {
                return Err(Error::invalid(format!(
                    "report {i} at t={} outside trajectory span [{first}, {last}]",
                    r.t
                )));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// CSV

pub const TRAJECTORY_HEADER: [&str; 5] = ["tid", "x", "y", "z", "t"];
pub const DISCOMFORT_HEADER: [&str; 2] = ["t", "score"];

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

pub(crate) fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    Error::Parse {
        line,
        message: err.to_string(),
    }
}

pub(crate) fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers().map_err(csv_error)?;
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                got.join(",")
            ),
        });
    }
    Ok(())
}

pub(crate) fn parse_f64(field: &str, name: &str, line: u64) -> Result<f64> {
    field.parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("column `{name}`: cannot parse `{field}` as a number"),
    })
}

/// Reads a `tid,x,y,z,t` CSV. Rows are checked for syntax only; call
/// [`Trajectory::validate`] for the ordering invariants.
pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Trajectory> {
    let mut rdr = csv_reader(input);
    check_header(&mut rdr, &TRAJECTORY_HEADER)?;
    let mut points = Vec::new();
    let mut tid: Option<Tid> = None;
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let raw_tid = &rec[0];
        let tid = match &tid {
            Some(t) if t.as_str() == raw_tid => t.clone(),
            _ => {
                let t = Tid::new(raw_tid);
                tid = Some(t.clone());
                t
            }
        };
        let x = parse_f64(&rec[1], "x", line)?;
        let y = parse_f64(&rec[2], "y", line)?;
        let z = parse_f64(&rec[3], "z", line)?;
        let t = parse_f64(&rec[4], "t", line)?;
        if !(x.is_finite() && y.is_finite() && z.is_finite() && t.is_finite()) {
            return Err(Error::Parse {
                line,
                message: "non-finite value".into(),
            });
        }
        points.push(TrajPoint::new(tid, x, y, z, t));
    }
    Ok(Trajectory::from_points(points))
}

pub fn write_trajectory_csv<W: Write>(out: W, points: &[TrajPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER)?;
    for p in points {
        w.write_record([
            p.tid.to_string(),
            p.x.to_string(),
            p.y.to_string(),
            p.z.to_string(),
            p.t.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_discomfort_csv<R: Read>(input: R) -> Result<Vec<DiscomfortReport>> {
    let mut rdr = csv_reader(input);
    check_header(&mut rdr, &DISCOMFORT_HEADER)?;
    let mut reports: Vec<DiscomfortReport> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let t = parse_f64(&rec[0], "t", line)?;
        let score: u8 = rec[1].parse().map_err(|_| Error::Parse {
            line,
            message: format!("column `score`: `{}` is not an integer in 0..=10", &rec[1]),
        })?;
        let report = DiscomfortReport::new(t, score).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        if let Some(prev) = reports.last() {
            if !(prev.t < t) {
                return Err(Error::Parse {
                    line,
                    message: format!("report time {t} does not increase"),
                });
            }
        }
        reports.push(report);
    }
    Ok(reports)
}

pub fn write_discomfort_csv<W: Write>(out: W, reports: &[DiscomfortReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DISCOMFORT_HEADER)?;
    for r in reports {
        w.write_record([r.t.to_string(), r.score.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
