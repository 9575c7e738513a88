//! Job model and trace ingestion.
//!
//! Standard Workload Format (SWF) is the canonical input. GWA traces use the
//! same leading columns (job id, submit, wait, runtime, allocated processors,
//! CPU time, used memory, requested processors, requested time, requested
//! memory, status), so they are read through a column profile onto the same
//! [`Job`] type rather than a separate parser.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JobState {
    Queued,
    Running,
    Completed,
}

impl JobState {
    /// Returns the successor state, or `None` for a completed job.
    pub fn next(self) -> Option<JobState> {
        match self {
            JobState::Queued => Some(JobState::Running),
            JobState::Running => Some(JobState::Completed),
            JobState::Completed => None,
        }
    }

    pub fn can_become(self, to: JobState) -> bool {
        self.next() == Some(to)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Job {
    pub job_id: String,
    pub submit_time: SimTime,
    pub required_cores: u32,
    /// Seconds the job really runs; drives completion events.
    pub actual_runtime: u64,
    /// User estimate; only schedulers look at it.
    pub requested_runtime: u64,
    /// Kilobytes, 0 when unspecified.
    pub required_memory: u64,
    pub state: JobState,
    /// Wait time recorded in the source trace, kept for comparison output.
    pub recorded_wait: Option<u64>,
}

impl Job {
    pub fn new(
        job_id: impl Into<String>,
        submit_time: u64,
        required_cores: u32,
        actual_runtime: u64,
        requested_runtime: u64,
    ) -> Self {
        Job {
            job_id: job_id.into(),
            submit_time: SimTime(submit_time),
            required_cores,
            actual_runtime,
            requested_runtime,
            required_memory: 0,
            state: JobState::Queued,
            recorded_wait: None,
        }
    }

    pub fn with_memory(mut self, kb: u64) -> Self {
        self.required_memory = kb;
        self
    }

    /// Renders the job as an 18-field SWF line. Fields the model does not
    /// carry are written as -1.
    pub fn to_swf_line(&self) -> String {
        let wait = self.recorded_wait.map_or(-1, |w| w as i64);
        let mem = if self.required_memory == 0 { -1 } else { self.required_memory as i64 };
        format!(
            "{} {} {} {} {} -1 -1 {} {} {} 1 -1 -1 -1 -1 -1 -1 -1",
            self.job_id,
            self.submit_time,
            wait,
            self.actual_runtime,
            self.required_cores,
            self.required_cores,
            self.requested_runtime,
            mem
        )
    }
}

/// Orders ids so that embedded digit runs compare numerically ("J2" < "J10").
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (mut a, mut b) = (a.as_bytes(), b.as_bytes());
    loop {
        match (a.first(), b.first()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(x), Some(y)) if x.is_ascii_digit() && y.is_ascii_digit() => {
                let da = a.iter().take_while(|c| c.is_ascii_digit()).count();
                let db = b.iter().take_while(|c| c.is_ascii_digit()).count();
                let (na, nb) = (trim_zeros(&a[..da]), trim_zeros(&b[..db]));
                let ord = na.len().cmp(&nb.len()).then_with(|| na.cmp(nb)).then(da.cmp(&db));
                if ord != Ordering::Equal {
                    return ord;
                }
                a = &a[da..];
                b = &b[db..];
            }
            (Some(x), Some(y)) => {
                if x != y {
                    return x.cmp(y);
                }
                a = &a[1..];
                b = &b[1..];
            }
        }
    }
}

fn trim_zeros(digits: &[u8]) -> &[u8] {
    let skip = digits.iter().take_while(|&&c| c == b'0').count();
    &digits[skip..]
}

/// Arrival order: submit time, then natural id order.
pub fn arrival_cmp(a: &Job, b: &Job) -> Ordering {
    a.submit_time
        .cmp(&b.submit_time)
        .then_with(|| natural_cmp(&a.job_id, &b.job_id))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    Swf,
    Gwa,
}

impl TraceFormat {
    fn min_fields(self) -> usize {
        match self {
            TraceFormat::Swf => 18,
            TraceFormat::Gwa => 11,
        }
    }

    fn is_comment(self, line: &str) -> bool {
        match self {
            TraceFormat::Swf => line.starts_with(';'),
            TraceFormat::Gwa => line.starts_with('#') || line.starts_with(';'),
        }
    }
}

impl FromStr for TraceFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "swf" => Ok(TraceFormat::Swf),
            "gwa" | "gwf" => Ok(TraceFormat::Gwa),
            other => Err(format!("unknown trace format '{other}' (expected swf or gwa)")),
        }
    }
}

impl fmt::Display for TraceFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraceFormat::Swf => "swf",
            TraceFormat::Gwa => "gwa",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParsedLine {
    /// Blank line or comment without a `Key: Value` directive.
    Comment,
    Header { key: String, value: String },
    /// `rounded` is set when a fractional field was truncated to whole seconds.
    Job { job: Job, rounded: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct Malformed(pub String);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{} malformed line(s); first: {}", .0.len(), .0[0])]
    Malformed(Vec<LineError>),
    #[error("duplicate job id '{0}'")]
    DuplicateId(String),
    #[error("invalid synthetic job #{index}: {reason}")]
    InvalidSpec { index: usize, reason: String },
}

pub fn parse_swf_line(line: &str) -> Result<ParsedLine, Malformed> {
    parse_trace_line(line, TraceFormat::Swf)
}

pub fn parse_trace_line(line: &str, format: TraceFormat) -> Result<ParsedLine, Malformed> {
    let trimmed = line.trim();
    if trimmed.is_empty() {
        return Ok(ParsedLine::Comment);
    }
    if format.is_comment(trimmed) {
        let body = trimmed[1..].trim();
        if let Some((key, value)) = body.split_once(':') {
            let key = key.trim();
            if !key.is_empty() && !key.contains(char::is_whitespace) {
                return Ok(ParsedLine::Header {
                    key: key.to_string(),
                    value: value.trim().to_string(),
                });
            }
        }
        return Ok(ParsedLine::Comment);
    }

    let fields: Vec<&str> = trimmed.split_whitespace().collect();
    if fields.len() < format.min_fields() {
        return Err(Malformed(format!(
            "expected {} fields, found {}",
            format.min_fields(),
            fields.len()
        )));
    }
    let mut rounded = false;
    let mut num = |idx: usize| -> Result<i64, Malformed> {
        let raw = fields[idx - 1];
        if let Ok(v) = raw.parse::<i64>() {
            return Ok(v);
        }
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                rounded |= v.fract() != 0.0;
                Ok(v.floor() as i64)
            }
            _ => Err(Malformed(format!("field {idx} is not numeric: '{raw}'"))),
        }
    };

    let submit = num(2)?;
    let wait = num(3)?;
    let runtime = num(4)?;
    let allocated = num(5)?;
    let requested_procs = num(8)?;
    let requested_time = num(9)?;
    let memory = num(10)?;

    let cores = if requested_procs == -1 { allocated } else { requested_procs };
    if cores < 1 {
        return Err(Malformed(format!("no usable processor count (resolved {cores})")));
    }
    if cores > u32::MAX as i64 {
        return Err(Malformed(format!("processor count {cores} out of range")));
    }
    if runtime < 0 {
        return Err(Malformed(format!("negative run time {runtime}")));
    }
    if submit < 0 {
        return Err(Malformed(format!("negative submit time {submit}")));
    }
    let requested = if requested_time == -1 { runtime } else { requested_time };
    if requested < 0 {
        return Err(Malformed(format!("negative requested time {requested}")));
    }

    let job = Job {
        job_id: fields[0].to_string(),
        submit_time: SimTime(submit as u64),
        required_cores: cores as u32,
        actual_runtime: runtime as u64,
        requested_runtime: requested as u64,
        required_memory: memory.max(0) as u64,
        state: JobState::Queued,
        recorded_wait: (wait >= 0).then_some(wait as u64),
    };
    Ok(ParsedLine::Job { job, rounded })
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Workload {
    pub jobs: Vec<Job>,
    pub source: String,
    /// Machine size from the trace header, 0 when the trace does not say.
    pub machine_cores: u32,
    /// Count of fractional fields truncated to whole seconds.
    pub rounded_fields: usize,
}

impl Workload {
    /// Sorts jobs into arrival order and rejects duplicate ids.
    pub fn from_jobs(
        mut jobs: Vec<Job>,
        source: impl Into<String>,
        machine_cores: u32,
    ) -> Result<Self, WorkloadError> {
        let mut seen = HashSet::with_capacity(jobs.len());
        for job in &jobs {
            if !seen.insert(job.job_id.as_str()) {
                return Err(WorkloadError::DuplicateId(job.job_id.clone()));
            }
        }
        drop(seen);
        jobs.sort_by(arrival_cmp);
        Ok(Workload { jobs, source: source.into(), machine_cores, rounded_fields: 0 })
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn max_cores(&self) -> u32 {
        self.jobs.iter().map(|j| j.required_cores).max().unwrap_or(0)
    }

    pub fn to_swf(&self) -> String {
        let mut out = String::new();
        if self.machine_cores > 0 {
            out.push_str(&format!("; MaxProcs: {}\n", self.machine_cores));
        }
        for job in &self.jobs {
            out.push_str(&job.to_swf_line());
            out.push('\n');
        }
        out
    }
}

/// Parses trace text. All line errors are collected before failing.
pub fn parse_workload(
    text: &str,
    format: TraceFormat,
    source: impl Into<String>,
) -> Result<Workload, WorkloadError> {
    let mut jobs = Vec::new();
    let mut errors = Vec::new();
    let mut machine_cores = 0u32;
    let mut rounded_fields = 0usize;
    for (i, line) in text.lines().enumerate() {
        match parse_trace_line(line, format) {
            Ok(ParsedLine::Comment) => {}
            Ok(ParsedLine::Header { key, value }) => {
                if key.eq_ignore_ascii_case("MaxProcs") {
                    match value.parse::<u32>() {
                        Ok(v) => machine_cores = v,
                        Err(_) => log::warn!("line {}: ignoring unparsable MaxProcs '{value}'", i + 1),
                    }
                }
            }
            Ok(ParsedLine::Job { job, rounded }) => {
                if rounded {
                    rounded_fields += 1;
                    log::warn!("line {}: fractional time truncated to whole seconds", i + 1);
                }
                jobs.push(job);
            }
            Err(Malformed(message)) => errors.push(LineError { line: i + 1, message }),
        }
    }
    if !errors.is_empty() {
        return Err(WorkloadError::Malformed(errors));
    }
    let mut workload = Workload::from_jobs(jobs, source, machine_cores)?;
    workload.rounded_fields = rounded_fields;
    Ok(workload)
}

pub fn load_workload(path: impl AsRef<Path>, format: TraceFormat) -> Result<Workload, WorkloadError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| WorkloadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_workload(&text, format, path.display().to_string())
}

/// One synthetic job: `(submit, cores, actual_runtime, requested_runtime)`.
pub type SyntheticJob = (u64, u32, u64, u64);

/// Builds a workload with ids `J1`, `J2`, ... in the given order.
pub fn synthetic_workload(spec: &[SyntheticJob]) -> Result<Workload, WorkloadError> {
    let jobs = spec
        .iter()
        .enumerate()
        .map(|(i, &(submit, cores, runtime, requested))| {
            if cores < 1 {
                return Err(WorkloadError::InvalidSpec {
                    index: i + 1,
                    reason: "cores must be at least 1".into(),
                });
            }
            Ok(Job::new(format!("J{}", i + 1), submit, cores, runtime, requested))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Workload::from_jobs(jobs, "synthetic", 0)
}
