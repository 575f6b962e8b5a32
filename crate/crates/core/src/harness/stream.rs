//! Per-step record streams and their replay.
//!
//! ```text
//! #gpc-steps v1
//! #config {"learner":"gpc",...}
//! seed,episode,step,algorithm,source,state,action,...
//! 0,0,0,gpc-cs,oracle,-0.93;0.36;0.5,0.0,...
//! ```
//!
//! Vector cells are `;`-separated and printed with round-trip precision;
//! an empty cell means "absent".

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::learner::{Learner, LearnerConfig};
use crate::agent::StepRecord;
use crate::error::{Error, Result};
use crate::feedback::Feedback;

pub const STREAM_VERSION: &str = "v1";
const MAGIC: &str = "#gpc-steps";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackSource {
    Oracle,
    Human,
}

impl fmt::Display for FeedbackSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeedbackSource::Oracle => "oracle",
            FeedbackSource::Human => "human",
        })
    }
}

impl FromStr for FeedbackSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(FeedbackSource::Oracle),
            "human" => Ok(FeedbackSource::Human),
            other => Err(Error::Parse(format!("unknown feedback source '{other}'"))),
        }
    }
}

/// One logged step: where it happened plus the learner's record.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRow {
    pub seed: u64,
    pub episode: u32,
    pub algorithm: String,
    pub source: FeedbackSource,
    pub record: StepRecord,
}

#[derive(Serialize, Deserialize)]
struct RawRow {
    seed: u64,
    episode: u32,
    step: u64,
    algorithm: String,
    source: String,
    state: String,
    action: String,
    policy_std: String,
    feedback: String,
    learning_rate: String,
    corrected_action: String,
    al_signal: String,
    policy_size: usize,
    human_size: usize,
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(";")
}

fn join_opt(v: &Option<Vec<f64>>) -> String {
    v.as_deref().map(join).unwrap_or_default()
}

fn split(cell: &str) -> Result<Vec<f64>> {
    if cell.is_empty() {
        return Ok(Vec::new());
    }
    cell.split(';').map(|x| x.parse::<f64>().map_err(|e| Error::Parse(format!("bad number '{x}': {e}")))).collect()
}

fn split_opt(cell: &str) -> Result<Option<Vec<f64>>> {
    if cell.is_empty() {
        Ok(None)
    } else {
        split(cell).map(Some)
    }
}

impl From<&StepRow> for RawRow {
    fn from(r: &StepRow) -> Self {
        let rec = &r.record;
        RawRow {
            seed: r.seed,
            episode: r.episode,
            step: rec.step,
            algorithm: r.algorithm.clone(),
            source: r.source.to_string(),
            state: join(&rec.state),
            action: join(&rec.action),
            policy_std: join(&rec.policy_std),
            feedback: rec
                .feedback
                .as_ref()
                .map(|h| h.dims().iter().map(i8::to_string).collect::<Vec<_>>().join(";"))
                .unwrap_or_default(),
            learning_rate: join_opt(&rec.learning_rate),
            corrected_action: join_opt(&rec.corrected_action),
            al_signal: join_opt(&rec.al_signal),
            policy_size: rec.policy_size,
            human_size: rec.human_size,
        }
    }
}

impl TryFrom<RawRow> for StepRow {
    type Error = Error;
    fn try_from(r: RawRow) -> Result<Self> {
        let feedback = if r.feedback.is_empty() {
            None
        } else {
            let dims = r
                .feedback
                .split(';')
                .map(|x| x.parse::<i8>().map_err(|e| Error::Parse(format!("bad feedback '{x}': {e}"))))
                .collect::<Result<Vec<_>>>()?;
            Some(Feedback::new(dims)?)
        };
        Ok(StepRow {
            seed: r.seed,
            episode: r.episode,
            algorithm: r.algorithm,
            source: r.source.parse()?,
            record: StepRecord {
                step: r.step,
                state: split(&r.state)?,
                action: split(&r.action)?,
                policy_std: split(&r.policy_std)?,
                feedback,
                learning_rate: split_opt(&r.learning_rate)?,
                corrected_action: split_opt(&r.corrected_action)?,
                al_signal: split_opt(&r.al_signal)?,
                policy_size: r.policy_size,
                human_size: r.human_size,
            },
        })
    }
}

pub struct StepStreamWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> StepStreamWriter<W> {
    pub fn new(mut w: W, learner: &LearnerConfig) -> Result<Self> {
        let json = serde_json::to_string(learner).map_err(|e| Error::Parse(e.to_string()))?;
        writeln!(w, "{MAGIC} {STREAM_VERSION}")?;
        writeln!(w, "#config {json}")?;
        Ok(StepStreamWriter { inner: csv::Writer::from_writer(w) })
    }

    pub fn write(&mut self, row: &StepRow) -> Result<()> {
        self.inner.serialize(RawRow::from(row)).map_err(csv_error)
    }

    pub fn flush(&mut self) -> Result<()> {
        Ok(self.inner.flush()?)
    }

    pub fn into_inner(self) -> Result<W> {
        self.inner.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

/// A parsed stream: the learner configuration and every row.
#[derive(Clone, Debug)]
pub struct StepStream {
    pub learner: LearnerConfig,
    pub rows: Vec<StepRow>,
}

pub fn read_step_stream<R: Read>(r: R) -> Result<StepStream> {
    let mut r = BufReader::new(r);
    let mut first = String::new();
    r.read_line(&mut first)?;
    let first = first.trim_end();
    match first.strip_prefix(MAGIC).map(str::trim) {
        Some(STREAM_VERSION) => {}
        _ => {
            return Err(Error::Schema { expected: format!("{MAGIC} {STREAM_VERSION}"), found: first.to_string() });
        }
    }
    let mut second = String::new();
    r.read_line(&mut second)?;
    let json = second
        .trim_end()
        .strip_prefix("#config ")
        .ok_or_else(|| Error::Parse("step stream is missing its #config line".into()))?;
    let learner: LearnerConfig = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
    let mut rows = Vec::new();
    for raw in csv::Reader::from_reader(r).deserialize::<RawRow>() {
        rows.push(StepRow::try_from(raw.map_err(csv_error)?)?);
    }
    Ok(StepStream { learner, rows })
}

/// Outcome of re-executing a stream.
#[derive(Clone, Debug)]
pub struct Replay {
    pub learner: Learner,
    pub steps: usize,
    /// Steps whose re-executed action differs from the logged one.
    pub action_mismatches: usize,
}

/// Re-executes the learner on the logged states and feedback.
pub fn replay_stream(stream: &StepStream) -> Result<Replay> {
    let mut learner = Learner::new(&stream.learner)?;
    let mut mismatches = 0;
    for row in &stream.rows {
        let state = &row.record.state;
        let proposal = learner.propose(state)?;
        if proposal.action != row.record.action {
            mismatches += 1;
        }
        learner.apply(state, &proposal, row.record.feedback.as_ref())?;
    }
    Ok(Replay { learner, steps: stream.rows.len(), action_mismatches: mismatches })
}

/// Reads a stream and replays it; a version mismatch is a usage error.
pub fn replay_session<R: Read>(r: R) -> Result<Replay> {
    let stream = read_step_stream(r).map_err(|e| match e {
        Error::Schema { expected, found } => {
            Error::Usage(format!("step stream schema mismatch: expected '{expected}', found '{found}'"))
        }
        other => other,
    })?;
    replay_stream(&stream)
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Parse(format!("{other:?}")),
        }
    } else {
        Error::Parse(e.to_string())
    }
}
