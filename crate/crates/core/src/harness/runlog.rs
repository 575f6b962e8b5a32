//! Per-episode result logs and their summaries.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use super::stream::csv_error;
use crate::error::{Error, Result};

pub const RUNLOG_VERSION: &str = "v1";
const MAGIC: &str = "#gpc-runlog";
const SUMMARY_MAGIC: &str = "#gpc-summary";

/// One row per `(run, seed, episode)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub run_id: String,
    pub algorithm: String,
    pub environment: String,
    pub error_rate: f64,
    pub ablation: String,
    pub seed: u64,
    pub episode: u32,
    #[serde(rename = "return")]
    pub episode_return: f64,
    pub steps: u32,
    pub feedback_count: u32,
    /// Mean per-step probability with which the oracle was asked to advise.
    pub feedback_rate: f64,
    /// Mean learning rate over this episode's feedback events (empty if none).
    pub mean_learning_rate: Option<f64>,
    pub policy_size: usize,
    pub human_size: usize,
    pub wall_time_ms: Option<f64>,
}

pub fn write_runlog<W: Write>(mut w: W, rows: &[EpisodeRow]) -> Result<()> {
    writeln!(w, "{MAGIC} {RUNLOG_VERSION}")?;
    let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    csv.write_record(HEADER).map_err(csv_error)?;
    for row in rows {
        csv.serialize(row).map_err(csv_error)?;
    }
    csv.flush()?;
    Ok(())
}

const HEADER: [&str; 15] = [
    "run_id",
    "algorithm",
    "environment",
    "error_rate",
    "ablation",
    "seed",
    "episode",
    "return",
    "steps",
    "feedback_count",
    "feedback_rate",
    "mean_learning_rate",
    "policy_size",
    "human_size",
    "wall_time_ms",
];

fn check_magic<R: BufRead>(r: &mut R, magic: &str) -> Result<()> {
    let mut first = String::new();
    r.read_line(&mut first)?;
    let first = first.trim_end();
    if first.strip_prefix(magic).map(str::trim) == Some(RUNLOG_VERSION) {
        Ok(())
    } else {
        Err(Error::Schema { expected: format!("{magic} {RUNLOG_VERSION}"), found: first.to_string() })
    }
}

pub fn read_runlog<R: Read>(r: R) -> Result<Vec<EpisodeRow>> {
    let mut r = BufReader::new(r);
    check_magic(&mut r, MAGIC)?;
    csv::Reader::from_reader(r).deserialize().map(|row| row.map_err(csv_error)).collect()
}

/// Across-seed statistics for one run and episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub run_id: String,
    pub algorithm: String,
    pub environment: String,
    pub error_rate: f64,
    pub ablation: String,
    pub episode: u32,
    pub seeds: usize,
    pub return_mean: f64,
    pub return_std: f64,
    /// Trailing walking mean of `return_mean`.
    pub return_smoothed: f64,
    pub learning_rate_mean: Option<f64>,
    pub learning_rate_std: Option<f64>,
    pub feedback_rate_mean: f64,
    pub feedback_rate_std: f64,
    pub feedback_count_mean: f64,
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Trailing mean over `window` samples, with shorter windows at the start.
pub fn walking_mean(xs: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    (0..xs.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            let slice = &xs[lo..=i];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}

/// Aggregates a run log across seeds, one row per `(run, episode)`.
pub fn summarize(rows: &[EpisodeRow], window: usize) -> Result<Vec<SummaryRow>> {
    let mut groups: BTreeMap<(&str, u32), Vec<&EpisodeRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.run_id.as_str(), r.episode)).or_default().push(r);
    }
    let mut out: Vec<SummaryRow> = Vec::with_capacity(groups.len());
    for ((_, episode), members) in &groups {
        let first = members[0];
        let returns: Vec<f64> = members.iter().map(|r| r.episode_return).collect();
        let rates: Vec<f64> = members.iter().filter_map(|r| r.mean_learning_rate).collect();
        let fb_rates: Vec<f64> = members.iter().map(|r| r.feedback_rate).collect();
        let counts: Vec<f64> = members.iter().map(|r| f64::from(r.feedback_count)).collect();
        let (return_mean, return_std) = mean_std(&returns);
        let (lr_mean, lr_std) = mean_std(&rates);
        let (fb_mean, fb_std) = mean_std(&fb_rates);
        out.push(SummaryRow {
            run_id: first.run_id.clone(),
            algorithm: first.algorithm.clone(),
            environment: first.environment.clone(),
            error_rate: first.error_rate,
            ablation: first.ablation.clone(),
            episode: *episode,
            seeds: members.len(),
            return_mean,
            return_std,
            return_smoothed: return_mean,
            learning_rate_mean: (!rates.is_empty()).then_some(lr_mean),
            learning_rate_std: (!rates.is_empty()).then_some(lr_std),
            feedback_rate_mean: fb_mean,
            feedback_rate_std: fb_std,
            feedback_count_mean: mean_std(&counts).0,
        });
    }
    // Rows are grouped by run id and ordered by episode within each run.
    let mut start = 0;
    while start < out.len() {
        let end = start + out[start..].iter().take_while(|r| r.run_id == out[start].run_id).count();
        let means: Vec<f64> = out[start..end].iter().map(|r| r.return_mean).collect();
        for (row, smoothed) in out[start..end].iter_mut().zip(walking_mean(&means, window)) {
            row.return_smoothed = smoothed;
        }
        start = end;
    }
    Ok(out)
}

pub fn write_summary<W: Write>(mut w: W, rows: &[SummaryRow]) -> Result<()> {
    writeln!(w, "{SUMMARY_MAGIC} {RUNLOG_VERSION}")?;
    let mut csv = csv::Writer::from_writer(w);
    for row in rows {
        csv.serialize(row).map_err(csv_error)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_summary<R: Read>(r: R) -> Result<Vec<SummaryRow>> {
    let mut r = BufReader::new(r);
    check_magic(&mut r, SUMMARY_MAGIC)?;
    csv::Reader::from_reader(r).deserialize().map(|row| row.map_err(csv_error)).collect()
}
