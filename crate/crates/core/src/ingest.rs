//! Line-delimited epoch logs produced outside the toolkit.
//!
//! One JSON object per line with keys `guid` (string), `epoch` (integer),
//! `probs` (three numbers ordered entailment, contradiction, neutral) and
//! `gold` (a label name). Other keys are ignored. The trainer's own epoch
//! log uses the same format.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::trainer::{EpochRecord, RecordSink};

/// Allowed distance of a logged probability vector's sum from one.
pub const SUM_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Deserialize)]
struct LogLine {
    guid: String,
    epoch: usize,
    probs: Vec<f64>,
    gold: String,
}

#[derive(Serialize)]
struct LogLineOut<'a> {
    guid: &'a str,
    epoch: usize,
    probs: &'a [f64; 3],
    gold: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestSummary {
    pub lines: usize,
    pub distinct_guids: usize,
    pub epoch_range: Option<(usize, usize)>,
}

pub fn ingest<R: Read>(input: R) -> Result<(Vec<EpochRecord>, IngestSummary)> {
    let mut records = Vec::new();
    let mut guids = BTreeSet::new();
    let mut range: Option<(usize, usize)> = None;
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: LogLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let gold: Label = parsed
            .gold
            .parse()
            .map_err(|message| Error::Parse { line: line_no, message })?;
        let probs: [f64; 3] = parsed.probs.as_slice().try_into().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("expected 3 probabilities, found {}", parsed.probs.len()),
        })?;
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Data(format!(
                "line {line_no}: probability outside [0, 1] for guid {} epoch {}",
                parsed.guid, parsed.epoch
            )));
        }
        let sum = probs[0] + probs[1] + probs[2];
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Data(format!(
                "line {line_no}: probabilities for guid {} epoch {} sum to {sum}, outside tolerance {SUM_TOLERANCE}",
                parsed.guid, parsed.epoch
            )));
        }
        let probs = [probs[0] / sum, probs[1] / sum, probs[2] / sum];
        range = Some(match range {
            None => (parsed.epoch, parsed.epoch),
            Some((lo, hi)) => (lo.min(parsed.epoch), hi.max(parsed.epoch)),
        });
        guids.insert(parsed.guid.clone());
        records.push(EpochRecord::new(parsed.guid, parsed.epoch, probs, gold));
    }
    let summary = IngestSummary {
        lines: records.len(),
        distinct_guids: guids.len(),
        epoch_range: range,
    };
    Ok((records, summary))
}

pub fn ingest_file(path: &Path) -> Result<(Vec<EpochRecord>, IngestSummary)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest(file)
}

pub fn write_log_line<W: Write>(record: &EpochRecord, mut out: W) -> Result<()> {
    let line = serde_json::to_string(&LogLineOut {
        guid: &record.guid,
        epoch: record.epoch,
        probs: &record.probs,
        gold: record.gold.as_str(),
    })
    .map_err(|e| Error::Data(e.to_string()))?;
    out.write_all(line.as_bytes())?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_log<W: Write>(records: &[EpochRecord], mut out: W) -> Result<()> {
    for r in records {
        write_log_line(r, &mut out)?;
    }
    Ok(())
}

/// Record sink that streams each record as a log line.
pub struct LogWriter<W: Write> {
    out: W,
}

impl<W: Write> LogWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> RecordSink for LogWriter<W> {
    fn accept(&mut self, record: EpochRecord) -> Result<()> {
        write_log_line(&record, &mut self.out)
    }
}
