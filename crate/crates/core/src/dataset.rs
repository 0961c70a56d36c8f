//! GLUE-style TSV splits in the SNLI schema.
//!
//! Files are UTF-8, tab separated, newline terminated, with one header row.
//! There is no quoting convention, so fields containing tabs or newlines are
//! rejected on write.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gold label marker SNLI uses when annotators reached no consensus.
pub const NO_CONSENSUS: &str = "-";

/// NLI label. The declaration order is the tie-break order for argmax.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Entailment,
    Contradiction,
    Neutral,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Entailment, Label::Contradiction, Label::Neutral];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Label> {
        Label::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Entailment => "entailment",
            Label::Contradiction => "contradiction",
            Label::Neutral => "neutral",
        }
    }

    /// Index of the largest entry; ties go to the earliest label.
    pub fn argmax(probs: &[f64; 3]) -> Label {
        let mut best = 0;
        for i in 1..3 {
            if probs[i] > probs[best] {
                best = i;
            }
        }
        Label::ALL[best]
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "entailment" => Ok(Label::Entailment),
            "contradiction" => Ok(Label::Contradiction),
            "neutral" => Ok(Label::Neutral),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub guid: String,
    pub sentence1: String,
    pub sentence2: String,
    pub gold_label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitKind {
    #[default]
    Train,
    Dev,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetSplit {
    pub kind: SplitKind,
    pub samples: Vec<Sample>,
}

impl DatasetSplit {
    pub fn new(kind: SplitKind, samples: Vec<Sample>) -> Self {
        Self { kind, samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn guids(&self) -> impl Iterator<Item = &str> {
        self.samples.iter().map(|s| s.guid.as_str())
    }
}

/// Column names for the fields of a [`Sample`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnSchema {
    pub sentence1: String,
    pub sentence2: String,
    pub gold_label: String,
    /// When `None`, guids are synthesized from the kept-row index.
    pub guid: Option<String>,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        Self {
            sentence1: "sentence1".into(),
            sentence2: "sentence2".into(),
            gold_label: "gold_label".into(),
            guid: Some("pairID".into()),
        }
    }
}

impl ColumnSchema {
    pub fn without_guid() -> Self {
        Self {
            guid: None,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedSplit {
    pub split: DatasetSplit,
    /// Rows dropped because of the no-consensus marker or an empty sentence.
    pub skipped: usize,
}

impl ParsedSplit {
    pub fn rows_in(&self) -> usize {
        self.split.len() + self.skipped
    }
}

fn column_index(header: &[&str], name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| *h == name)
        .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))
}

pub fn parse_tsv<R: Read>(input: R, schema: &ColumnSchema, kind: SplitKind) -> Result<ParsedSplit> {
    let mut lines = BufReader::new(input).lines();
    let header_line = match lines.next() {
        Some(line) => line?,
        None => return Err(Error::Parse { line: 1, message: "missing header row".into() }),
    };
    let header_line = header_line.strip_suffix('\r').unwrap_or(&header_line);
    let header: Vec<&str> = header_line.split('\t').collect();
    let s1 = column_index(&header, &schema.sentence1)?;
    let s2 = column_index(&header, &schema.sentence2)?;
    let gold = column_index(&header, &schema.gold_label)?;
    let guid_col = schema.guid.as_deref().map(|g| column_index(&header, g)).transpose()?;
    let width = header.len();

    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    let mut skipped = 0;
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != width {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {width} columns, found {}", fields.len()),
            });
        }
        if fields[gold] == NO_CONSENSUS
            || fields[s1].trim().is_empty()
            || fields[s2].trim().is_empty()
        {
            skipped += 1;
            continue;
        }
        let gold_label = fields[gold]
            .parse::<Label>()
            .map_err(|message| Error::Parse { line: line_no, message })?;
        let guid = match guid_col {
            Some(c) => fields[c].to_string(),
            None => samples.len().to_string(),
        };
        if !seen.insert(guid.clone()) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("duplicate guid `{guid}`"),
            });
        }
        samples.push(Sample {
            guid,
            sentence1: fields[s1].to_string(),
            sentence2: fields[s2].to_string(),
            gold_label,
        });
    }
    Ok(ParsedSplit {
        split: DatasetSplit::new(kind, samples),
        skipped,
    })
}

pub fn read_tsv(path: &Path, schema: &ColumnSchema, kind: SplitKind) -> Result<ParsedSplit> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_tsv(file, schema, kind).map_err(|e| match e {
        Error::RawIo(source) => Error::io(path, source),
        other => other,
    })
}

fn check_field(guid: &str, name: &str, value: &str) -> Result<()> {
    if value.contains(['\t', '\n', '\r']) {
        return Err(Error::Serialize {
            guid: guid.to_string(),
            message: format!("{name} contains a tab or newline"),
        });
    }
    Ok(())
}

/// Writes `split` with the default SNLI column names.
pub fn write_tsv<W: Write>(split: &DatasetSplit, out: W) -> Result<()> {
    write_tsv_with(split, &ColumnSchema::default(), out)
}

pub fn write_tsv_with<W: Write>(split: &DatasetSplit, schema: &ColumnSchema, mut out: W) -> Result<()> {
    let mut seen = HashSet::new();
    for s in &split.samples {
        check_field(&s.guid, "guid", &s.guid)?;
        check_field(&s.guid, "sentence1", &s.sentence1)?;
        check_field(&s.guid, "sentence2", &s.sentence2)?;
        if s.sentence1.trim().is_empty() || s.sentence2.trim().is_empty() {
            return Err(Error::Serialize {
                guid: s.guid.clone(),
                message: "empty sentence".into(),
            });
        }
        if !seen.insert(s.guid.as_str()) {
            return Err(Error::Serialize {
                guid: s.guid.clone(),
                message: "duplicate guid".into(),
            });
        }
    }

    let mut buf = String::new();
    buf.push_str(&schema.sentence1);
    buf.push('\t');
    buf.push_str(&schema.sentence2);
    buf.push('\t');
    buf.push_str(&schema.gold_label);
    if let Some(g) = &schema.guid {
        buf.push('\t');
        buf.push_str(g);
    }
    buf.push('\n');
    out.write_all(buf.as_bytes())?;
    for s in &split.samples {
        buf.clear();
        buf.push_str(&s.sentence1);
        buf.push('\t');
        buf.push_str(&s.sentence2);
        buf.push('\t');
        buf.push_str(s.gold_label.as_str());
        if schema.guid.is_some() {
            buf.push('\t');
            buf.push_str(&s.guid);
        }
        buf.push('\n');
        out.write_all(buf.as_bytes())?;
    }
    Ok(())
}

pub fn to_tsv_bytes(split: &DatasetSplit) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write_tsv(split, &mut out)?;
    Ok(out)
}

pub fn save_tsv(split: &DatasetSplit, path: &Path) -> Result<()> {
    let bytes = to_tsv_bytes(split)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
