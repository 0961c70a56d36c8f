use std::collections::HashMap;
use std::fmt::Write as _;

use crate::dataset::{DatasetSplit, Label};
use crate::dynamics::{fmt_real, TrainingDynamics};
use crate::error::{Error, Result};
use crate::subset::{rank, Category};

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsRow {
    pub subset_name: String,
    pub train_size: usize,
    /// Accuracy of the subset model on its own training split after the
    /// final epoch.
    pub id_accuracy: f64,
    pub dev_accuracy: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultsTable {
    pub rows: Vec<ResultsRow>,
}

impl ResultsTable {
    pub fn row(&self, name: &str) -> Option<&ResultsRow> {
        self.rows.iter().find(|r| r.subset_name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Tsv,
    Markdown,
}

/// Four decimal places. Exact binary ties round half to even.
pub fn fmt_accuracy(v: f64) -> String {
    format!("{v:.4}")
}

pub fn emit_table(table: &ResultsTable, format: TableFormat) -> String {
    let mut out = String::new();
    match format {
        TableFormat::Tsv => {
            out.push_str("subset\ttrain_size\tid_accuracy\tdev_accuracy\ttest_accuracy\n");
            for r in &table.rows {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}",
                    r.subset_name,
                    r.train_size,
                    fmt_accuracy(r.id_accuracy),
                    fmt_accuracy(r.dev_accuracy),
                    fmt_accuracy(r.test_accuracy)
                );
            }
        }
        TableFormat::Markdown => {
            out.push_str("| Subset | Train size | Final Training Accuracy (ID) | Dev Accuracy (OOD) | Test Accuracy (OOD) |\n");
            out.push_str("|---|---:|---:|---:|---:|\n");
            for r in &table.rows {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} |",
                    r.subset_name,
                    r.train_size,
                    fmt_accuracy(r.id_accuracy),
                    fmt_accuracy(r.dev_accuracy),
                    fmt_accuracy(r.test_accuracy)
                );
            }
        }
    }
    out
}

/// One line of the hard-to-learn triage list.
#[derive(Debug, Clone, PartialEq)]
pub struct InspectRow {
    pub guid: String,
    pub sentence1: String,
    pub sentence2: String,
    pub gold_label: Label,
    pub confidence: f64,
    pub variability: f64,
    pub correctness: f64,
}

/// The `k` lowest-confidence samples, ties by ascending guid.
pub fn inspect_hard(dynamics: &[TrainingDynamics], train: &DatasetSplit, k: usize) -> Result<Vec<InspectRow>> {
    if k == 0 || k > train.len() {
        return Err(Error::Config(format!("k must be in 1..={}, got {k}", train.len())));
    }
    let by_guid: HashMap<&str, &TrainingDynamics> = dynamics.iter().map(|d| (d.guid.as_str(), d)).collect();
    let samples: HashMap<&str, usize> = train.guids().enumerate().map(|(i, g)| (g, i)).collect();
    rank(dynamics, Category::HardToLearn, 0)
        .into_iter()
        .take(k)
        .map(|guid| {
            let d = by_guid[guid.as_str()];
            let s = samples
                .get(guid.as_str())
                .map(|&i| &train.samples[i])
                .ok_or_else(|| Error::Data(format!("guid {guid} has dynamics but no train sample")))?;
            Ok(InspectRow {
                guid,
                sentence1: s.sentence1.clone(),
                sentence2: s.sentence2.clone(),
                gold_label: s.gold_label,
                confidence: d.confidence,
                variability: d.variability,
                correctness: d.correctness,
            })
        })
        .collect()
}

pub fn emit_inspect(rows: &[InspectRow]) -> String {
    let mut out = String::from("guid\tsentence1\tsentence2\tgold_label\tconfidence\tvariability\tcorrectness\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.guid,
            r.sentence1,
            r.sentence2,
            r.gold_label,
            fmt_real(r.confidence),
            fmt_real(r.variability),
            fmt_real(r.correctness)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Sample, SplitKind};

    fn table() -> ResultsTable {
        ResultsTable {
            rows: vec![
                ResultsRow { subset_name: "full".into(), train_size: 10, id_accuracy: 0.89364999, dev_accuracy: 0.03125, test_accuracy: 0.09375 },
                ResultsRow { subset_name: "easy-33".into(), train_size: 3, id_accuracy: 1.0, dev_accuracy: 0.5, test_accuracy: 0.123456 },
            ],
        }
    }

    #[test]
    fn four_decimals_half_even() {
        assert_eq!(fmt_accuracy(0.89364999), "0.8936");
        assert_eq!(fmt_accuracy(0.03125), "0.0312");
        assert_eq!(fmt_accuracy(0.09375), "0.0938");
        assert_eq!(fmt_accuracy(1.0), "1.0000");
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = ResultsTable::default();
        assert_eq!(emit_table(&t, TableFormat::Tsv).lines().count(), 1);
        assert_eq!(emit_table(&t, TableFormat::Markdown).lines().count(), 2);
    }

    #[test]
    fn markdown_and_tsv_carry_the_same_values() {
        let t = table();
        let tsv = emit_table(&t, TableFormat::Tsv);
        let md = emit_table(&t, TableFormat::Markdown);
        let tsv_rows: Vec<Vec<String>> = tsv.lines().skip(1).map(|l| l.split('\t').map(String::from).collect()).collect();
        let md_rows: Vec<Vec<String>> = md
            .lines()
            .skip(2)
            .map(|l| l.trim_matches('|').split('|').map(|c| c.trim().to_string()).collect())
            .collect();
        assert_eq!(tsv_rows, md_rows);
        assert_eq!(tsv_rows[0], ["full", "10", "0.8936", "0.0312", "0.0938"]);
    }

    fn split(n: usize) -> DatasetSplit {
        DatasetSplit::new(
            SplitKind::Train,
            (0..n)
                .map(|i| Sample {
                    guid: format!("g{i}"),
                    sentence1: format!("premise {i}"),
                    sentence2: format!("hypothesis {i}"),
                    gold_label: Label::ALL[i % 3],
                })
                .collect(),
        )
    }

    fn dyn_(guid: &str, confidence: f64) -> TrainingDynamics {
        TrainingDynamics { guid: guid.into(), confidence, variability: 0.1, correctness: 0.5, epochs: 2 }
    }

    #[test]
    fn inspect_picks_lowest_confidence() {
        let d = [dyn_("g0", 0.7), dyn_("g1", 0.05), dyn_("g2", 0.4), dyn_("g3", 0.05)];
        let rows = inspect_hard(&d, &split(4), 1).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].guid, "g1");
        assert_eq!(rows[0].sentence1, "premise 1");
        assert_eq!(rows[0].gold_label, Label::Contradiction);

        let rows = inspect_hard(&d, &split(4), 2).unwrap();
        assert_eq!(rows.iter().map(|r| r.guid.as_str()).collect::<Vec<_>>(), ["g1", "g3"]);
        assert!(inspect_hard(&d, &split(4), 5).is_err());
        assert!(inspect_hard(&d, &split(4), 0).is_err());
    }

    #[test]
    fn inspect_report_columns() {
        let d = [dyn_("g0", 0.7)];
        let text = emit_inspect(&inspect_hard(&d, &split(1), 1).unwrap());
        let header: Vec<_> = text.lines().next().unwrap().split('\t').collect();
        assert_eq!(header, ["guid", "sentence1", "sentence2", "gold_label", "confidence", "variability", "correctness"]);
    }
}
