//! Per-sample training dynamics from epoch records.
//!
//! For a sample observed over `E` epochs with gold-label probabilities
//! `p_0..p_{E-1}`:
//!
//! - confidence is the mean of `p_e`,
//! - variability is the population standard deviation of `p_e` (divides by
//!   `E`),
//! - correctness is the fraction of epochs whose recorded prediction equals
//!   the gold label.
//!
//! Each guid's series is summed in epoch order, so results do not depend on
//! the order records arrive in.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::dataset::Label;
use crate::error::{CompletenessReport, Error, Offense, Result};
use crate::trainer::EpochRecord;

pub const TSV_HEADER: &str = "guid\tconfidence\tvariability\tcorrectness\tepochs";
/// First line of every written dynamics file. Readers skip `#` lines.
pub const CONVENTION_LINE: &str = "# variability: population std";

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingDynamics {
    pub guid: String,
    pub confidence: f64,
    pub variability: f64,
    pub correctness: f64,
    pub epochs: usize,
}

impl TrainingDynamics {
    /// Number of epochs with a correct prediction.
    pub fn correct_epochs(&self) -> usize {
        (self.correctness * self.epochs as f64).round() as usize
    }
}

struct Series<'a> {
    gold: Label,
    inconsistent: bool,
    by_epoch: BTreeMap<usize, Vec<&'a EpochRecord>>,
}

fn group(records: &[EpochRecord]) -> BTreeMap<&str, Series<'_>> {
    let mut groups: BTreeMap<&str, Series> = BTreeMap::new();
    for r in records {
        let s = groups.entry(r.guid.as_str()).or_insert_with(|| Series {
            gold: r.gold,
            inconsistent: false,
            by_epoch: BTreeMap::new(),
        });
        if s.gold != r.gold {
            s.inconsistent = true;
        }
        s.by_epoch.entry(r.epoch).or_default().push(r);
    }
    groups
}

fn completeness(groups: &BTreeMap<&str, Series<'_>>) -> Result<usize> {
    let epochs = groups
        .values()
        .filter_map(|s| s.by_epoch.keys().next_back())
        .max()
        .map(|e| e + 1)
        .ok_or_else(|| Error::Data("no epoch records".into()))?;
    let mut offenses = Vec::new();
    let mut total = 0;
    let mut note = |o: Offense| {
        total += 1;
        if offenses.len() < CompletenessReport::MAX_ITEMS {
            offenses.push(o);
        }
    };
    for (guid, s) in groups {
        if s.inconsistent {
            note(Offense::InconsistentGold { guid: guid.to_string() });
        }
        for epoch in 0..epochs {
            match s.by_epoch.get(&epoch).map_or(0, Vec::len) {
                1 => {}
                0 => note(Offense::Missing { guid: guid.to_string(), epoch }),
                _ => note(Offense::Duplicate { guid: guid.to_string(), epoch }),
            }
        }
    }
    if total == 0 {
        Ok(epochs)
    } else {
        Err(Error::Completeness(CompletenessReport { offenses, total }))
    }
}

/// Checks that every guid has exactly one record for each epoch `0..E` and a
/// single gold label, returning `E`.
pub fn validate_completeness(records: &[EpochRecord]) -> Result<usize> {
    completeness(&group(records))
}

pub fn compute_dynamics(records: &[EpochRecord]) -> Result<Vec<TrainingDynamics>> {
    let groups = group(records);
    if let Some((guid, _)) = groups.iter().find(|(_, s)| s.inconsistent) {
        return Err(Error::Data(format!("guid {guid} has inconsistent gold labels")));
    }
    let epochs = completeness(&groups)?;
    let e = epochs as f64;
    Ok(groups
        .into_iter()
        .map(|(guid, series)| {
            let records: Vec<&EpochRecord> = series.by_epoch.values().map(|v| v[0]).collect();
            let mut sum = 0.0;
            for r in &records {
                sum += r.gold_prob();
            }
            let first = records[0].gold_prob();
            let constant = records.iter().all(|r| r.gold_prob() == first);
            let mean = if constant { first } else { sum / e };
            let mut sq = 0.0;
            for r in &records {
                let d = r.gold_prob() - mean;
                sq += d * d;
            }
            let correct = records.iter().filter(|r| r.predicted == r.gold).count();
            TrainingDynamics {
                guid: guid.to_string(),
                confidence: mean,
                variability: (sq / e).sqrt().min(0.5),
                correctness: correct as f64 / e,
                epochs,
            }
        })
        .collect())
}

/// Renders a real with 17 significant digits.
pub(crate) fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_dynamics_tsv<W: Write>(dynamics: &[TrainingDynamics], mut out: W) -> Result<()> {
    let mut text = format!("{CONVENTION_LINE}\n{TSV_HEADER}\n");
    for d in dynamics {
        if d.guid.contains(['\t', '\n', '\r']) {
            return Err(Error::Serialize {
                guid: d.guid.clone(),
                message: "guid contains a tab or newline".into(),
            });
        }
        text.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            d.guid,
            fmt_real(d.confidence),
            fmt_real(d.variability),
            fmt_real(d.correctness),
            d.epochs
        ));
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

pub fn parse_dynamics_tsv<R: Read>(input: R) -> Result<Vec<TrainingDynamics>> {
    let mut out = Vec::new();
    let mut saw_header = false;
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != TSV_HEADER {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected header `{TSV_HEADER}`"),
                });
            }
            saw_header = true;
            continue;
        }
        let bad = |message: String| Error::Parse { line: line_no, message };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(bad(format!("expected 5 columns, found {}", fields.len())));
        }
        let real = |s: &str, name: &str, hi: f64| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| bad(format!("{name} `{s}` is not a number")))?;
            if !(0.0..=hi).contains(&v) {
                return Err(bad(format!("{name} {v} outside [0, {hi}]")));
            }
            Ok(v)
        };
        let epochs: usize = fields[4]
            .parse()
            .ok()
            .filter(|e| *e > 0)
            .ok_or_else(|| bad(format!("invalid epoch count `{}`", fields[4])))?;
        out.push(TrainingDynamics {
            guid: fields[0].to_string(),
            confidence: real(fields[1], "confidence", 1.0)?,
            variability: real(fields[2], "variability", 0.5)?,
            correctness: real(fields[3], "correctness", 1.0)?,
            epochs,
        });
    }
    if !saw_header {
        return Err(Error::Parse { line: 1, message: "missing header row".into() });
    }
    Ok(out)
}

pub fn save_dynamics(dynamics: &[TrainingDynamics], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_dynamics_tsv(dynamics, &mut buf)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_dynamics(path: &Path) -> Result<Vec<TrainingDynamics>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_dynamics_tsv(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(guid: &str, gold: Label, probs: &[f64], correct: &[bool]) -> Vec<EpochRecord> {
        probs
            .iter()
            .zip(correct)
            .enumerate()
            .map(|(epoch, (&p, &ok))| {
                let rest = (1.0 - p) / 2.0;
                let mut probs = [rest; 3];
                probs[gold.index()] = p;
                let other = Label::ALL.into_iter().find(|l| *l != gold).unwrap();
                EpochRecord {
                    guid: guid.into(),
                    epoch,
                    probs,
                    predicted: if ok { gold } else { other },
                    gold,
                }
            })
            .collect()
    }

    #[test]
    fn constant_series_has_zero_variability() {
        let d = compute_dynamics(&series("a", Label::Neutral, &[0.5, 0.5], &[true, true])).unwrap();
        assert_eq!(d[0].confidence, 0.5);
        assert_eq!(d[0].variability, 0.0);
    }

    #[test]
    fn two_point_series_uses_population_std() {
        let d = compute_dynamics(&series("a", Label::Neutral, &[0.0, 1.0], &[false, true])).unwrap();
        assert_eq!(d[0].confidence, 0.5);
        assert_eq!(d[0].variability, 0.5);
        assert_eq!(d[0].correctness, 0.5);
    }

    #[test]
    fn correctness_counts_recorded_predictions() {
        let ok = [true, false, true, true, false, true];
        let d = compute_dynamics(&series("a", Label::Entailment, &[0.6; 6], &ok)).unwrap();
        assert_eq!(d[0].correctness, 4.0 / 6.0);
        assert_eq!(d[0].correct_epochs(), 4);
    }

    #[test]
    fn output_sorted_by_guid() {
        let mut recs = series("b", Label::Neutral, &[0.2, 0.3], &[false, false]);
        recs.extend(series("a", Label::Neutral, &[0.2, 0.3], &[false, false]));
        let d = compute_dynamics(&recs).unwrap();
        assert_eq!(d[0].guid, "a");
        assert_eq!(d[1].guid, "b");
    }

    #[test]
    fn missing_epoch_names_guid() {
        let mut recs = series("a", Label::Neutral, &[0.2, 0.3, 0.4], &[false; 3]);
        recs.extend(series("b", Label::Neutral, &[0.2, 0.3, 0.4], &[false; 3]));
        recs.remove(4);
        match compute_dynamics(&recs) {
            Err(Error::Completeness(report)) => {
                assert_eq!(report.offenses, vec![Offense::Missing { guid: "b".into(), epoch: 1 }]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_and_inconsistent_gold() {
        let mut recs = series("a", Label::Neutral, &[0.2, 0.3], &[false; 2]);
        recs.push(recs[0].clone());
        assert!(matches!(validate_completeness(&recs), Err(Error::Completeness(_))));

        let mut recs = series("a", Label::Neutral, &[0.2, 0.3], &[false; 2]);
        recs[1].gold = Label::Entailment;
        assert!(matches!(compute_dynamics(&recs), Err(Error::Data(_))));
        match validate_completeness(&recs) {
            Err(Error::Completeness(r)) => assert_eq!(r.offenses, vec![Offense::InconsistentGold { guid: "a".into() }]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn report_is_capped_at_twenty() {
        let mut recs = Vec::new();
        for g in 0..30 {
            recs.extend(series(&format!("g{g:02}"), Label::Neutral, &[0.1, 0.2], &[false; 2]));
        }
        recs.retain(|r| !(r.epoch == 1 && r.guid != "g00"));
        recs.extend(series("zz", Label::Neutral, &[0.1, 0.2, 0.3], &[false; 3]));
        match validate_completeness(&recs) {
            Err(Error::Completeness(r)) => {
                assert_eq!(r.offenses.len(), 20);
                assert_eq!(r.total, 29 * 2 + 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tsv_round_trip_is_exact() {
        let d = vec![
            TrainingDynamics { guid: "x".into(), confidence: 0.1 + 0.2, variability: 1.0 / 3.0 / 2.0, correctness: 2.0 / 3.0, epochs: 3 },
            TrainingDynamics { guid: "y".into(), confidence: 1.0, variability: 0.0, correctness: 1.0, epochs: 3 },
        ];
        let mut buf = Vec::new();
        write_dynamics_tsv(&d, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# variability: population std\nguid\tconfidence\tvariability\tcorrectness\tepochs\n"));
        assert!(text.contains("x\t3.0000000000000004e-1\t"));
        assert_eq!(parse_dynamics_tsv(buf.as_slice()).unwrap(), d);
    }

    #[test]
    fn tsv_rejects_out_of_range() {
        let text = format!("{TSV_HEADER}\na\t1.5\t0\t0\t2\n");
        assert!(matches!(parse_dynamics_tsv(text.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    fn arb_series() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
        (2usize..9).prop_flat_map(|e| (prop::collection::vec(0.0f64..=1.0, e), prop::collection::vec(any::<bool>(), e)))
    }

    proptest! {
        #[test]
        fn bounds_and_permutation_invariance((probs, ok) in arb_series(), seed in any::<u64>()) {
            let recs = series("g", Label::Contradiction, &probs, &ok);
            let d = compute_dynamics(&recs).unwrap();
            let mut shuffled = recs.clone();
            crate::rng::shuffle(&mut shuffled, seed);
            let d2 = compute_dynamics(&shuffled).unwrap();
            prop_assert_eq!(&d, &d2);
            let d = &d[0];
            prop_assert!((0.0..=1.0).contains(&d.confidence));
            prop_assert!((0.0..=0.5).contains(&d.variability));
            let scaled = d.correctness * d.epochs as f64;
            prop_assert_eq!(scaled, scaled.round());
        }

        #[test]
        fn constant_series_law(p in 0.0f64..=1.0, e in 1usize..9) {
            let d = compute_dynamics(&series("g", Label::Neutral, &vec![p; e], &vec![true; e])).unwrap();
            prop_assert_eq!(d[0].variability, 0.0);
            prop_assert_eq!(d[0].correctness, 1.0);
        }
    }
}
