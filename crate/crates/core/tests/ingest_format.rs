//! Logs written the way an external exporter writes them (Python
//! `json.dumps` spacing, extra keys) and checked against hand-computed
//! dynamics.

use cartography::dataset::Label;
use cartography::dynamics::{compute_dynamics, validate_completeness};
use cartography::error::Offense;
use cartography::ingest::ingest;
use cartography::Error;

// gold probabilities per epoch:
//   a (entailment):     0.5, 0.75, 1.0
//   b (contradiction):  0.25, 0.25, 0.25
//   c (neutral):        0.0, 0.5, 0.25
const SCRIPTED: &str = r#"{"guid": "a", "epoch": 0, "probs": [0.5, 0.25, 0.25], "gold": "entailment"}
{"guid": "b", "epoch": 0, "probs": [0.5, 0.25, 0.25], "gold": "contradiction"}
{"guid": "c", "epoch": 0, "probs": [0.5, 0.5, 0.0], "gold": "neutral", "loss": 3.2}
{"guid": "a", "epoch": 1, "probs": [0.75, 0.125, 0.125], "gold": "entailment"}
{"guid": "b", "epoch": 1, "probs": [0.25, 0.25, 0.5], "gold": "contradiction"}
{"guid": "c", "epoch": 1, "probs": [0.25, 0.25, 0.5], "gold": "neutral"}

{"guid": "a", "epoch": 2, "probs": [1.0, 0.0, 0.0], "gold": "entailment"}
{"guid": "b", "epoch": 2, "probs": [0.5, 0.25, 0.25], "gold": "contradiction"}
{"guid": "c", "epoch": 2, "probs": [0.5, 0.25, 0.25], "gold": "neutral"}
"#;

#[test]
fn scripted_log_gives_hand_computed_dynamics() {
    let (records, summary) = ingest(SCRIPTED.as_bytes()).unwrap();
    assert_eq!(summary.lines, 9);
    assert_eq!(summary.distinct_guids, 3);
    assert_eq!(summary.epoch_range, Some((0, 2)));
    assert_eq!(validate_completeness(&records).unwrap(), 3);

    let d = compute_dynamics(&records).unwrap();
    assert_eq!(d.iter().map(|x| x.guid.as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);

    // a: mean 0.75, deviations (-.25, 0, .25), variance 0.125/3
    assert_eq!(d[0].confidence, 0.75);
    assert!((d[0].variability - (0.125f64 / 3.0).sqrt()).abs() < 1e-15);
    // predicted: entailment, entailment, entailment
    assert_eq!(d[0].correctness, 1.0);

    assert_eq!(d[1].confidence, 0.25);
    assert_eq!(d[1].variability, 0.0);
    // [0.25, 0.25, 0.5] ties on the first two but the max is neutral
    assert_eq!(d[1].correctness, 0.0);

    assert_eq!(d[2].confidence, 0.25);
    assert!((d[2].variability - (0.125f64 / 3.0).sqrt()).abs() < 1e-15);
    // epoch 0 ties entailment/contradiction -> entailment; epoch 1 neutral; epoch 2 entailment
    assert!((d[2].correctness - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn argmax_tie_rule_and_sum_tolerance() {
    let (r, _) = ingest(&br#"{"guid":"x","epoch":0,"probs":[0.2,0.5,0.3],"gold":"contradiction"}"#[..]).unwrap();
    assert_eq!(r[0].predicted, Label::Contradiction);

    let (r, _) = ingest(&br#"{"guid":"x","epoch":0,"probs":[0.4,0.4,0.2],"gold":"neutral"}"#[..]).unwrap();
    assert_eq!(r[0].predicted, Label::Entailment);

    let err = ingest(&br#"{"guid":"x","epoch":4,"probs":[0.4,0.4,0.4],"gold":"neutral"}"#[..]).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains('x') && msg.contains('4'), "{msg}");
}

#[test]
fn small_drift_is_renormalized() {
    let (r, _) = ingest(&br#"{"guid":"x","epoch":0,"probs":[0.33333,0.33333,0.33333],"gold":"neutral"}"#[..]).unwrap();
    let sum: f64 = r[0].probs.iter().sum();
    assert!((sum - 1.0).abs() <= 1e-12);
}

#[test]
fn malformed_lines_report_their_number() {
    let text = "{\"guid\":\"x\",\"epoch\":0,\"probs\":[1,0,0],\"gold\":\"neutral\"}\nnot json\n";
    match ingest(text.as_bytes()) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
    let arity = r#"{"guid":"x","epoch":0,"probs":[0.5,0.5],"gold":"neutral"}"#;
    assert!(matches!(ingest(arity.as_bytes()), Err(Error::Parse { line: 1, .. })));
    let label = r#"{"guid":"x","epoch":0,"probs":[0.5,0.5,0],"gold":"maybe"}"#;
    assert!(matches!(ingest(label.as_bytes()), Err(Error::Parse { line: 1, .. })));
}

#[test]
fn gaps_are_itemized() {
    let text: String = SCRIPTED.lines().filter(|l| !l.contains(r#""guid": "b", "epoch": 1"#)).map(|l| format!("{l}\n")).collect();
    let (records, _) = ingest(text.as_bytes()).unwrap();
    match validate_completeness(&records) {
        Err(Error::Completeness(report)) => {
            assert!(report.offenses.contains(&Offense::Missing { guid: "b".into(), epoch: 1 }), "{report:?}");
        }
        other => panic!("{other:?}"),
    }
}
