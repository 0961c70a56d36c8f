use std::path::Path;

use cartography::dataset::{self, ColumnSchema, SplitKind};
use cartography::dynamics::{compute_dynamics, parse_dynamics_tsv, write_dynamics_tsv};
use cartography::ingest::{ingest, LogWriter};
use cartography::synth::{generate, SynthConfig};
use cartography::trainer::{checkpoint, train, EpochRecord, TrainConfig};

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/snli_100.tsv");

fn small_trainer(epochs: usize) -> TrainConfig {
    TrainConfig { epochs, hash_dim: 1 << 12, batch_size: 16, seed: 9, ..TrainConfig::default() }
}

#[test]
fn fixture_tsv_parse_write_is_identity() {
    let bytes = std::fs::read(FIXTURE).unwrap();
    let parsed = dataset::parse_tsv(&bytes[..], &ColumnSchema::default(), SplitKind::Train).unwrap();
    assert_eq!(parsed.split.len(), 100);
    assert_eq!(parsed.skipped, 0);
    let written = dataset::to_tsv_bytes(&parsed.split).unwrap();
    assert_eq!(written, bytes);

    let again = dataset::parse_tsv(&written[..], &ColumnSchema::default(), SplitKind::Train).unwrap();
    assert_eq!(again.split, parsed.split);
}

#[test]
fn fixture_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let split = dataset::read_tsv(Path::new(FIXTURE), &ColumnSchema::default(), SplitKind::Dev).unwrap().split;
    let path = dir.path().join("copy.tsv");
    dataset::save_tsv(&split, &path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(FIXTURE).unwrap());
}

#[test]
fn checkpoint_is_bit_identical() {
    let corpus = generate(&SynthConfig { train: 400, dev: 1, test: 1, seed: 3, ..SynthConfig::default() });
    let model = train(&corpus.train, &small_trainer(2), &mut cartography::trainer::NullSink).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    checkpoint::save(&model, &path).unwrap();
    let loaded = checkpoint::load(&path).unwrap();
    assert_eq!(loaded.hash_dim, model.hash_dim);
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&loaded.weights), bits(&model.weights));
    assert_eq!(bits(&loaded.bias), bits(&model.bias));

    let mut first = Vec::new();
    checkpoint::write_checkpoint(&loaded, &mut first).unwrap();
    assert_eq!(first, std::fs::read(&path).unwrap());
}

#[test]
fn trainer_log_ingests_to_the_same_dynamics() {
    let corpus = generate(&SynthConfig { train: 300, dev: 1, test: 1, seed: 11, ..SynthConfig::default() });
    let config = small_trainer(4);

    let mut direct: Vec<EpochRecord> = Vec::new();
    train(&corpus.train, &config, &mut direct).unwrap();
    let mut writer = LogWriter::new(Vec::new());
    train(&corpus.train, &config, &mut writer).unwrap();
    let log = writer.into_inner();

    let (ingested, summary) = ingest(&log[..]).unwrap();
    assert_eq!(summary.lines, 300 * 4);
    assert_eq!(summary.distinct_guids, 300);
    assert_eq!(summary.epoch_range, Some((0, 3)));

    let want = compute_dynamics(&direct).unwrap();
    let got = compute_dynamics(&ingested).unwrap();
    assert_eq!(want.len(), got.len());
    for (a, b) in want.iter().zip(&got) {
        assert_eq!(a.guid, b.guid);
        assert_eq!(a.epochs, b.epochs);
        assert!((a.confidence - b.confidence).abs() <= 1e-9, "{}", a.guid);
        assert!((a.variability - b.variability).abs() <= 1e-9, "{}", a.guid);
        assert!((a.correctness - b.correctness).abs() <= 1e-9, "{}", a.guid);
    }
}

#[test]
fn dynamics_tsv_round_trip_is_exact() {
    let corpus = generate(&SynthConfig { train: 200, dev: 1, test: 1, seed: 2, ..SynthConfig::default() });
    let mut records = Vec::new();
    train(&corpus.train, &small_trainer(3), &mut records).unwrap();
    let dynamics = compute_dynamics(&records).unwrap();

    let mut text = Vec::new();
    write_dynamics_tsv(&dynamics, &mut text).unwrap();
    let back = parse_dynamics_tsv(&text[..]).unwrap();
    assert_eq!(back, dynamics);

    let mut again = Vec::new();
    write_dynamics_tsv(&back, &mut again).unwrap();
    assert_eq!(again, text);
}
