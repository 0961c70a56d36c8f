//! End-to-end experiment: preliminary training, dynamics, the nine subsets,
//! retraining on each subset and ID/OOD evaluation.
//!
//! Output tree under `output`:
//!
//! ```text
//! train.tsv              train split actually used (after the desk-scale cap)
//! epoch_log.jsonl        preliminary run, one record per sample per epoch
//! dynamics.tsv
//! datamap.svg
//! hard_to_learn.tsv      lowest-confidence samples for manual review
//! subsets/<name>/train.tsv
//! subsets/<name>/manifest.tsv
//! results.tsv
//! results.md
//! ```
//!
//! While a run is in progress an `INCOMPLETE` file names the current stage.
//! It is removed only when every artifact has been written.

pub mod report;

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::dataset::{self, ColumnSchema, DatasetSplit, Label, SplitKind};
use crate::datamap::{render_map, MapStyle};
use crate::dynamics::{compute_dynamics, save_dynamics, TrainingDynamics};
use crate::error::{Error, Result};
use crate::ingest::write_log;
use crate::rng;
use crate::subset::{self, materialize, nine_recipes, select, SubsetSpec};
use crate::trainer::features::FeatureVector;
use crate::trainer::{featurize_split, train, ModelParams, NullSink, TrainConfig};
pub use report::{emit_inspect, emit_table, inspect_hard, InspectRow, ResultsRow, ResultsTable, TableFormat};

pub const PRELIMINARY_ROW: &str = "full-data";
pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";

fn default_inspect_k() -> usize {
    25
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub train: PathBuf,
    pub dev: PathBuf,
    pub test: PathBuf,
    pub output: PathBuf,
    #[serde(default)]
    pub subset_seed: u64,
    /// Seeded uniform subsample size applied to the train split before the
    /// preliminary run.
    #[serde(default)]
    pub desk_scale_cap: Option<usize>,
    #[serde(default = "default_inspect_k")]
    pub inspect_k: usize,
    #[serde(default)]
    pub columns: ColumnSchema,
    #[serde(default)]
    pub trainer: TrainConfig,
}

impl ExperimentConfig {
    pub fn new(train: PathBuf, dev: PathBuf, test: PathBuf, output: PathBuf) -> Self {
        Self {
            train,
            dev,
            test,
            output,
            subset_seed: 0,
            desk_scale_cap: None,
            inspect_k: default_inspect_k(),
            columns: ColumnSchema::default(),
            trainer: TrainConfig::default(),
        }
    }

    /// Parses a TOML config. Relative paths resolve against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for p in [&mut cfg.train, &mut cfg.dev, &mut cfg.test, &mut cfg.output] {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        let paths = [&self.train, &self.dev, &self.test, &self.output];
        let distinct: HashSet<_> = paths.iter().collect();
        if distinct.len() != paths.len() {
            return Err(Error::Config("train, dev, test and output paths must be distinct".into()));
        }
        if self.desk_scale_cap == Some(0) {
            return Err(Error::Config("desk_scale_cap must be positive".into()));
        }
        self.trainer.validate()
    }
}

#[derive(Debug, Clone)]
pub struct SubsetRun {
    pub spec: SubsetSpec,
    pub selection: subset::Selection,
    pub split: DatasetSplit,
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub table: ResultsTable,
    pub train: DatasetSplit,
    pub dynamics: Vec<TrainingDynamics>,
    pub subsets: Vec<SubsetRun>,
}

/// Uniform seeded subsample of `cap` samples, kept in original order.
pub fn cap_split(split: &DatasetSplit, cap: usize, seed: u64) -> Result<DatasetSplit> {
    if cap > split.len() {
        return Err(Error::Config(format!(
            "desk_scale_cap {cap} exceeds the {} available train samples",
            split.len()
        )));
    }
    if cap == split.len() {
        return Ok(split.clone());
    }
    let mut keep: Vec<usize> = rng::permutation(split.len(), rng::derive_seed_str(seed, "desk-scale-cap"))
        .into_iter()
        .take(cap)
        .collect();
    keep.sort_unstable();
    Ok(DatasetSplit::new(split.kind, keep.into_iter().map(|i| split.samples[i].clone()).collect()))
}

struct Featurized {
    features: Vec<FeatureVector>,
    golds: Vec<Label>,
}

impl Featurized {
    fn new(split: &DatasetSplit, config: &TrainConfig) -> Result<Self> {
        Ok(Self {
            features: featurize_split(split, &config.featurizer()?),
            golds: split.samples.iter().map(|s| s.gold_label).collect(),
        })
    }

    fn accuracy(&self, model: &ModelParams) -> f64 {
        let correct = self
            .features
            .iter()
            .zip(&self.golds)
            .filter(|(fv, gold)| model.predict(fv) == **gold)
            .count();
        correct as f64 / self.golds.len() as f64
    }
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn mark(out: &Path, stage: &str) -> Result<()> {
    write(&out.join(INCOMPLETE_MARKER), format!("stage: {stage}\n"))
}

fn stage<T>(out: &Path, name: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    mark(out, name).map_err(|e| e.in_stage(name))?;
    f().map_err(|e| e.in_stage(name))
}

fn check_disjoint(train: &DatasetSplit, other: &DatasetSplit, what: &str) -> Result<()> {
    let train_guids: HashSet<&str> = train.guids().collect();
    if let Some(g) = other.guids().find(|g| train_guids.contains(g)) {
        return Err(Error::Data(format!(
            "{what} guid {g} also appears in the train split; configure a guid column that is unique across splits"
        )));
    }
    Ok(())
}

fn train_and_score(
    name: &str,
    split: &DatasetSplit,
    config: &TrainConfig,
    dev: &Featurized,
    test: &Featurized,
) -> Result<ResultsRow> {
    let model = train(split, config, &mut NullSink)?;
    let own = Featurized::new(split, config)?;
    Ok(ResultsRow {
        subset_name: name.to_string(),
        train_size: split.len(),
        id_accuracy: own.accuracy(&model),
        dev_accuracy: dev.accuracy(&model),
        test_accuracy: test.accuracy(&model),
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let out = config.output.as_path();
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let (full_train, dev, test) = stage(out, "load", || {
        let train = dataset::read_tsv(&config.train, &config.columns, SplitKind::Train)?.split;
        let dev = dataset::read_tsv(&config.dev, &config.columns, SplitKind::Dev)?.split;
        let test = dataset::read_tsv(&config.test, &config.columns, SplitKind::Test)?.split;
        if train.is_empty() || dev.is_empty() || test.is_empty() {
            return Err(Error::Data("train, dev and test splits must all be non-empty".into()));
        }
        check_disjoint(&train, &dev, "dev")?;
        check_disjoint(&train, &test, "test")?;
        Ok((train, dev, test))
    })?;

    let train_split = stage(out, "cap", || {
        let split = match config.desk_scale_cap {
            Some(cap) => cap_split(&full_train, cap, config.subset_seed)?,
            None => full_train,
        };
        dataset::save_tsv(&split, &out.join("train.tsv"))?;
        Ok(split)
    })?;

    let (dev_f, test_f) = stage(out, "featurize", || {
        Ok((Featurized::new(&dev, &config.trainer)?, Featurized::new(&test, &config.trainer)?))
    })?;

    let (records, preliminary_row) = stage(out, "preliminary", || {
        let mut records = Vec::with_capacity(train_split.len() * config.trainer.epochs);
        let model = train(&train_split, &config.trainer, &mut records)?;
        let mut log = Vec::new();
        write_log(&records, &mut log)?;
        write(&out.join("epoch_log.jsonl"), log)?;
        let own = Featurized::new(&train_split, &config.trainer)?;
        let row = ResultsRow {
            subset_name: PRELIMINARY_ROW.to_string(),
            train_size: train_split.len(),
            id_accuracy: own.accuracy(&model),
            dev_accuracy: dev_f.accuracy(&model),
            test_accuracy: test_f.accuracy(&model),
        };
        Ok((records, row))
    })?;

    let dynamics = stage(out, "dynamics", || {
        let dynamics = compute_dynamics(&records)?;
        save_dynamics(&dynamics, &out.join("dynamics.tsv"))?;
        let k = config.inspect_k.min(train_split.len());
        if k > 0 {
            let rows = inspect_hard(&dynamics, &train_split, k)?;
            write(&out.join("hard_to_learn.tsv"), emit_inspect(&rows))?;
        }
        Ok(dynamics)
    })?;
    drop(records);

    stage(out, "datamap", || {
        let epochs = dynamics.first().map_or(config.trainer.epochs, |d| d.epochs);
        let svg = render_map(&dynamics, &MapStyle::for_epochs(epochs))?;
        write(&out.join("datamap.svg"), svg)
    })?;

    let subsets = stage(out, "subsets", || {
        let dir = out.join("subsets");
        let mut runs = Vec::new();
        for spec in nine_recipes(config.subset_seed) {
            let selection = select(&spec, &dynamics, config.subset_seed)?;
            let split = materialize(selection.guids(), &train_split, spec.shuffle_seed)?;
            let sub = dir.join(&spec.name);
            fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
            dataset::save_tsv(&split, &sub.join("train.tsv"))?;
            let mut manifest = Vec::new();
            subset::write_manifest(&selection, &mut manifest)?;
            write(&sub.join("manifest.tsv"), manifest)?;
            runs.push(SubsetRun { spec, selection, split });
        }
        Ok(runs)
    })?;

    let table = stage(out, "retrain", || {
        let mut rows = vec![preliminary_row];
        for run in &subsets {
            let cfg = TrainConfig {
                seed: rng::derive_seed_str(config.trainer.seed, &run.spec.name),
                ..config.trainer.clone()
            };
            rows.push(train_and_score(&run.spec.name, &run.split, &cfg, &dev_f, &test_f)?);
        }
        Ok(ResultsTable { rows })
    })?;

    stage(out, "report", || {
        write(&out.join("results.tsv"), emit_table(&table, TableFormat::Tsv))?;
        write(&out.join("results.md"), emit_table(&table, TableFormat::Markdown))
    })?;

    let marker = out.join(INCOMPLETE_MARKER);
    fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    Ok(ExperimentOutcome {
        table,
        train: train_split,
        dynamics,
        subsets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_paths_resolve_against_config_dir() {
        let cfg = ExperimentConfig::from_toml(
            "train = \"a.tsv\"\ndev = \"b.tsv\"\ntest = \"/abs/c.tsv\"\noutput = \"out\"\nsubset_seed = 4\ndesk_scale_cap = 100\n[trainer]\nepochs = 3\nhash_dim = 1024\n",
            Path::new("/base"),
        )
        .unwrap();
        assert_eq!(cfg.train, PathBuf::from("/base/a.tsv"));
        assert_eq!(cfg.test, PathBuf::from("/abs/c.tsv"));
        assert_eq!(cfg.trainer.epochs, 3);
        assert_eq!(cfg.trainer.learning_rate, 0.1);
        assert_eq!(cfg.desk_scale_cap, Some(100));
        assert_eq!(cfg.columns, ColumnSchema::default());
    }

    #[test]
    fn config_rejects_shared_paths_and_unknown_keys() {
        let same = "train = \"a\"\ndev = \"a\"\ntest = \"c\"\noutput = \"o\"\n";
        assert!(ExperimentConfig::from_toml(same, Path::new(".")).is_err());
        let unknown = "train = \"a\"\ndev = \"b\"\ntest = \"c\"\noutput = \"o\"\nbogus = 1\n";
        assert!(ExperimentConfig::from_toml(unknown, Path::new(".")).is_err());
    }

    #[test]
    fn cap_keeps_order_and_size() {
        use crate::dataset::Sample;
        let split = DatasetSplit::new(
            SplitKind::Train,
            (0..50)
                .map(|i| Sample {
                    guid: format!("{i:02}"),
                    sentence1: "p".into(),
                    sentence2: "h".into(),
                    gold_label: Label::Neutral,
                })
                .collect(),
        );
        let capped = cap_split(&split, 20, 1).unwrap();
        assert_eq!(capped.len(), 20);
        let guids: Vec<_> = capped.guids().collect();
        let mut sorted = guids.clone();
        sorted.sort();
        assert_eq!(guids, sorted);
        assert_eq!(capped, cap_split(&split, 20, 1).unwrap());
        assert!(cap_split(&split, 51, 1).is_err());
    }
}
