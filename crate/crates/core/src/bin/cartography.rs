use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cartography::datamap::{render_map, MapStyle};
use cartography::dataset::{self, ColumnSchema, SplitKind};
use cartography::dynamics::{compute_dynamics, load_dynamics, save_dynamics, validate_completeness};
use cartography::error::Error;
use cartography::harness::{self, emit_inspect, emit_table, inspect_hard, ExperimentConfig, TableFormat};
use cartography::ingest::{ingest_file, LogWriter};
use cartography::subset::{self, materialize, recipe, select, SubsetSpec, RECIPE_NAMES};
use cartography::synth::{self, SynthConfig};
use cartography::trainer::{checkpoint, train, TrainConfig};

#[derive(Parser)]
#[command(name = "cartography", version, about = "Training dynamics, data maps and subset selection for NLI data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Columns {
    /// Synthesize guids from the row index instead of reading a guid column.
    #[arg(long)]
    row_index_guids: bool,
    /// Column holding the sample id.
    #[arg(long, default_value = "pairID")]
    guid_column: String,
}

impl Columns {
    fn schema(&self) -> ColumnSchema {
        ColumnSchema {
            guid: (!self.row_index_guids).then(|| self.guid_column.clone()),
            ..ColumnSchema::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Preliminary training run: writes the epoch log, the model checkpoint
    /// and the train split that was used.
    Train {
        #[arg(long)]
        train: PathBuf,
        #[arg(long, default_value_t = 6)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Seeded uniform subsample size.
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long, default_value_t = 0.1)]
        learning_rate: f64,
        #[arg(long, default_value_t = 64)]
        batch_size: usize,
        #[arg(long, default_value_t = 1 << 18)]
        hash_dim: usize,
        #[arg(long, default_value_t = 1e-6)]
        l2: f64,
        #[command(flatten)]
        columns: Columns,
    },
    /// Ingest an epoch log and write the dynamics TSV.
    Dynamics {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a data map as SVG.
    Map {
        #[arg(long)]
        dynamics: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 800)]
        width: u32,
        #[arg(long, default_value_t = 600)]
        height: u32,
    },
    /// Build one subset from a named recipe, or `custom` with `--spec`.
    Filter {
        #[arg(long)]
        dynamics: PathBuf,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        recipe: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// TOML subset spec, required with `--recipe custom`.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[command(flatten)]
        columns: Columns,
    },
    /// Run the full pipeline from a TOML config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
    /// List the k hardest-to-learn samples.
    Inspect {
        #[arg(long)]
        dynamics: PathBuf,
        #[arg(long)]
        train: PathBuf,
        #[arg(short = 'k')]
        k: usize,
        #[command(flatten)]
        columns: Columns,
    },
    /// Parse an epoch log and print a summary.
    Ingest {
        #[arg(long)]
        log: PathBuf,
        /// Also check that every guid has one record per epoch.
        #[arg(long)]
        validate: bool,
    },
    /// Write a synthetic SNLI-style corpus (train/dev/test TSV).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20_000)]
        train: usize,
        #[arg(long, default_value_t = 5_000)]
        dev: usize,
        #[arg(long, default_value_t = 5_000)]
        test: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Failure {
    Usage(String),
    Tool(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Tool(e)
    }
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Tool(Error::Io { path: dir.into(), source: e }))
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Train { train: path, epochs, seed, out, cap, learning_rate, batch_size, hash_dim, l2, columns } => {
            let config = TrainConfig { epochs, seed, learning_rate, batch_size, hash_dim, l2, ..TrainConfig::default() };
            config.validate()?;
            let parsed = dataset::read_tsv(&path, &columns.schema(), SplitKind::Train)?;
            let split = match cap {
                Some(k) => harness::cap_split(&parsed.split, k, seed)?,
                None => parsed.split,
            };
            create_dir(&out)?;
            dataset::save_tsv(&split, &out.join("train.tsv"))?;
            let log_path = out.join("epoch_log.jsonl");
            let file = fs::File::create(&log_path).map_err(|e| Error::Io { path: log_path.clone(), source: e })?;
            let mut sink = LogWriter::new(BufWriter::new(file));
            let model = train(&split, &config, &mut sink)?;
            sink.into_inner().flush().map_err(Error::from)?;
            checkpoint::save(&model, &out.join("model.ckpt"))?;
            println!(
                "trained on {} samples ({} skipped rows) for {epochs} epochs; wrote {}",
                split.len(),
                parsed.skipped,
                out.display()
            );
        }
        Command::Dynamics { log, out } => {
            let (records, summary) = ingest_file(&log)?;
            let dynamics = compute_dynamics(&records)?;
            save_dynamics(&dynamics, &out)?;
            println!("{} guids, {} records -> {}", summary.distinct_guids, summary.lines, out.display());
        }
        Command::Map { dynamics, out, width, height } => {
            let dynamics = load_dynamics(&dynamics)?;
            let epochs = dynamics.first().map_or(6, |d| d.epochs);
            let style = MapStyle { width_px: width, height_px: height, ..MapStyle::for_epochs(epochs) };
            let svg = render_map(&dynamics, &style)?;
            fs::write(&out, svg).map_err(|e| Error::Io { path: out.clone(), source: e })?;
        }
        Command::Filter { dynamics, train: train_path, recipe: name, out, seed, spec, columns } => {
            let spec: SubsetSpec = match (name.as_str(), spec) {
                ("custom", Some(file)) => SubsetSpec::load(&file)?,
                ("custom", None) => return Err(Failure::Usage("--recipe custom needs --spec FILE".into())),
                (_, Some(_)) => return Err(Failure::Usage("--spec is only valid with --recipe custom".into())),
                (other, None) => recipe(other, seed).ok_or_else(|| {
                    Failure::Usage(format!("unknown recipe `{other}`; expected one of {} or custom", RECIPE_NAMES.join(", ")))
                })?,
            };
            let dynamics = load_dynamics(&dynamics)?;
            let split = dataset::read_tsv(&train_path, &columns.schema(), SplitKind::Train)?.split;
            let selection = select(&spec, &dynamics, seed)?;
            let subset = materialize(selection.guids(), &split, spec.shuffle_seed)?;
            create_dir(&out)?;
            dataset::save_tsv(&subset, &out.join("train.tsv"))?;
            let manifest_path = out.join("manifest.tsv");
            let mut manifest = Vec::new();
            subset::write_manifest(&selection, &mut manifest)?;
            fs::write(&manifest_path, manifest).map_err(|e| Error::Io { path: manifest_path, source: e })?;
            println!("{}: {} of {} samples", spec.name, subset.len(), split.len());
        }
        Command::Experiment { config } => {
            let config = ExperimentConfig::load(&config)?;
            let outcome = harness::run_experiment(&config)?;
            print!("{}", emit_table(&outcome.table, TableFormat::Markdown));
        }
        Command::Inspect { dynamics, train: train_path, k, columns } => {
            let dynamics = load_dynamics(&dynamics)?;
            let split = dataset::read_tsv(&train_path, &columns.schema(), SplitKind::Train)?.split;
            print!("{}", emit_inspect(&inspect_hard(&dynamics, &split, k)?));
        }
        Command::Ingest { log, validate } => {
            let (records, summary) = ingest_file(&log)?;
            let range = summary
                .epoch_range
                .map_or_else(|| "none".to_string(), |(lo, hi)| format!("{lo}..={hi}"));
            println!("lines: {}\nguids: {}\nepochs: {range}", summary.lines, summary.distinct_guids);
            if validate {
                let epochs = validate_completeness(&records)?;
                println!("complete: {epochs} epochs per guid");
            }
        }
        Command::Synth { out, train: n_train, dev, test, seed } => {
            let corpus = synth::generate(&SynthConfig { train: n_train, dev, test, seed, ..SynthConfig::default() });
            create_dir(&out)?;
            for (name, split) in [("train.tsv", &corpus.train), ("dev.tsv", &corpus.dev), ("test.tsv", &corpus.test)] {
                dataset::save_tsv(split, &out.join(name))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Tool(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
