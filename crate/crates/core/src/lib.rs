//! Training-dynamics toolkit for NLI training sets.
//!
//! Reads GLUE-style TSV splits, trains a deterministic reference classifier
//! that logs per-sample probabilities after every epoch (or ingests such
//! logs from an external trainer), turns those logs into per-sample
//! confidence, variability and correctness, draws data maps, builds
//! filtered training subsets, and runs the retrain-and-evaluate experiment
//! over the standard nine subsets.

pub mod datamap;
pub mod dataset;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod ingest;
pub mod rng;
pub mod subset;
pub mod synth;
pub mod trainer;

pub use dataset::{ColumnSchema, DatasetSplit, Label, Sample, SplitKind};
pub use dynamics::{compute_dynamics, validate_completeness, TrainingDynamics};
pub use error::{Error, Result};
pub use subset::{Category, SubsetSpec};
pub use trainer::{EpochRecord, ModelParams, TrainConfig};
