use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// One entry in a completeness report over epoch records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Offense {
    Missing { guid: String, epoch: usize },
    Duplicate { guid: String, epoch: usize },
    InconsistentGold { guid: String },
}

impl fmt::Display for Offense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Offense::Missing { guid, epoch } => write!(f, "({guid}, {epoch}) missing"),
            Offense::Duplicate { guid, epoch } => write!(f, "({guid}, {epoch}) duplicated"),
            Offense::InconsistentGold { guid } => write!(f, "{guid} has inconsistent gold labels"),
        }
    }
}

/// Itemized failure of a completeness check. Holds at most the first 20
/// offenders; `total` counts all of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletenessReport {
    pub offenses: Vec<Offense>,
    pub total: usize,
}

impl CompletenessReport {
    pub const MAX_ITEMS: usize = 20;

    pub fn first_guid(&self) -> Option<&str> {
        self.offenses.first().map(|o| match o {
            Offense::Missing { guid, .. }
            | Offense::Duplicate { guid, .. }
            | Offense::InconsistentGold { guid } => guid.as_str(),
        })
    }
}

impl fmt::Display for CompletenessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} offender(s)", self.total)?;
        for o in &self.offenses {
            write!(f, "; {o}")?;
        }
        if self.total > self.offenses.len() {
            write!(f, "; ...")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("cannot serialize sample {guid}: {message}")]
    Serialize { guid: String, message: String },

    #[error("incomplete epoch records: {0}")]
    Completeness(CompletenessReport),

    #[error("data error: {0}")]
    Data(String),

    #[error("selection error: component {component} ({category}) short by {shortfall} sample(s)")]
    Selection {
        component: usize,
        category: String,
        shortfall: usize,
    },

    #[error("training diverged: non-finite loss at epoch {epoch}, batch {batch}")]
    Training { epoch: usize, batch: usize },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("experiment stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    RawIo(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code used by the command-line tool: 2 for bad input
    /// data, 3 for failures inside the toolkit.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Training { .. } | Error::RawIo(_) => 3,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
