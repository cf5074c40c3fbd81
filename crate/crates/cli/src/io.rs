//! File plumbing: atomic outputs and failure classification.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use datefrag::benchgen::BenchError;
use datefrag::geometry::GeometryError;
use datefrag::mdfr::MdfrError;
use datefrag::scorer::ScoreError;
use datefrag::semtok::SegmentationFailure;
use datefrag::stats::StatsError;
use datefrag::tok_adapter::TokError;

/// Exit 1 for inputs that parse but fail a check, exit 2 for unreadable
/// or malformed inputs and failed writes.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Input(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Self::Validation(_) => 1,
            Self::Input(_) => 2,
        }
    }

    /// Prefixes the message with where it happened.
    pub fn at(self, place: impl fmt::Display) -> Self {
        match self {
            Self::Validation(m) => Self::Validation(format!("{place}: {m}")),
            Self::Input(m) => Self::Input(format!("{place}: {m}")),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Validation(m) => write!(f, "validation failed: {m}"),
            Self::Input(m) => write!(f, "input error: {m}"),
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Input(e.to_string())
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::NoDateFound(_) => Self::Validation(e.to_string()),
            _ => Self::Input(e.to_string()),
        }
    }
}

impl From<TokError> for Failure {
    fn from(e: TokError) -> Self {
        match e {
            TokError::UnknownByte(_) => Self::Validation(e.to_string()),
            _ => Self::Input(e.to_string()),
        }
    }
}

impl From<MdfrError> for Failure {
    fn from(e: MdfrError) -> Self {
        match e {
            MdfrError::Schema { .. } | MdfrError::Io(_) => Self::Input(e.to_string()),
            _ => Self::Validation(e.to_string()),
        }
    }
}

impl From<ScoreError> for Failure {
    fn from(e: ScoreError) -> Self {
        match e {
            ScoreError::UnknownRecord(_) => Self::Validation(e.to_string()),
            _ => Self::Input(e.to_string()),
        }
    }
}

impl From<GeometryError> for Failure {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::Schema { .. } | GeometryError::Io(_) => Self::Input(e.to_string()),
            _ => Self::Validation(e.to_string()),
        }
    }
}

impl From<StatsError> for Failure {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::Schema { .. } | StatsError::Io(_) => Self::Input(e.to_string()),
            _ => Self::Validation(e.to_string()),
        }
    }
}

impl From<SegmentationFailure> for Failure {
    fn from(e: SegmentationFailure) -> Self {
        Self::Validation(e.to_string())
    }
}

pub fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

pub fn read_to_string(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Writes through a temporary file in the target directory, renamed
/// into place only after `body` and the flush succeed.
pub fn write_atomic<F>(path: &Path, body: F) -> CliResult<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    let err = |e: &dyn fmt::Display| Failure::Input(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| err(&e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w).map_err(|e| err(&e))?;
        w.flush().map_err(|e| err(&e))?;
    }
    tmp.persist(path).map_err(|e| err(&e.error))?;
    Ok(())
}

/// Non-empty lines with their 1-based line numbers.
pub fn read_lines(path: &Path) -> CliResult<Vec<(usize, String)>> {
    Ok(read_to_string(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.to_string()))
        .collect())
}
