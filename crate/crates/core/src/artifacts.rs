//! Line-delimited JSON artifacts exchanged between pipeline stages.
//!
//! Every file starts with a header line `{"schema":<name>,"version":<n>}`
//! followed by one record per line.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::corpus::EvidenceSentence;
use crate::events::Event;
use crate::units::DurationUnit;
use crate::voting::{Counts, Peak, TypicalDuration};

pub const SCHEMA_VERSION: u32 = 1;

pub const EVENTS_FILE: &str = "events.jsonl";
pub const EVIDENCE_FILE: &str = "evidence.jsonl";
pub const UNDER_EVIDENCED_FILE: &str = "under_evidenced.jsonl";
pub const VERDICTS_FILE: &str = "verdicts.jsonl";
pub const TYPICAL_FILE: &str = "typical.jsonl";
pub const PSEUDO_FILE: &str = "pseudo.tsv";
pub const DISTRIBUTION_FILE: &str = "distribution.csv";
pub const CONFIG_ECHO_FILE: &str = "effective_config.toml";

#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error("missing input file {}", path.display())]
    Missing { path: PathBuf },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{} line {line}: {message}", path.display())]
    Schema { path: PathBuf, line: usize, message: String },
}

/// A record type stored in a versioned JSONL artifact.
pub trait Artifact: Serialize + DeserializeOwned {
    const SCHEMA: &'static str;
}

impl Artifact for Event {
    const SCHEMA: &'static str = "events";
}

impl Artifact for EvidenceSentence {
    const SCHEMA: &'static str = "evidence";
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnderEvidencedRecord {
    pub event_id: String,
    pub matched: u64,
}

impl Artifact for UnderEvidencedRecord {
    const SCHEMA: &'static str = "under_evidenced";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerdictRecord {
    pub query_id: String,
    pub event_id: String,
    pub doc_id: String,
    pub sentence_index: usize,
    pub unit: DurationUnit,
    pub plausible: bool,
    pub score: Option<f64>,
}

impl Artifact for VerdictRecord {
    const SCHEMA: &'static str = "verdicts";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypicalRecord {
    pub event_id: String,
    pub counts: Counts,
    pub sentence_count: u32,
    pub episodic: Vec<DurationUnit>,
    pub habitual: Option<Vec<DurationUnit>>,
    /// The peaks that produced the spans, episodic first.
    pub peaks: Vec<Peak>,
}

impl TypicalRecord {
    pub fn new(t: TypicalDuration, counts: Counts, sentence_count: u32) -> Self {
        Self {
            event_id: t.event_id,
            counts,
            sentence_count,
            episodic: t.episodic,
            habitual: t.habitual,
            peaks: std::iter::once(t.episodic_peak).chain(t.habitual_peak).collect(),
        }
    }
}

impl Artifact for TypicalRecord {
    const SCHEMA: &'static str = "typical";
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    schema: String,
    version: u32,
}

fn io_error(path: &Path, source: io::Error) -> ArtifactError {
    ArtifactError::Io { path: path.to_path_buf(), source }
}

pub fn open_input(path: &Path) -> Result<File, ArtifactError> {
    File::open(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => ArtifactError::Missing { path: path.to_path_buf() },
        _ => io_error(path, e),
    })
}

pub fn write_jsonl<T: Artifact>(path: &Path, records: &[T]) -> Result<(), ArtifactError> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = BufWriter::new(file);
    let header = Header { schema: T::SCHEMA.to_string(), version: SCHEMA_VERSION };
    let write_all = |w: &mut BufWriter<File>| -> io::Result<()> {
        serde_json::to_writer(&mut *w, &header)?;
        w.write_all(b"\n")?;
        for r in records {
            serde_json::to_writer(&mut *w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    };
    write_all(&mut w).map_err(|e| io_error(path, e))
}

pub fn read_jsonl<T: Artifact>(path: &Path) -> Result<Vec<T>, ArtifactError> {
    let reader = BufReader::new(open_input(path)?);
    let schema = |line: usize, message: String| ArtifactError::Schema { path: path.to_path_buf(), line, message };
    let mut lines = reader.lines().enumerate();

    let header_line = match lines.next() {
        None => return Err(schema(1, "empty file, expected a schema header".into())),
        Some((_, l)) => l.map_err(|e| io_error(path, e))?,
    };
    let header: Header =
        serde_json::from_str(&header_line).map_err(|e| schema(1, format!("bad schema header: {e}")))?;
    if header.schema != T::SCHEMA {
        return Err(schema(1, format!("expected schema {:?}, found {:?}", T::SCHEMA, header.schema)));
    }
    if header.version != SCHEMA_VERSION {
        return Err(schema(1, format!("unsupported {} schema version {}", T::SCHEMA, header.version)));
    }

    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| io_error(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| schema(i + 1, e.to_string()))?);
    }
    Ok(out)
}
