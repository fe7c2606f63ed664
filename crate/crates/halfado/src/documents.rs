//! Versioned JSON documents: engine state snapshots and expert pools.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use halfado_core::{EngineState, ExpertPool};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::runner::RunMetrics;

pub const STATE_SCHEMA: &str = "halfado.state";
pub const STATE_VERSION: u32 = 1;
pub const POOL_SCHEMA: &str = "halfado.experts";
pub const POOL_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum DocumentError {
    #[error("expected a {expected} document, found {found}")]
    SchemaMismatch { expected: String, found: String },
    #[error("malformed document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("document i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("state was taken against a different expert pool")]
    PoolMismatch,
}

#[derive(Deserialize)]
struct Header {
    schema: Option<String>,
    version: Option<u32>,
}

fn check_header(text: &str, schema: &str, version: u32) -> Result<(), DocumentError> {
    let header: Header = serde_json::from_str(text)?;
    let found = (header.schema.as_deref(), header.version);
    if found == (Some(schema), Some(version)) {
        return Ok(());
    }
    Err(DocumentError::SchemaMismatch {
        expected: format!("{schema} v{version}"),
        found: match found {
            (Some(s), Some(v)) => format!("{s} v{v}"),
            (Some(s), None) => format!("{s} without a version"),
            _ => "no schema".into(),
        },
    })
}

fn parse<T: DeserializeOwned>(text: &str, schema: &str, version: u32) -> Result<T, DocumentError> {
    check_header(text, schema, version)?;
    Ok(serde_json::from_str(text)?)
}

fn save<T: Serialize>(path: &Path, doc: &T) -> Result<(), DocumentError> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut out, doc)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// Hex SHA-256 of the pool's canonical JSON.
pub fn pool_digest(pool: &ExpertPool) -> String {
    struct HashWriter(Sha256);
    impl Write for HashWriter {
        fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
            self.0.update(buf);
            Ok(buf.len())
        }
        fn flush(&mut self) -> std::io::Result<()> {
            Ok(())
        }
    }
    let mut hasher = HashWriter(Sha256::new());
    serde_json::to_writer(&mut hasher, pool).expect("pools always serialize");
    hasher.0.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Everything needed to resume a run against the same pool and stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDocument {
    pub schema: String,
    pub version: u32,
    pub pool_sha256: String,
    pub engine: EngineState,
    pub metrics: RunMetrics,
}

impl StateDocument {
    pub fn new(engine: EngineState, metrics: RunMetrics, pool_sha256: String) -> Self {
        StateDocument { schema: STATE_SCHEMA.into(), version: STATE_VERSION, pool_sha256, engine, metrics }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("state always serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        parse(text, STATE_SCHEMA, STATE_VERSION)
    }

    pub fn save(&self, path: &Path) -> Result<(), DocumentError> {
        save(path, self)
    }

    pub fn load(path: &Path) -> Result<Self, DocumentError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn check_pool(&self, pool: &ExpertPool) -> Result<(), DocumentError> {
        if pool_digest(pool) == self.pool_sha256 {
            Ok(())
        } else {
            Err(DocumentError::PoolMismatch)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolDocument {
    pub schema: String,
    pub version: u32,
    /// How the pool was produced, for the record.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
    pub pool: ExpertPool,
}

impl PoolDocument {
    pub fn new(pool: ExpertPool, provenance: Option<serde_json::Value>) -> Self {
        PoolDocument { schema: POOL_SCHEMA.into(), version: POOL_VERSION, provenance, pool }
    }

    pub fn save(&self, path: &Path) -> Result<(), DocumentError> {
        save(path, self)
    }

    pub fn load(path: &Path) -> Result<Self, DocumentError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        parse(text, POOL_SCHEMA, POOL_VERSION)
    }
}
