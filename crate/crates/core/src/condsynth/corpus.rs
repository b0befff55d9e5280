use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::lang::split_logic_atoms;
use crate::models::Context;

/// One corpus condition with the context it was written in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub context: Context,
    pub condition: String,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line} ({id}): cannot parse condition: {message}")]
    Condition { line: usize, id: String, message: String },
    #[error("line {line} ({id}): undeclared variable `{name}`")]
    UndeclaredVariable { line: usize, id: String, name: String },
    #[error("line {line} ({id}): logical operator nested inside `{atom}`")]
    NestedLogic { line: usize, id: String, atom: String },
}

/// Validates JSON-lines records and splits compound conditions into one
/// record per atomic operand (`id#1`, `id#2`, ...).
pub fn ingest_str(text: &str) -> Result<Vec<CorpusRecord>, IngestError> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut rec: CorpusRecord = serde_json::from_str(raw).map_err(|e| IngestError::Malformed {
            line,
            message: e.to_string(),
        })?;
        if !ids.insert(rec.id.clone()) {
            return Err(IngestError::DuplicateId { line, id: rec.id });
        }
        rec.context.normalize().map_err(|e| IngestError::Malformed {
            line,
            message: e.to_string(),
        })?;
        let atoms = split_logic_atoms(&rec.condition).map_err(|e| IngestError::Condition {
            line,
            id: rec.id.clone(),
            message: e.to_string(),
        })?;
        for atom in &atoms {
            if atom.has_logic() {
                return Err(IngestError::NestedLogic {
                    line,
                    id: rec.id.clone(),
                    atom: atom.to_string(),
                });
            }
            if let Some(name) = atom.variables().into_iter().find(|v| rec.context.variable(v).is_none()) {
                return Err(IngestError::UndeclaredVariable {
                    line,
                    id: rec.id.clone(),
                    name,
                });
            }
        }
        let single = atoms.len() == 1;
        for (k, atom) in atoms.iter().enumerate() {
            out.push(CorpusRecord {
                id: if single {
                    rec.id.clone()
                } else {
                    format!("{}#{}", rec.id, k + 1)
                },
                context: rec.context.clone(),
                condition: atom.to_string(),
            });
        }
    }
    Ok(out)
}

pub fn ingest(path: &Path) -> Result<Vec<CorpusRecord>, IngestError> {
    ingest_str(&read(path)?)
}

pub fn read(path: &Path) -> Result<String, IngestError> {
    std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn to_jsonl(records: &[CorpusRecord]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).expect("records serialize"));
        s.push('\n');
    }
    s
}
