//! Enrolled experts. Session tokens are never written; only their SHA-256.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::ExpertId;

use super::StorageError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RosterEntry {
    pub expert_id: ExpertId,
    pub years_experience: u32,
    pub token_sha256: String,
    pub enrolled_at: DateTime<Utc>,
}

pub fn token_digest(token: &str) -> String {
    hex::encode(Sha256::digest(token.as_bytes()))
}

pub fn read_roster(path: &Path) -> Result<Vec<RosterEntry>, StorageError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(StorageError::io(path, e)),
    };
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| StorageError::Roster(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub fn append_roster(path: &Path, entry: &RosterEntry) -> Result<(), StorageError> {
    let mut line = serde_json::to_vec(entry).expect("roster entry serializes");
    line.push(b'\n');
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(|e| StorageError::io(path, e))?;
    f.write_all(&line).map_err(|e| StorageError::io(path, e))?;
    f.sync_data().map_err(|e| StorageError::io(path, e))
}
