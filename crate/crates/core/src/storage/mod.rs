//! On-disk layout of a data directory:
//!
//! ```text
//! <root>/studies/<study_id>/pool.json      validated image records
//!                          /study.json     config and frozen plans
//!                          /experts.jsonl  enrolled experts
//!                          /responses.log  append-only response log
//! ```

mod log;
mod manifest;
mod roster;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::domain::{validate_study_id, Pool};
use crate::study::{Study, StudyFile};

pub use log::{replay_log, LogEntry, ResponseLog};
pub use manifest::read_manifest;
pub use roster::{append_roster, read_roster, token_digest, RosterEntry};

pub const DATA_DIR_ENV: &str = "CEMIS_DATA_DIR";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StorageError {
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Manifest { category: &'static str, line: Option<usize>, message: String },
    #[error("{}: entry {seq} at byte offset {offset}: {message}", path.display())]
    Corrupt { path: PathBuf, offset: u64, seq: u64, message: String },
    #[error("{0}")]
    Roster(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Invalid(String),
}

impl StorageError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        StorageError::Io { path: path.to_path_buf(), message: e.to_string() }
    }

    pub fn category(&self) -> &'static str {
        match self {
            StorageError::Io { .. } => "storage.io",
            StorageError::Manifest { category, .. } => category,
            StorageError::Corrupt { .. } => "log.corrupt",
            StorageError::Roster(_) => "storage.roster",
            StorageError::NotFound(_) => "storage.not_found",
            StorageError::Conflict(_) => "storage.conflict",
            StorageError::Invalid(_) => "storage.invalid",
        }
    }
}

/// Writes `bytes` to a sibling temp file, syncs it and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StorageError> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| StorageError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| StorageError::io(&tmp, e))?;
    f.sync_all().map_err(|e| StorageError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| StorageError::io(path, e))
}

#[derive(Debug, Clone)]
pub struct DataDir {
    root: PathBuf,
}

impl DataDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    /// The directory named by `CEMIS_DATA_DIR`, else `./cemis-data`.
    pub fn from_env() -> Self {
        Self::new(std::env::var_os(DATA_DIR_ENV).map_or_else(|| PathBuf::from("cemis-data"), PathBuf::from))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn study_dir(&self, study_id: &str) -> Result<PathBuf, StorageError> {
        validate_study_id(study_id).map_err(|e| StorageError::Invalid(e.to_string()))?;
        Ok(self.root.join("studies").join(study_id))
    }

    pub fn pool_path(&self, study_id: &str) -> Result<PathBuf, StorageError> {
        Ok(self.study_dir(study_id)?.join("pool.json"))
    }

    pub fn study_path(&self, study_id: &str) -> Result<PathBuf, StorageError> {
        Ok(self.study_dir(study_id)?.join("study.json"))
    }

    pub fn roster_path(&self, study_id: &str) -> Result<PathBuf, StorageError> {
        Ok(self.study_dir(study_id)?.join("experts.jsonl"))
    }

    pub fn log_path(&self, study_id: &str) -> Result<PathBuf, StorageError> {
        Ok(self.study_dir(study_id)?.join("responses.log"))
    }

    /// Validates a manifest and stores it as the study's pool. Nothing is
    /// written unless every record is valid. A pool cannot be replaced once
    /// the study's plans are frozen.
    pub fn ingest_manifest(&self, study_id: &str, manifest: &Path) -> Result<Pool, StorageError> {
        let pool = read_manifest(manifest)?;
        if self.study_path(study_id)?.exists() {
            return Err(StorageError::Conflict(format!("study `{study_id}` already has frozen plans")));
        }
        let dir = self.study_dir(study_id)?;
        fs::create_dir_all(&dir).map_err(|e| StorageError::io(&dir, e))?;
        let bytes = serde_json::to_vec(&pool).expect("pool serializes");
        write_atomic(&self.pool_path(study_id)?, &bytes)?;
        Ok(pool)
    }

    pub fn load_pool(&self, study_id: &str) -> Result<Pool, StorageError> {
        let path = self.pool_path(study_id)?;
        if !path.exists() {
            return Err(StorageError::NotFound(format!("no pool ingested for study `{study_id}`")));
        }
        let bytes = fs::read(&path).map_err(|e| StorageError::io(&path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| StorageError::Invalid(format!("{}: {e}", path.display())))
    }

    pub fn save_study(&self, study: &Study) -> Result<(), StorageError> {
        let path = self.study_path(study.id())?;
        if path.exists() {
            return Err(StorageError::Conflict(format!("study `{}` already exists", study.id())));
        }
        let bytes = serde_json::to_vec_pretty(&study.file()).expect("study serializes");
        write_atomic(&path, &bytes)
    }

    pub fn load_study_file(&self, study_id: &str) -> Result<StudyFile, StorageError> {
        let path = self.study_path(study_id)?;
        if !path.exists() {
            return Err(StorageError::NotFound(format!("study `{study_id}` does not exist")));
        }
        let bytes = fs::read(&path).map_err(|e| StorageError::io(&path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| StorageError::Invalid(format!("{}: {e}", path.display())))
    }

    pub fn study_exists(&self, study_id: &str) -> bool {
        self.study_path(study_id).is_ok_and(|p| p.exists())
    }

    pub fn list_studies(&self) -> Result<Vec<String>, StorageError> {
        let dir = self.root.join("studies");
        let Ok(read) = fs::read_dir(&dir) else {
            return Ok(Vec::new());
        };
        let mut ids: Vec<String> = read
            .filter_map(|e| e.ok())
            .filter(|e| e.path().join("study.json").exists())
            .filter_map(|e| e.file_name().into_string().ok())
            .collect();
        ids.sort();
        Ok(ids)
    }
}
