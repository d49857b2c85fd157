//! Append-only response log. One JSON entry per line, each carrying a
//! gap-free sequence number and a SHA-256 checksum of its own content.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::{Answer, ExpertId, Response, TaskId};

use super::StorageError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogEntry {
    pub seq: u64,
    pub response_id: String,
    pub study_id: String,
    pub expert_id: ExpertId,
    pub task_id: TaskId,
    pub answer: Answer,
    pub answered_at: DateTime<Utc>,
    pub checksum: String,
}

/// The checksummed part of an entry, in field order.
#[derive(Serialize)]
struct Body<'a> {
    seq: u64,
    response_id: &'a str,
    study_id: &'a str,
    expert_id: &'a ExpertId,
    task_id: &'a TaskId,
    answer: &'a Answer,
    answered_at: &'a DateTime<Utc>,
}

fn checksum(seq: u64, r: &Response) -> String {
    let body = Body {
        seq,
        response_id: &r.response_id,
        study_id: &r.study_id,
        expert_id: &r.expert_id,
        task_id: &r.task_id,
        answer: &r.answer,
        answered_at: &r.answered_at,
    };
    hex::encode(Sha256::digest(serde_json::to_vec(&body).expect("entry serializes")))
}

impl LogEntry {
    pub fn new(seq: u64, r: &Response) -> Self {
        Self {
            seq,
            response_id: r.response_id.clone(),
            study_id: r.study_id.clone(),
            expert_id: r.expert_id.clone(),
            task_id: r.task_id.clone(),
            answer: r.answer.clone(),
            answered_at: r.answered_at,
            checksum: checksum(seq, r),
        }
    }

    pub fn response(&self) -> Response {
        Response {
            response_id: self.response_id.clone(),
            study_id: self.study_id.clone(),
            expert_id: self.expert_id.clone(),
            task_id: self.task_id.clone(),
            answer: self.answer.clone(),
            answered_at: self.answered_at,
        }
    }

    fn verify(&self) -> bool {
        checksum(self.seq, &self.response()) == self.checksum
    }
}

/// Reads and verifies a whole log. Stops at the first entry that fails to
/// parse, fails its checksum, breaks the sequence or lacks its newline,
/// reporting the byte offset where that entry starts.
pub fn replay_log(path: &Path) -> Result<Vec<LogEntry>, StorageError> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(StorageError::io(path, e)),
    };
    let mut entries = Vec::new();
    let mut offset = 0usize;
    while offset < bytes.len() {
        let seq = entries.len() as u64 + 1;
        let corrupt =
            |message: String| StorageError::Corrupt { path: path.to_path_buf(), offset: offset as u64, seq, message };
        let Some(len) = bytes[offset..].iter().position(|b| *b == b'\n') else {
            return Err(corrupt("incomplete final entry".into()));
        };
        let line = &bytes[offset..offset + len];
        let entry: LogEntry = serde_json::from_slice(line).map_err(|e| corrupt(format!("unparseable entry: {e}")))?;
        if entry.seq != seq {
            return Err(corrupt(format!("sequence number {} where {seq} was expected", entry.seq)));
        }
        if !entry.verify() {
            return Err(corrupt("checksum mismatch".into()));
        }
        entries.push(entry);
        offset += len + 1;
    }
    Ok(entries)
}

/// Single writer over a log file. Appends are flushed to disk before
/// [`ResponseLog::append`] returns.
#[derive(Debug)]
pub struct ResponseLog {
    path: PathBuf,
    file: File,
    next_seq: u64,
}

impl ResponseLog {
    /// Opens (creating if needed) and verifies an existing log.
    pub fn open(path: &Path) -> Result<(Self, Vec<LogEntry>), StorageError> {
        let entries = replay_log(path)?;
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(|e| StorageError::io(path, e))?;
        let next_seq = entries.len() as u64 + 1;
        Ok((Self { path: path.to_path_buf(), file, next_seq }, entries))
    }

    pub fn append(&mut self, response: &Response) -> Result<LogEntry, StorageError> {
        let entry = LogEntry::new(self.next_seq, response);
        let mut line = serde_json::to_vec(&entry).expect("entry serializes");
        line.push(b'\n');
        self.file.write_all(&line).map_err(|e| StorageError::io(&self.path, e))?;
        self.file.sync_data().map_err(|e| StorageError::io(&self.path, e))?;
        self.next_seq += 1;
        Ok(entry)
    }

    pub fn len(&self) -> u64 {
        self.next_seq - 1
    }

    pub fn is_empty(&self) -> bool {
        self.next_seq == 1
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

#[cfg(test)]
mod tests {
    use chrono::TimeZone;

    use super::*;

    fn response(i: usize) -> Response {
        Response {
            response_id: format!("r{i}"),
            study_id: "s".into(),
            expert_id: ExpertId::new("E01"),
            task_id: TaskId(format!("A1-{i:03}-T1")),
            answer: if i.is_multiple_of(2) { Answer::Single(1) } else { Answer::Multi(vec![0, 2]) },
            answered_at: Utc.timestamp_opt(1_700_000_000 + i as i64, 0).unwrap(),
        }
    }

    #[test]
    fn append_and_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("responses.log");
        let (mut log, existing) = ResponseLog::open(&path).unwrap();
        assert!(existing.is_empty());
        for i in 1..=5 {
            log.append(&response(i)).unwrap();
        }
        drop(log);
        let entries = replay_log(&path).unwrap();
        assert_eq!(entries.len(), 5);
        assert_eq!(entries[2].response(), response(3));
        let (log, again) = ResponseLog::open(&path).unwrap();
        assert_eq!(again, entries);
        assert_eq!(log.len(), 5);
    }

    #[test]
    fn missing_log_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        assert!(replay_log(&dir.path().join("none.log")).unwrap().is_empty());
    }

    #[test]
    fn tampered_entry_halts_at_its_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("responses.log");
        let (mut log, _) = ResponseLog::open(&path).unwrap();
        for i in 1..=4 {
            log.append(&response(i)).unwrap();
        }
        let mut bytes = fs::read(&path).unwrap();
        let starts: Vec<usize> = std::iter::once(0)
            .chain(bytes.iter().enumerate().filter(|(_, b)| **b == b'\n').map(|(i, _)| i + 1))
            .collect();
        // entry 2 answered option 1; make it say 0 without touching the checksum
        let second = starts[1];
        let pos = second + bytes[second..].windows(9).position(|w| w == b"\"answer\":").unwrap() + 9;
        assert_eq!(bytes[pos], b'1');
        bytes[pos] = b'0';
        fs::write(&path, &bytes).unwrap();
        match replay_log(&path).unwrap_err() {
            StorageError::Corrupt { offset, seq, message, .. } => {
                assert_eq!((offset, seq), (second as u64, 2));
                assert_eq!(message, "checksum mismatch");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn torn_final_write_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("responses.log");
        let (mut log, _) = ResponseLog::open(&path).unwrap();
        log.append(&response(1)).unwrap();
        let good = fs::metadata(&path).unwrap().len();
        OpenOptions::new().append(true).open(&path).unwrap().write_all(b"{\"seq\":2,").unwrap();
        match replay_log(&path).unwrap_err() {
            StorageError::Corrupt { offset, .. } => assert_eq!(offset, good),
            other => panic!("unexpected {other:?}"),
        }
    }
}
