//! Expert sessions over a frozen study.
//!
//! Each expert walks the task schedule strictly in order. An accepted answer
//! is appended to the response log before the cursor moves and is never
//! changed afterwards. All engine state can be rebuilt by replaying the
//! roster and the log.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::PathBuf;
use std::sync::atomic::{AtomicI64, Ordering as AtomicOrdering};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, TimeZone, Utc};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::domain::{
    derive_experience_group, Answer, ExpertId, ExpertProfile, Procedure, Response, StudyConfig, TaskId, TaskInstance,
    TaskKind,
};
use crate::storage::{
    append_roster, read_roster, token_digest, DataDir, LogEntry, ResponseLog, RosterEntry, StorageError,
};
use crate::study::{create_study, Study, StudyError};

pub trait Clock: Send + Sync + fmt::Debug {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Deterministic clock: starts at `start` and advances one second per reading.
#[derive(Debug)]
pub struct SteppingClock {
    start: i64,
    ticks: AtomicI64,
}

impl SteppingClock {
    pub fn new(start_unix: i64) -> Self {
        Self { start: start_unix, ticks: AtomicI64::new(0) }
    }
}

impl Clock for SteppingClock {
    fn now(&self) -> DateTime<Utc> {
        let t = self.ticks.fetch_add(1, AtomicOrdering::SeqCst);
        Utc.timestamp_opt(self.start + t, 0).single().expect("timestamp in range")
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("unknown session token")]
    Auth,
    #[error("{0}")]
    Forbidden(String),
    #[error("{0}")]
    NotFound(String),
    #[error("task {got} is out of order; the current task is {expected}")]
    Ordering { expected: String, got: TaskId },
    #[error("task {0} is already answered and cannot be changed")]
    Immutable(TaskId),
    #[error("{0}")]
    Validation(String),
    #[error("log entry {seq}: {message}")]
    Replay { seq: u64, message: String },
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Study(#[from] StudyError),
}

impl EngineError {
    pub fn category(&self) -> &'static str {
        match self {
            EngineError::Auth => "auth.invalid_token",
            EngineError::Forbidden(_) => "auth.forbidden",
            EngineError::NotFound(_) => "not_found",
            EngineError::Ordering { .. } => "session.ordering",
            EngineError::Immutable(_) => "session.immutable",
            EngineError::Validation(_) => "validation",
            EngineError::Replay { .. } => "log.replay",
            EngineError::Storage(e) => e.category(),
            EngineError::Study(e) => e.category(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Progress {
    pub answered: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Active,
    Completed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NextTask {
    Task { task: TaskInstance, progress: Progress },
    Completed { progress: Progress },
}

impl NextTask {
    pub fn task(&self) -> Option<&TaskInstance> {
        match self {
            NextTask::Task { task, .. } => Some(task),
            NextTask::Completed { .. } => None,
        }
    }

    pub fn progress(&self) -> Progress {
        match self {
            NextTask::Task { progress, .. } | NextTask::Completed { progress } => *progress,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cursor {
    pub task_id: TaskId,
    pub procedure: Procedure,
    pub item_index: usize,
    pub kind: TaskKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SessionState {
    pub study_id: String,
    pub expert_id: ExpertId,
    pub status: SessionStatus,
    pub cursor: Option<Cursor>,
    pub progress: Progress,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Receipt {
    pub response_id: String,
    pub task_id: TaskId,
    pub answered_at: DateTime<Utc>,
    /// True when this repeats an earlier identical submission.
    pub replayed: bool,
    pub next: NextTask,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Enrollment {
    pub expert_id: ExpertId,
    pub session_token: String,
}

#[derive(Debug)]
struct Session {
    profile: ExpertProfile,
    order: Vec<usize>,
    answered: Vec<Response>,
    by_task: HashMap<TaskId, usize>,
}

impl Session {
    fn progress(&self) -> Progress {
        Progress { answered: self.answered.len(), total: self.order.len() }
    }

    fn current<'s>(&self, study: &'s Study) -> Option<&'s TaskInstance> {
        self.order.get(self.answered.len()).map(|i| &study.tasks()[*i])
    }

    fn next(&self, study: &Study) -> NextTask {
        match self.current(study) {
            Some(t) => NextTask::Task { task: t.clone(), progress: self.progress() },
            None => NextTask::Completed { progress: self.progress() },
        }
    }
}

/// Per-expert state as rebuilt from the log; used to compare engines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SessionSnapshot {
    pub years_experience: u32,
    pub status: SessionStatus,
    pub progress: Progress,
    pub responses: Vec<Response>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EngineSnapshot {
    pub study_id: String,
    pub plan_digest: String,
    pub sessions: BTreeMap<ExpertId, SessionSnapshot>,
    pub log: Vec<Response>,
}

#[derive(Debug)]
struct Persistence {
    roster_path: PathBuf,
    log: ResponseLog,
}

#[derive(Debug)]
pub struct Engine {
    study: Arc<Study>,
    clock: Arc<dyn Clock>,
    /// Single writer for the response log; also orders `accepted`.
    writer: Mutex<Option<Persistence>>,
    accepted: RwLock<Vec<Response>>,
    sessions: RwLock<BTreeMap<ExpertId, Arc<Mutex<Session>>>>,
    tokens: RwLock<HashMap<String, ExpertId>>,
    roster: Mutex<Vec<RosterEntry>>,
}

pub fn response_id(study_id: &str, expert: &ExpertId, task: &TaskId) -> String {
    let mut h = Sha256::new();
    for part in [study_id, expert.as_str(), task.as_str()] {
        h.update(part.as_bytes());
        h.update([0]);
    }
    format!("r-{}", &hex::encode(h.finalize())[..16])
}

fn new_token() -> String {
    let mut bytes = [0u8; 32];
    rand::rng().fill_bytes(&mut bytes);
    hex::encode(bytes)
}

impl Engine {
    /// An engine that keeps everything in memory.
    pub fn in_memory(study: Study, clock: Arc<dyn Clock>) -> Self {
        Self::build(study, clock, None)
    }

    fn build(study: Study, clock: Arc<dyn Clock>, persistence: Option<Persistence>) -> Self {
        Self {
            study: Arc::new(study),
            clock,
            writer: Mutex::new(persistence),
            accepted: RwLock::new(Vec::new()),
            sessions: RwLock::new(BTreeMap::new()),
            tokens: RwLock::new(HashMap::new()),
            roster: Mutex::new(Vec::new()),
        }
    }

    /// Samples a new study from the ingested pool, saves its frozen plans and opens it.
    pub fn create(data: &DataDir, config: StudyConfig, clock: Arc<dyn Clock>) -> Result<Self, EngineError> {
        let pool = data.load_pool(&config.study_id)?;
        let study = create_study(config, pool)?;
        data.save_study(&study)?;
        Self::open(data, study.id(), clock)
    }

    /// Loads a study and replays its roster and response log.
    pub fn open(data: &DataDir, study_id: &str, clock: Arc<dyn Clock>) -> Result<Self, EngineError> {
        let file = data.load_study_file(study_id)?;
        let pool = data.load_pool(study_id)?;
        let study = Study::from_plans(file.config, pool, file.plans)?;
        let roster_path = data.roster_path(study_id)?;
        let roster = read_roster(&roster_path)?;
        let (log, entries) = ResponseLog::open(&data.log_path(study_id)?)?;
        Self::restore(study, clock, roster, &entries, Some(Persistence { roster_path, log }))
    }

    /// Rebuilds engine state from a roster and verified log entries.
    pub fn replay(
        study: Study,
        clock: Arc<dyn Clock>,
        roster: Vec<RosterEntry>,
        entries: &[LogEntry],
    ) -> Result<Self, EngineError> {
        Self::restore(study, clock, roster, entries, None)
    }

    fn restore(
        study: Study,
        clock: Arc<dyn Clock>,
        roster: Vec<RosterEntry>,
        entries: &[LogEntry],
        persistence: Option<Persistence>,
    ) -> Result<Self, EngineError> {
        let engine = Self::build(study, clock, persistence);
        for entry in roster {
            engine.register(entry);
        }
        for entry in entries {
            engine.apply_replayed(entry)?;
        }
        Ok(engine)
    }

    fn register(&self, entry: RosterEntry) {
        let profile = ExpertProfile { expert_id: entry.expert_id.clone(), years_experience: entry.years_experience };
        let session = Session {
            order: self.study.schedule_for(&profile.expert_id),
            profile,
            answered: Vec::new(),
            by_task: HashMap::new(),
        };
        self.tokens.write().expect("tokens lock").insert(entry.token_sha256.clone(), entry.expert_id.clone());
        self.sessions.write().expect("sessions lock").insert(entry.expert_id.clone(), Arc::new(Mutex::new(session)));
        self.roster.lock().expect("roster lock").push(entry);
    }

    fn apply_replayed(&self, entry: &LogEntry) -> Result<(), EngineError> {
        let fail = |message: String| EngineError::Replay { seq: entry.seq, message };
        let r = entry.response();
        if r.study_id != self.study.id() {
            return Err(fail(format!("belongs to study `{}`", r.study_id)));
        }
        let session = self.session(&r.expert_id).ok_or_else(|| fail(format!("unknown expert {}", r.expert_id)))?;
        let mut s = session.lock().expect("session lock");
        let task = s.current(&self.study).ok_or_else(|| fail("session already complete".into()))?;
        if task.task_id != r.task_id {
            return Err(fail(format!("answers {} but the expected task is {}", r.task_id, task.task_id)));
        }
        let normalized = task.normalize_answer(&r.answer).map_err(|e| fail(e.to_string()))?;
        if normalized != r.answer || r.response_id != response_id(self.study.id(), &r.expert_id, &r.task_id) {
            return Err(fail("entry was not produced by this engine".into()));
        }
        let pos = s.answered.len();
        s.by_task.insert(r.task_id.clone(), pos);
        s.answered.push(r.clone());
        self.accepted.write().expect("accepted lock").push(r);
        Ok(())
    }

    pub fn study(&self) -> &Study {
        &self.study
    }

    pub fn study_arc(&self) -> Arc<Study> {
        Arc::clone(&self.study)
    }

    fn session(&self, expert: &ExpertId) -> Option<Arc<Mutex<Session>>> {
        self.sessions.read().expect("sessions lock").get(expert).cloned()
    }

    /// Enrolls an expert and returns their session token. Only the token's
    /// digest is stored.
    pub fn enroll(&self, years_experience: i64) -> Result<Enrollment, EngineError> {
        derive_experience_group(years_experience).map_err(|e| EngineError::Validation(e.to_string()))?;
        let years = u32::try_from(years_experience)
            .map_err(|_| EngineError::Validation(format!("years_experience {years_experience} is out of range")))?;
        // the writer lock serializes enrolment with log appends
        let writer = self.writer.lock().expect("writer lock");
        let n = self.roster.lock().expect("roster lock").len();
        let token = new_token();
        let entry = RosterEntry {
            expert_id: ExpertId::new(format!("E{:02}", n + 1)),
            years_experience: years,
            token_sha256: token_digest(&token),
            enrolled_at: self.clock.now(),
        };
        if let Some(p) = writer.as_ref() {
            append_roster(&p.roster_path, &entry)?;
        }
        let expert_id = entry.expert_id.clone();
        self.register(entry);
        Ok(Enrollment { expert_id, session_token: token })
    }

    pub fn authenticate(&self, token: &str) -> Result<ExpertId, EngineError> {
        self.tokens.read().expect("tokens lock").get(&token_digest(token)).cloned().ok_or(EngineError::Auth)
    }

    fn session_for(&self, token: &str) -> Result<(ExpertId, Arc<Mutex<Session>>), EngineError> {
        let expert = self.authenticate(token)?;
        let session = self.session(&expert).ok_or(EngineError::Auth)?;
        Ok((expert, session))
    }

    pub fn next_task(&self, token: &str) -> Result<NextTask, EngineError> {
        let (_, session) = self.session_for(token)?;
        let s = session.lock().expect("session lock");
        Ok(s.next(&self.study))
    }

    pub fn state(&self, token: &str) -> Result<SessionState, EngineError> {
        let (expert, session) = self.session_for(token)?;
        let s = session.lock().expect("session lock");
        let cursor = s.current(&self.study).map(|t| Cursor {
            task_id: t.task_id.clone(),
            procedure: t.procedure,
            item_index: t.item_index,
            kind: t.kind,
        });
        Ok(SessionState {
            study_id: self.study.id().to_string(),
            expert_id: expert,
            status: if cursor.is_some() { SessionStatus::Active } else { SessionStatus::Completed },
            cursor,
            progress: s.progress(),
        })
    }

    /// Accepts the answer to the session's current task.
    ///
    /// Resubmitting an identical answer to an already accepted task returns
    /// the original receipt; any other answer to it is rejected.
    pub fn submit(&self, token: &str, task_id: &TaskId, answer: &Answer) -> Result<Receipt, EngineError> {
        let (expert, session) = self.session_for(token)?;
        let mut s = session.lock().expect("session lock");

        if let Some(&pos) = s.by_task.get(task_id) {
            let original = &s.answered[pos];
            let task = self.study.task(task_id).expect("answered tasks exist");
            return match task.normalize_answer(answer) {
                Ok(a) if a == original.answer => Ok(Receipt {
                    response_id: original.response_id.clone(),
                    task_id: task_id.clone(),
                    answered_at: original.answered_at,
                    replayed: true,
                    next: s.next(&self.study),
                }),
                _ => Err(EngineError::Immutable(task_id.clone())),
            };
        }

        let Some(task) = s.current(&self.study) else {
            return Err(EngineError::Ordering { expected: "none (session completed)".into(), got: task_id.clone() });
        };
        if &task.task_id != task_id {
            return Err(EngineError::Ordering { expected: task.task_id.to_string(), got: task_id.clone() });
        }
        let answer = task.normalize_answer(answer).map_err(|e| EngineError::Validation(e.to_string()))?;
        let response = Response {
            response_id: response_id(self.study.id(), &expert, task_id),
            study_id: self.study.id().to_string(),
            expert_id: expert,
            task_id: task_id.clone(),
            answer,
            answered_at: self.clock.now(),
        };
        {
            let mut writer = self.writer.lock().expect("writer lock");
            if let Some(p) = writer.as_mut() {
                p.log.append(&response)?;
            }
            self.accepted.write().expect("accepted lock").push(response.clone());
        }
        let pos = s.answered.len();
        s.by_task.insert(task_id.clone(), pos);
        s.answered.push(response.clone());
        Ok(Receipt {
            response_id: response.response_id,
            task_id: response.task_id,
            answered_at: response.answered_at,
            replayed: false,
            next: s.next(&self.study),
        })
    }

    /// Path of an image, if it belongs to the session's current task.
    pub fn current_task_image(&self, token: &str, handle: &str) -> Result<PathBuf, EngineError> {
        let (_, session) = self.session_for(token)?;
        let s = session.lock().expect("session lock");
        let denied = || EngineError::Forbidden("image is not part of the current task".into());
        let task = s.current(&self.study).ok_or_else(denied)?;
        let id = self.study.image_for_handle(handle).ok_or_else(denied)?;
        if !task.payload.images().contains(&id) {
            return Err(denied());
        }
        Ok(self.study.record(id).expect("task images are in the pool").path.clone())
    }

    /// Accepted responses in log order.
    pub fn responses(&self) -> Vec<Response> {
        self.accepted.read().expect("accepted lock").clone()
    }

    pub fn profiles(&self) -> Vec<ExpertProfile> {
        self.roster
            .lock()
            .expect("roster lock")
            .iter()
            .map(|e| ExpertProfile { expert_id: e.expert_id.clone(), years_experience: e.years_experience })
            .collect()
    }

    pub fn roster(&self) -> Vec<RosterEntry> {
        self.roster.lock().expect("roster lock").clone()
    }

    pub fn snapshot(&self) -> EngineSnapshot {
        let sessions = self
            .sessions
            .read()
            .expect("sessions lock")
            .iter()
            .map(|(id, s)| {
                let s = s.lock().expect("session lock");
                let progress = s.progress();
                (
                    id.clone(),
                    SessionSnapshot {
                        years_experience: s.profile.years_experience,
                        status: if progress.answered == progress.total {
                            SessionStatus::Completed
                        } else {
                            SessionStatus::Active
                        },
                        progress,
                        responses: s.answered.clone(),
                    },
                )
            })
            .collect();
        EngineSnapshot {
            study_id: self.study.id().to_string(),
            plan_digest: self.study.plan_digest(),
            sessions,
            log: self.responses(),
        }
    }
}
