//! JSON bodies exchanged with the assessment client.
//!
//! A [`WireTask`] carries what an expert needs to answer one task and
//! nothing else: images appear only as opaque handles, and the only framing
//! disclosed is the paired procedure's notice.

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::domain::catalog::{procedure_notice, question_text};
use crate::domain::{Answer, ExpertId, Payload, Procedure, TaskId, TaskInstance, TaskKind};
use crate::session::{Cursor, NextTask, Progress, Receipt, SessionState, SessionStatus};
use crate::study::Study;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WirePayload {
    Single { image: String },
    Pair { slot1: String, slot2: String },
    Group { images: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireProgress {
    pub answered: usize,
    pub total: usize,
}

impl From<Progress> for WireProgress {
    fn from(p: Progress) -> Self {
        Self { answered: p.answered, total: p.total }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireTask {
    pub task_id: String,
    pub procedure: Procedure,
    pub kind: TaskKind,
    pub question: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub notice: Option<String>,
    pub options: Vec<String>,
    pub multi_select: bool,
    pub payload: WirePayload,
    pub progress: WireProgress,
}

impl WireTask {
    pub fn new(study: &Study, task: &TaskInstance, progress: Progress) -> Self {
        let handle = |id| study.image_handle(id).expect("every planned image has a handle").to_string();
        let payload = match &task.payload {
            Payload::Single { image } => WirePayload::Single { image: handle(image) },
            Payload::Pair { slot1, slot2 } => WirePayload::Pair { slot1: handle(slot1), slot2: handle(slot2) },
            Payload::Group { images } => WirePayload::Group { images: images.iter().map(handle).collect() },
        };
        Self {
            task_id: task.task_id.to_string(),
            procedure: task.procedure,
            kind: task.kind,
            question: question_text(task.procedure, task.kind).expect("planned tasks have a question").to_string(),
            notice: procedure_notice(task.procedure).map(str::to_string),
            options: task.options.iter().map(|s| s.to_string()).collect(),
            multi_select: task.multi_select,
            payload,
            progress: progress.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum WireNext {
    Active { task: WireTask, progress: WireProgress },
    Completed { progress: WireProgress },
}

impl WireNext {
    pub fn new(study: &Study, next: &NextTask) -> Self {
        match next {
            NextTask::Task { task, progress } => {
                WireNext::Active { task: WireTask::new(study, task, *progress), progress: (*progress).into() }
            }
            NextTask::Completed { progress } => WireNext::Completed { progress: (*progress).into() },
        }
    }

    pub fn task(&self) -> Option<&WireTask> {
        match self {
            WireNext::Active { task, .. } => Some(task),
            WireNext::Completed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireState {
    pub study_id: String,
    pub expert_id: ExpertId,
    pub status: SessionStatus,
    pub cursor: Option<WireCursor>,
    pub progress: WireProgress,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireCursor {
    pub task_id: String,
    pub procedure: Procedure,
    pub kind: TaskKind,
}

impl From<SessionState> for WireState {
    fn from(s: SessionState) -> Self {
        let cursor = s.cursor.map(|Cursor { task_id, procedure, kind, .. }| WireCursor {
            task_id: task_id.to_string(),
            procedure,
            kind,
        });
        Self { study_id: s.study_id, expert_id: s.expert_id, status: s.status, cursor, progress: s.progress.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitRequest {
    pub task_id: TaskId,
    pub answer: Answer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireReceipt {
    pub response_id: String,
    pub task_id: String,
    pub answered_at: String,
    pub replayed: bool,
    pub next: WireNext,
}

impl WireReceipt {
    pub fn new(study: &Study, r: &Receipt) -> Self {
        Self {
            response_id: r.response_id.clone(),
            task_id: r.task_id.to_string(),
            answered_at: timestamp(&r.answered_at),
            replayed: r.replayed,
            next: WireNext::new(study, &r.next),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnrollRequest {
    pub years_experience: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub category: String,
    pub message: String,
}

pub fn timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}
