use std::collections::BTreeSet;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{catalog, DomainError, ExpertId, ImageId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Procedure {
    A1,
    A2,
    A3,
    A4,
    A5,
}

impl Procedure {
    pub const ALL: [Procedure; 5] = [Procedure::A1, Procedure::A2, Procedure::A3, Procedure::A4, Procedure::A5];

    pub fn label(self) -> &'static str {
        match self {
            Procedure::A1 => "A1",
            Procedure::A2 => "A2",
            Procedure::A3 => "A3",
            Procedure::A4 => "A4",
            Procedure::A5 => "A5",
        }
    }

    /// Task kinds of one item, in presentation order.
    pub fn task_kinds(self) -> &'static [TaskKind] {
        use TaskKind::*;
        match self {
            Procedure::A1 | Procedure::A2 | Procedure::A3 => &[T1, T2, T3, T4, T5],
            Procedure::A4 => &[T1, T2, T3, T4a, T4b, T5a, T5b],
            Procedure::A5 => &[T1, T2],
        }
    }

    /// Tag mixed into the study seed so each procedure draws from its own stream.
    pub fn stream_tag(self) -> u64 {
        u64::from_be_bytes(match self {
            Procedure::A1 => *b"CEMIS:A1",
            Procedure::A2 => *b"CEMIS:A2",
            Procedure::A3 => *b"CEMIS:A3",
            Procedure::A4 => *b"CEMIS:A4",
            Procedure::A5 => *b"CEMIS:A5",
        })
    }

    pub fn is_individual(self) -> bool {
        matches!(self, Procedure::A1 | Procedure::A2 | Procedure::A3)
    }
}

impl fmt::Display for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    T1,
    T2,
    T3,
    T4,
    T4a,
    T4b,
    T5,
    T5a,
    T5b,
}

impl TaskKind {
    pub fn label(self) -> &'static str {
        match self {
            TaskKind::T1 => "T1",
            TaskKind::T2 => "T2",
            TaskKind::T3 => "T3",
            TaskKind::T4 => "T4",
            TaskKind::T4a => "T4a",
            TaskKind::T4b => "T4b",
            TaskKind::T5 => "T5",
            TaskKind::T5a => "T5a",
            TaskKind::T5b => "T5b",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        use TaskKind::*;
        [T1, T2, T3, T4, T4a, T4b, T5, T5a, T5b].into_iter().find(|k| k.label() == s)
    }

    pub fn is_multi_select(self) -> bool {
        self == TaskKind::T3
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub String);

impl TaskId {
    /// `A1-007-T3` style identifier; carries only the procedure, item position and kind.
    pub fn for_item(procedure: Procedure, item_index: usize, kind: TaskKind) -> Self {
        Self(format!("{}-{:03}-{}", procedure.label(), item_index + 1, kind.label()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// What the expert is shown.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    Single { image: ImageId },
    Pair { slot1: ImageId, slot2: ImageId },
    Group { images: Vec<ImageId> },
}

impl Payload {
    pub fn images(&self) -> Vec<&ImageId> {
        match self {
            Payload::Single { image } => vec![image],
            Payload::Pair { slot1, slot2 } => vec![slot1, slot2],
            Payload::Group { images } => images.iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskInstance {
    pub task_id: TaskId,
    pub procedure: Procedure,
    pub kind: TaskKind,
    pub item_index: usize,
    pub payload: Payload,
    pub options: &'static [&'static str],
    pub multi_select: bool,
}

impl TaskInstance {
    pub fn new(procedure: Procedure, item_index: usize, kind: TaskKind, payload: Payload) -> Result<Self, DomainError> {
        let options = catalog::option_catalog(procedure, kind)?;
        Ok(Self {
            task_id: TaskId::for_item(procedure, item_index, kind),
            procedure,
            kind,
            item_index,
            payload,
            options,
            multi_select: kind.is_multi_select(),
        })
    }

    /// Checks an answer against this task's catalog and returns its canonical form.
    pub fn normalize_answer(&self, answer: &Answer) -> Result<Answer, DomainError> {
        let n = self.options.len();
        match (answer, self.multi_select) {
            (Answer::Single(i), false) => {
                if *i < n {
                    Ok(Answer::Single(*i))
                } else {
                    Err(DomainError::Validation(format!("option index {i} out of range for {} (0..{n})", self.task_id)))
                }
            }
            (Answer::Multi(ix), true) => {
                if ix.is_empty() {
                    return Err(DomainError::Validation(format!(
                        "{} needs at least one selected option",
                        self.task_id
                    )));
                }
                let set: BTreeSet<usize> = ix.iter().copied().collect();
                if set.len() != ix.len() {
                    return Err(DomainError::Validation(format!("{} answer repeats an option index", self.task_id)));
                }
                if let Some(bad) = set.iter().find(|i| **i >= n) {
                    return Err(DomainError::Validation(format!(
                        "option index {bad} out of range for {} (0..{n})",
                        self.task_id
                    )));
                }
                Ok(Answer::Multi(set.into_iter().collect()))
            }
            (Answer::Multi(_), false) => {
                Err(DomainError::Validation(format!("{} is single-select; send one option index", self.task_id)))
            }
            (Answer::Single(_), true) => {
                Err(DomainError::Validation(format!("{} is multi-select; send a list of option indices", self.task_id)))
            }
        }
    }
}

/// Zero-based option indices into the task's catalog.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Answer {
    Single(usize),
    Multi(Vec<usize>),
}

impl Answer {
    pub fn single(&self) -> Option<usize> {
        match self {
            Answer::Single(i) => Some(*i),
            Answer::Multi(_) => None,
        }
    }

    pub fn selected(&self) -> &[usize] {
        match self {
            Answer::Single(i) => std::slice::from_ref(i),
            Answer::Multi(v) => v,
        }
    }
}

/// One accepted expert answer. Never mutated after acceptance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    pub response_id: String,
    pub study_id: String,
    pub expert_id: ExpertId,
    pub task_id: TaskId,
    pub answer: Answer,
    pub answered_at: DateTime<Utc>,
}
