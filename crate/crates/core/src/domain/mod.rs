//! Protocol vocabulary: images, experts, procedures, tasks, answers.
//!
//! Everything here is an immutable value type. Ground truth lives on
//! [`ImageRecord`]; tasks only ever reference images by id.

pub mod catalog;
mod config;
mod expert;
mod image;
mod pool;
mod task;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use catalog::option_catalog;
pub use config::{validate_study_id, GroupingPolicy, ProcedureCounts, StudyConfig};
pub use expert::{derive_experience_group, ExperienceGroup, ExpertId, ExpertProfile};
pub use image::{Category, Generator, ImageId, ImageRecord, Lesion, Origin, Provenance, Source};
pub use pool::{Pool, PoolError};
pub use task::{Answer, Payload, Procedure, Response, TaskId, TaskInstance, TaskKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomainError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Invariant(String),
    #[error("{0}")]
    NotFound(String),
}

impl DomainError {
    pub fn category(&self) -> &'static str {
        match self {
            DomainError::Validation(_) => "domain.validation",
            DomainError::Invariant(_) => "domain.invariant",
            DomainError::NotFound(_) => "domain.not_found",
        }
    }
}

/// Binary question a judgment task asks about an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Question {
    /// Real is positive, synthetic negative.
    Realness,
    /// Abnormal is positive, normal negative. Lesion subtypes collapse to positive.
    Abnormality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Truth {
    Positive,
    Negative,
}

impl Truth {
    pub fn from_bool(positive: bool) -> Self {
        if positive {
            Truth::Positive
        } else {
            Truth::Negative
        }
    }

    pub fn is_positive(self) -> bool {
        self == Truth::Positive
    }
}

pub fn resolve_truth(image: &ImageRecord, question: Question) -> Truth {
    match question {
        Question::Realness => Truth::from_bool(image.source == Source::Real),
        Question::Abnormality => Truth::from_bool(image.category == Category::Abnormal),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(source: Source, category: Category) -> ImageRecord {
        ImageRecord {
            image_id: ImageId::new("i"),
            path: "i.png".into(),
            source,
            generator: (source == Source::Synthetic).then_some(Generator::TideII),
            category,
            lesion: (category == Category::Abnormal).then_some(Lesion::Ulcer),
            origin: Origin::Kvasir,
        }
    }

    #[test]
    fn truth_conventions() {
        assert_eq!(resolve_truth(&img(Source::Real, Category::Normal), Question::Realness), Truth::Positive);
        assert_eq!(resolve_truth(&img(Source::Real, Category::Normal), Question::Abnormality), Truth::Negative);
        assert_eq!(resolve_truth(&img(Source::Synthetic, Category::Normal), Question::Realness), Truth::Negative);
        assert_eq!(resolve_truth(&img(Source::Synthetic, Category::Abnormal), Question::Abnormality), Truth::Positive);
    }
}
