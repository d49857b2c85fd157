use std::fmt;

use serde::{Deserialize, Serialize};

use super::DomainError;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExpertId(pub String);

impl ExpertId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ExpertId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Cohort bucket by years of clinical experience.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ExperienceGroup {
    #[serde(rename = "G1_lt10")]
    LessThan10,
    #[serde(rename = "G2_10to20")]
    TenToTwenty,
    #[serde(rename = "G3_gt20")]
    MoreThan20,
}

impl ExperienceGroup {
    pub const ALL: [ExperienceGroup; 3] =
        [ExperienceGroup::LessThan10, ExperienceGroup::TenToTwenty, ExperienceGroup::MoreThan20];

    pub fn label(self) -> &'static str {
        match self {
            ExperienceGroup::LessThan10 => "G1_lt10",
            ExperienceGroup::TenToTwenty => "G2_10to20",
            ExperienceGroup::MoreThan20 => "G3_gt20",
        }
    }

    pub fn of_years(years: u32) -> Self {
        match years {
            0..=9 => ExperienceGroup::LessThan10,
            10..=20 => ExperienceGroup::TenToTwenty,
            _ => ExperienceGroup::MoreThan20,
        }
    }
}

impl fmt::Display for ExperienceGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Maps years of experience onto the cohort groups; 10 and 20 both fall in the middle group.
pub fn derive_experience_group(years: i64) -> Result<ExperienceGroup, DomainError> {
    let years = u32::try_from(years).map_err(|_| {
        DomainError::Validation(format!("years of experience must be a non-negative integer, got {years}"))
    })?;
    Ok(ExperienceGroup::of_years(years))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpertProfile {
    pub expert_id: ExpertId,
    pub years_experience: u32,
}

impl ExpertProfile {
    pub fn experience_group(&self) -> ExperienceGroup {
        ExperienceGroup::of_years(self.years_experience)
    }
}
