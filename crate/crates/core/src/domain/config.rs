use serde::{Deserialize, Serialize};

use super::{DomainError, Generator};

/// How A5 images are chunked into groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupingPolicy {
    /// One source and one category per group.
    #[default]
    HomogeneousSourceCategory,
    /// One source per group, categories mixed.
    HomogeneousSourceMixed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProcedureCounts {
    pub a1_images: usize,
    pub a2_images: usize,
    pub a3_images: usize,
    pub a4_pairs: usize,
    pub a5_group_size: usize,
    pub a5_real_images: usize,
    pub a5_images_per_generator: usize,
    pub a5_generators: Vec<Generator>,
}

impl Default for ProcedureCounts {
    fn default() -> Self {
        Self {
            a1_images: 50,
            a2_images: 50,
            a3_images: 50,
            a4_pairs: 50,
            a5_group_size: 10,
            a5_real_images: 300,
            a5_images_per_generator: 50,
            a5_generators: Generator::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub study_id: String,
    pub seed: u64,
    #[serde(default)]
    pub counts: ProcedureCounts,
    #[serde(default)]
    pub grouping_policy: GroupingPolicy,
    /// Generator under evaluation in A1, A2 and A4.
    #[serde(default = "default_target")]
    pub target_generator: Generator,
    /// Give every expert their own item order within each procedure.
    #[serde(default)]
    pub shuffle_per_expert: bool,
}

fn default_target() -> Generator {
    Generator::TideII
}

impl StudyConfig {
    pub fn new(study_id: impl Into<String>, seed: u64) -> Self {
        Self {
            study_id: study_id.into(),
            seed,
            counts: ProcedureCounts::default(),
            grouping_policy: GroupingPolicy::default(),
            target_generator: default_target(),
            shuffle_per_expert: false,
        }
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        validate_study_id(&self.study_id)?;
        let c = &self.counts;
        let positive = [
            ("a1_images", c.a1_images),
            ("a2_images", c.a2_images),
            ("a3_images", c.a3_images),
            ("a4_pairs", c.a4_pairs),
            ("a5_group_size", c.a5_group_size),
            ("a5_real_images", c.a5_real_images),
            ("a5_images_per_generator", c.a5_images_per_generator),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(DomainError::Validation(format!("counts.{name} must be positive")));
            }
        }
        let balanced = [
            ("a1_images", c.a1_images),
            ("a2_images", c.a2_images),
            ("a3_images", c.a3_images),
            ("a4_pairs", c.a4_pairs),
            ("a5_real_images", c.a5_real_images),
            ("a5_images_per_generator", c.a5_images_per_generator),
        ];
        for (name, v) in balanced {
            if v % 2 != 0 {
                return Err(DomainError::Validation(format!(
                    "counts.{name} = {v} cannot be split evenly across balancing dimensions"
                )));
            }
        }
        if c.a5_generators.is_empty() {
            return Err(DomainError::Validation("counts.a5_generators must not be empty".into()));
        }
        let mut seen = c.a5_generators.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != c.a5_generators.len() {
            return Err(DomainError::Validation("counts.a5_generators lists a generator twice".into()));
        }
        Ok(())
    }
}

/// Study ids double as directory names.
pub fn validate_study_id(id: &str) -> Result<(), DomainError> {
    let ok = !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    if ok {
        Ok(())
    } else {
        Err(DomainError::Validation(format!("study id `{id}` must be 1-64 characters of [A-Za-z0-9_-]")))
    }
}
