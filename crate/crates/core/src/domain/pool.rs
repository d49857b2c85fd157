use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ImageId, ImageRecord};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PoolError {
    #[error("pool is empty")]
    Empty,
    #[error("record {index}: {message}")]
    Invariant { index: usize, message: String },
    #[error("duplicate image_id `{id}` (records {first} and {second})")]
    DuplicateId { id: ImageId, first: usize, second: usize },
}

/// A validated set of images with unique ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ImageRecord>", into = "Vec<ImageRecord>")]
pub struct Pool {
    records: Vec<ImageRecord>,
    index: HashMap<ImageId, usize>,
}

impl Pool {
    pub fn new(records: Vec<ImageRecord>) -> Result<Self, PoolError> {
        if records.is_empty() {
            return Err(PoolError::Empty);
        }
        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            r.validate().map_err(|e| PoolError::Invariant { index: i, message: e.to_string() })?;
            if let Some(first) = index.insert(r.image_id.clone(), i) {
                return Err(PoolError::DuplicateId { id: r.image_id.clone(), first, second: i });
            }
        }
        Ok(Self { records, index })
    }

    pub fn records(&self) -> &[ImageRecord] {
        &self.records
    }

    pub fn get(&self, id: &ImageId) -> Option<&ImageRecord> {
        self.index.get(id).map(|i| &self.records[*i])
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl TryFrom<Vec<ImageRecord>> for Pool {
    type Error = PoolError;

    fn try_from(records: Vec<ImageRecord>) -> Result<Self, Self::Error> {
        Pool::new(records)
    }
}

impl From<Pool> for Vec<ImageRecord> {
    fn from(p: Pool) -> Self {
        p.records
    }
}
