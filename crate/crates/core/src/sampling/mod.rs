//! Seeded, stratified, margin-balanced selection of study items.

mod quota;
pub mod rng;
mod select;

use thiserror::Error;

pub use quota::{margins, plan_quotas, CellQuota, Dim, DimValue, SamplingPlan, StratumKey};
pub use select::{
    build_a4_pairs, build_a5_groups, sample_individual_set, A5Shape, GroupLabel, GroupSet, ImageGroup, ImagePair,
    Leftover,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SamplingError {
    #[error("cannot plan quotas: {0}")]
    Planning(String),
    #[error("stratum {cell} has {available} eligible images, {needed} needed")]
    UnderPopulated { cell: String, needed: usize, available: usize },
    #[error("cannot pair subsets: {0}")]
    Pairing(String),
    #[error("cannot build groups: {0}")]
    Construction(String),
}

impl SamplingError {
    pub fn category(&self) -> &'static str {
        match self {
            SamplingError::Planning(_) => "sampling.planning",
            SamplingError::UnderPopulated { .. } => "sampling.under_populated",
            SamplingError::Pairing(_) => "sampling.pairing",
            SamplingError::Construction(_) => "sampling.construction",
        }
    }
}
