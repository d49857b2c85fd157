//! Statistics over the response log: confusion metrics, cross-expert
//! summaries, interval estimates, exact tests and Likert aggregations.

mod aggregate;
mod inference;
mod judge;
mod metrics;
pub mod special;

use thiserror::Error;

pub use aggregate::{
    experience_breakdown, likert_aggregate, model_comparison, reason_crosstab, Catalog, CollectionQuestion,
    ComparisonRow, GroupRating, GroupRow, LikertDistribution, LikertTable, ModelComparison, ReasonRate, ReasonTable,
};
pub use inference::{
    binom_test, chi2_gof, wald_ci, wald_ci_from_rate, z_for_level, ProportionCI, Sidedness, TestResult,
};
pub use metrics::{
    confusion_from_log, mean_std, metrics, summarize_across_experts, ConfusionCounts, ConfusionTally, Judgment,
    MetricSummary, Metrics, Resolution, TruthResolver,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StatsError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Empty(String),
    #[error("{0}")]
    Unsupported(String),
}

impl StatsError {
    pub fn category(&self) -> &'static str {
        match self {
            StatsError::Validation(_) => "stats.validation",
            StatsError::Empty(_) => "stats.empty",
            StatsError::Unsupported(_) => "stats.unsupported",
        }
    }
}

/// Formats `x` with two decimals, rounding half away from zero on the
/// shortest decimal representation of `x` (so 0.125 -> "0.13", 2.675 -> "2.68").
pub fn fmt2(x: f64) -> String {
    let s = format!("{}", x.abs());
    let (int, frac) = s.split_once('.').unwrap_or((&s, ""));
    let mut digits: Vec<u8> = int.bytes().chain(frac.bytes().chain(std::iter::repeat(b'0')).take(2)).collect();
    if frac.as_bytes().get(2).is_some_and(|d| *d >= b'5') {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, b'1');
                break;
            }
            i -= 1;
            if digits[i] == b'9' {
                digits[i] = b'0';
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let split = digits.len() - 2;
    let body = format!(
        "{}.{}",
        std::str::from_utf8(&digits[..split]).expect("ascii"),
        std::str::from_utf8(&digits[split..]).expect("ascii")
    );
    if x.is_sign_negative() && body.bytes().any(|b| (b'1'..=b'9').contains(&b)) {
        format!("-{body}")
    } else {
        body
    }
}

/// [`fmt2`] as a number.
pub fn round2(x: f64) -> f64 {
    fmt2(x).parse().expect("formatted number parses")
}
