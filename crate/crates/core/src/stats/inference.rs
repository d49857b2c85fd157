//! Interval estimates and hypothesis tests on pooled counts.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::special::{chi2_sf, ln_gamma};
use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProportionCI {
    pub p_hat: f64,
    pub n: u64,
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Two-sided standard normal quantile for a confidence level.
pub fn z_for_level(level: f64) -> f64 {
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    std.inverse_cdf(0.5 + level / 2.0)
}

/// Wald interval p̂ ± z·sqrt(p̂(1−p̂)/n), clipped to [0, 1].
pub fn wald_ci(k: u64, n: u64, level: f64) -> Result<ProportionCI, StatsError> {
    if n == 0 || k > n {
        return Err(StatsError::Validation(format!("wald_ci needs 0 <= k <= n and n >= 1 (k={k}, n={n})")));
    }
    wald_ci_from_rate(k as f64 / n as f64, n, level)
}

/// Same interval from an already pooled rate, for published proportions
/// whose counts are not integers.
pub fn wald_ci_from_rate(p_hat: f64, n: u64, level: f64) -> Result<ProportionCI, StatsError> {
    if n == 0 || !(0.0..=1.0).contains(&p_hat) {
        return Err(StatsError::Validation(format!("wald_ci needs p in [0,1] and n >= 1 (p={p_hat}, n={n})")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::Validation(format!("confidence level must be in (0,1), got {level}")));
    }
    let half = z_for_level(level) * (p_hat * (1.0 - p_hat) / n as f64).sqrt();
    Ok(ProportionCI { p_hat, n, level, lower: (p_hat - half).max(0.0), upper: (p_hat + half).min(1.0) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    TwoSided,
    /// P(X <= observed).
    OneSidedLower,
    /// P(X >= observed); the chi-square test is always upper-tailed.
    UpperTail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub sidedness: Sidedness,
    pub df: Option<u32>,
}

/// Relative tolerance when comparing point probabilities in the two-sided test.
const TWO_SIDED_RELATIVE_EPS: f64 = 1e-7;

fn ln_binom_pmf(i: u64, n: u64, ln_p: f64, ln_q: f64) -> f64 {
    let (i, n) = (i as f64, n as f64);
    ln_gamma(n + 1.0) - ln_gamma(i + 1.0) - ln_gamma(n - i + 1.0) + i * ln_p + (n - i) * ln_q
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Exact binomial test. The two-sided p-value sums every outcome no more
/// likely than the observed one.
pub fn binom_test(k: u64, n: u64, p0: f64, sidedness: Sidedness) -> Result<TestResult, StatsError> {
    if k > n {
        return Err(StatsError::Validation(format!("binom_test needs k <= n (k={k}, n={n})")));
    }
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(StatsError::Validation(format!("binom_test needs 0 < p0 < 1, got {p0}")));
    }
    let (ln_p, ln_q) = (p0.ln(), (1.0 - p0).ln());
    let logs: Vec<f64> = (0..=n).map(|i| ln_binom_pmf(i, n, ln_p, ln_q)).collect();
    let ln_p_value = match sidedness {
        Sidedness::OneSidedLower => log_sum_exp(&logs[..=k as usize]),
        Sidedness::UpperTail => log_sum_exp(&logs[k as usize..]),
        Sidedness::TwoSided => {
            let cutoff = logs[k as usize] + TWO_SIDED_RELATIVE_EPS.ln_1p();
            let tail: Vec<f64> = logs.iter().copied().filter(|l| *l <= cutoff).collect();
            log_sum_exp(&tail)
        }
    };
    Ok(TestResult { statistic: k as f64, p_value: ln_p_value.exp().min(1.0), sidedness, df: None })
}

/// Pearson goodness-of-fit test with df = cells − 1.
pub fn chi2_gof(observed: &[f64], expected: &[f64]) -> Result<TestResult, StatsError> {
    if observed.len() != expected.len() || observed.len() < 2 {
        return Err(StatsError::Validation(format!(
            "chi2_gof needs two vectors of equal length >= 2 (got {} and {})",
            observed.len(),
            expected.len()
        )));
    }
    if let Some(i) = expected.iter().position(|e| e.is_nan() || *e <= 0.0) {
        return Err(StatsError::Validation(format!("expected count in cell {} must be positive", i + 1)));
    }
    if observed.iter().any(|o| *o < 0.0 || !o.is_finite()) {
        return Err(StatsError::Validation("observed counts must be finite and non-negative".into()));
    }
    let (so, se): (f64, f64) = (observed.iter().sum(), expected.iter().sum());
    if (so - se).abs() > 1e-9 * so.max(se).max(1.0) {
        return Err(StatsError::Validation(format!("observed total {so} differs from expected total {se}")));
    }
    let statistic: f64 = observed.iter().zip(expected).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = observed.len() - 1;
    Ok(TestResult {
        statistic,
        p_value: chi2_sf(statistic, df as f64).clamp(0.0, 1.0),
        sidedness: Sidedness::UpperTail,
        df: Some(df as u32),
    })
}
