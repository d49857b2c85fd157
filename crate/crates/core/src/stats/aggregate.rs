//! Likert distributions, reason cross-tabulations, per-model comparisons and
//! experience-group breakdowns.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::metrics::mean_std;
use super::StatsError;
use crate::domain::{Answer, Category, ExperienceGroup, ExpertId, ExpertProfile, Provenance};

pub type Catalog = &'static [&'static str];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LikertDistribution {
    pub counts: [u64; 5],
    pub percentages: [f64; 5],
}

impl LikertDistribution {
    pub fn from_counts(counts: [u64; 5]) -> Self {
        let total: u64 = counts.iter().sum();
        let mut percentages = [0.0; 5];
        if total > 0 {
            for (p, c) in percentages.iter_mut().zip(counts) {
                *p = 100.0 * c as f64 / total as f64;
            }
        }
        Self { counts, percentages }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Share of answers in the first two (most favourable) options, in percent.
    pub fn top2_box(&self) -> f64 {
        self.percentages[0] + self.percentages[1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LikertTable<K: Ord> {
    pub options: Catalog,
    pub groups: BTreeMap<K, LikertDistribution>,
}

/// Counts five-point answers per group key. All rows must share one catalog.
pub fn likert_aggregate<'a, K: Ord>(
    rows: impl IntoIterator<Item = (K, Catalog, &'a Answer)>,
) -> Result<LikertTable<K>, StatsError> {
    let mut options: Option<Catalog> = None;
    let mut counts: BTreeMap<K, [u64; 5]> = BTreeMap::new();
    for (key, catalog, answer) in rows {
        if catalog.len() != 5 {
            return Err(StatsError::Validation(format!(
                "catalog with {} options is not a five-point scale",
                catalog.len()
            )));
        }
        match options {
            None => options = Some(catalog),
            Some(o) if o != catalog => {
                return Err(StatsError::Validation(format!("mixed catalogs: `{}` and `{}`", o[0], catalog[0])));
            }
            Some(_) => {}
        }
        let Answer::Single(i) = answer else {
            return Err(StatsError::Validation("multi-select answer in a five-point aggregation".into()));
        };
        if *i >= 5 {
            return Err(StatsError::Validation(format!("option index {i} out of range")));
        }
        counts.entry(key).or_insert([0; 5])[*i] += 1;
    }
    let options = options.ok_or_else(|| StatsError::Empty("no answers to aggregate".into()))?;
    Ok(LikertTable {
        options,
        groups: counts.into_iter().map(|(k, c)| (k, LikertDistribution::from_counts(c))).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReasonRate {
    pub option: &'static str,
    pub overall: Option<f64>,
    pub given_correct: Option<f64>,
    pub given_incorrect: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReasonTable {
    pub rates: Vec<ReasonRate>,
    pub n_overall: u64,
    pub n_correct: u64,
    pub n_incorrect: u64,
    /// Reason answers whose item had no realness answer to join against.
    pub excluded: usize,
}

/// Selection rate of each reason, in percent, overall and conditioned on the
/// correctness of the same item's realness call. `correct = None` marks a
/// reason answer with no companion call.
pub fn reason_crosstab<'a>(
    catalog: Catalog,
    rows: impl IntoIterator<Item = (&'a Answer, Option<bool>)>,
) -> Result<ReasonTable, StatsError> {
    let k = catalog.len();
    let mut selected = [vec![0u64; k], vec![0u64; k]];
    let mut n = [0u64; 2];
    let mut excluded = 0;
    for (answer, correct) in rows {
        let Some(correct) = correct else {
            excluded += 1;
            continue;
        };
        let picks = answer.selected();
        let side = usize::from(!correct);
        n[side] += 1;
        for p in picks {
            let slot = selected[side]
                .get_mut(*p)
                .ok_or_else(|| StatsError::Validation(format!("reason index {p} out of range")))?;
            *slot += 1;
        }
    }
    let rate = |count: u64, total: u64| (total > 0).then(|| 100.0 * count as f64 / total as f64);
    let rates = (0..k)
        .map(|i| ReasonRate {
            option: catalog[i],
            overall: rate(selected[0][i] + selected[1][i], n[0] + n[1]),
            given_correct: rate(selected[0][i], n[0]),
            given_incorrect: rate(selected[1][i], n[1]),
        })
        .collect();
    Ok(ReasonTable { rates, n_overall: n[0] + n[1], n_correct: n[0], n_incorrect: n[1], excluded })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CollectionQuestion {
    Diversity,
    Realism,
}

/// One A5 rating with the label of the group it was given to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupRating {
    pub source: Provenance,
    pub category: Option<Category>,
    pub question: CollectionQuestion,
    pub option: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub source: Provenance,
    /// `None` for rows pooled over categories.
    pub category: Option<Category>,
    pub question: CollectionQuestion,
    pub distribution: LikertDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelComparison {
    pub rows: Vec<ComparisonRow>,
    /// Sources ordered by realism top-2-box rate, best first.
    pub realism_ranking: Vec<(Provenance, f64)>,
}

/// Realism and diversity distributions per source, and per category when
/// `by_category` is set (which needs category-homogeneous groups).
pub fn model_comparison(
    ratings: impl IntoIterator<Item = GroupRating>,
    by_category: bool,
) -> Result<ModelComparison, StatsError> {
    let mut counts: BTreeMap<(Provenance, Option<Category>, CollectionQuestion), [u64; 5]> = BTreeMap::new();
    for r in ratings {
        if r.option >= 5 {
            return Err(StatsError::Validation(format!("option index {} out of range", r.option)));
        }
        if by_category && r.category.is_none() {
            return Err(StatsError::Unsupported(
                "category split needs category-homogeneous groups (grouping policy homogeneous_source_category)".into(),
            ));
        }
        counts.entry((r.source, None, r.question)).or_insert([0; 5])[r.option] += 1;
        if by_category {
            counts.entry((r.source, r.category, r.question)).or_insert([0; 5])[r.option] += 1;
        }
    }
    if counts.is_empty() {
        return Err(StatsError::Empty("no collection ratings".into()));
    }
    let rows: Vec<ComparisonRow> = counts
        .into_iter()
        .map(|((source, category, question), c)| ComparisonRow {
            source,
            category,
            question,
            distribution: LikertDistribution::from_counts(c),
        })
        .collect();
    let mut realism_ranking: Vec<(Provenance, f64)> = rows
        .iter()
        .filter(|r| r.category.is_none() && r.question == CollectionQuestion::Realism)
        .map(|r| (r.source, r.distribution.top2_box()))
        .collect();
    realism_ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ModelComparison { rows, realism_ranking })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupRow {
    pub group: ExperienceGroup,
    pub experts: Vec<ExpertId>,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

/// Mean and std of a per-expert metric within each experience group.
/// Every group gets a row, empty ones with no values.
pub fn experience_breakdown(
    values: &BTreeMap<ExpertId, f64>,
    profiles: &[ExpertProfile],
) -> Result<Vec<GroupRow>, StatsError> {
    let groups: HashMap<&ExpertId, ExperienceGroup> =
        profiles.iter().map(|p| (&p.expert_id, p.experience_group())).collect();
    let mut members: BTreeMap<ExperienceGroup, Vec<(ExpertId, f64)>> =
        ExperienceGroup::ALL.iter().map(|g| (*g, Vec::new())).collect();
    for (expert, v) in values {
        let g = groups.get(expert).ok_or_else(|| StatsError::Validation(format!("no profile for expert {expert}")))?;
        members.get_mut(g).expect("all groups present").push((expert.clone(), *v));
    }
    Ok(members
        .into_iter()
        .map(|(group, m)| {
            let stats = mean_std(m.iter().map(|(_, v)| *v));
            GroupRow {
                group,
                experts: m.into_iter().map(|(e, _)| e).collect(),
                mean: stats.map(|s| s.0),
                std: stats.and_then(|s| s.1),
            }
        })
        .collect())
}
