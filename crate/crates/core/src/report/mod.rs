//! Tables and figure data computed from a study's response log.

mod export;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::Serialize;
use thiserror::Error;

use crate::domain::catalog::{DIFFICULTY, QUALITY};
use crate::domain::{
    Answer, ExperienceGroup, ExpertId, ExpertProfile, GroupingPolicy, Origin, Payload, Procedure, Provenance, Question,
    Response, Source, TaskKind,
};
use crate::sampling::GroupLabel;
use crate::stats::{
    binom_test, chi2_gof, confusion_from_log, likert_aggregate, metrics, model_comparison, reason_crosstab,
    summarize_across_experts, wald_ci, CollectionQuestion, ConfusionCounts, GroupRating, Judgment, Resolution,
    Sidedness, StatsError, TruthResolver,
};
use crate::study::Study;

pub use export::{export, ExportFormat};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReportError {
    #[error("no responses recorded for study `{0}`")]
    Empty(String),
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

impl ReportError {
    pub fn category(&self) -> &'static str {
        match self {
            ReportError::Empty(_) => "report.empty",
            ReportError::Validation(_) => "report.validation",
            ReportError::Stats(e) => e.category(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Table1,
    Table2,
    Fig1,
    Difficulty,
    Reasons,
    Quality,
    RealismDiversity,
    ModelComparison,
}

impl ReportKind {
    pub const ALL: [ReportKind; 8] = [
        ReportKind::Table1,
        ReportKind::Table2,
        ReportKind::Fig1,
        ReportKind::Difficulty,
        ReportKind::Reasons,
        ReportKind::Quality,
        ReportKind::RealismDiversity,
        ReportKind::ModelComparison,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ReportKind::Table1 => "table1",
            ReportKind::Table2 => "table2",
            ReportKind::Fig1 => "fig1",
            ReportKind::Difficulty => "difficulty",
            ReportKind::Reasons => "reasons",
            ReportKind::Quality => "quality",
            ReportKind::RealismDiversity => "realism_diversity",
            ReportKind::ModelComparison => "model_comparison",
        }
    }

    pub fn columns(self) -> &'static [&'static str] {
        const METRICS: [&str; 6] = [
            "accuracy_mean",
            "accuracy_std",
            "sensitivity_mean",
            "sensitivity_std",
            "specificity_mean",
            "specificity_std",
        ];
        match self {
            ReportKind::Table1 => {
                &["procedure", METRICS[0], METRICS[1], METRICS[2], METRICS[3], METRICS[4], METRICS[5]]
            }
            ReportKind::Table2 => &[
                "procedure",
                "image_type",
                "origin",
                METRICS[0],
                METRICS[1],
                METRICS[2],
                METRICS[3],
                METRICS[4],
                METRICS[5],
            ],
            ReportKind::Fig1 => &["expert_id", "years", "group", "procedure", "accuracy"],
            ReportKind::Difficulty | ReportKind::Quality => {
                &["procedure", "image_type", "group", "option_label", "count", "percentage"]
            }
            ReportKind::Reasons => &["procedure", "image_type", "condition", "option_label", "responses", "percentage"],
            ReportKind::RealismDiversity => &["source", "question", "group", "option_label", "count", "percentage"],
            ReportKind::ModelComparison => &["source", "category", "question", "option_label", "percentage"],
        }
    }
}

impl fmt::Display for ReportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ReportKind {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ReportKind::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| ReportError::Validation(format!("unknown report kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Text(String),
    Int(u64),
    /// Percent or proportion; `None` is not applicable.
    Num(Option<f64>),
}

impl Cell {
    fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportEnvelope {
    pub study_id: String,
    pub kind: ReportKind,
    pub generated_at: DateTime<Utc>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub footnotes: Vec<String>,
}

/// Everything a report is computed from.
#[derive(Debug, Clone, Copy)]
pub struct ReportInput<'a> {
    pub study: &'a Study,
    pub responses: &'a [Response],
    pub profiles: &'a [ExpertProfile],
}

pub fn render(
    kind: ReportKind,
    input: ReportInput<'_>,
    generated_at: DateTime<Utc>,
) -> Result<ReportEnvelope, ReportError> {
    if input.responses.is_empty() {
        return Err(ReportError::Empty(input.study.id().to_string()));
    }
    let mut ctx = Ctx::new(input)?;
    let rows = match kind {
        ReportKind::Table1 => ctx.table1()?,
        ReportKind::Table2 => ctx.table2()?,
        ReportKind::Fig1 => ctx.fig1()?,
        ReportKind::Difficulty => ctx.likert_report(&[TaskKind::T2], DIFFICULTY)?,
        ReportKind::Quality => ctx.likert_report(&[TaskKind::T5, TaskKind::T5a, TaskKind::T5b], QUALITY)?,
        ReportKind::Reasons => ctx.reasons()?,
        ReportKind::RealismDiversity => ctx.realism_diversity()?,
        ReportKind::ModelComparison => ctx.model_comparison()?,
    };
    let columns = kind.columns().to_vec();
    debug_assert!(rows.iter().all(|r| r.len() == columns.len()));
    Ok(ReportEnvelope {
        study_id: input.study.id().to_string(),
        kind,
        generated_at,
        columns,
        rows,
        footnotes: ctx.footnotes,
    })
}

const WITH_TRUTH: [Procedure; 4] = [Procedure::A1, Procedure::A2, Procedure::A3, Procedure::A4];

struct Ctx<'a> {
    input: ReportInput<'a>,
    groups: HashMap<ExpertId, (u32, ExperienceGroup)>,
    footnotes: Vec<String>,
}

/// Which judgments a table row covers.
#[derive(Clone, Copy)]
struct Slice {
    procedure: Procedure,
    source: Option<Source>,
    origin: Option<Origin>,
}

impl Slice {
    fn keeps(&self, j: &Judgment) -> bool {
        j.procedure == self.procedure
            && self.source.is_none_or(|s| j.source == s)
            && self.origin.is_none_or(|o| j.origin == o)
    }
}

fn percent(x: f64) -> f64 {
    100.0 * x
}

fn source_label(s: Option<Source>) -> &'static str {
    match s {
        Some(Source::Real) => "real",
        Some(Source::Synthetic) => "synthetic",
        None => "total",
    }
}

fn origin_label(o: Option<Origin>) -> &'static str {
    o.map_or("all", Origin::label)
}

impl<'a> Ctx<'a> {
    fn new(input: ReportInput<'a>) -> Result<Self, ReportError> {
        let groups =
            input.profiles.iter().map(|p| (p.expert_id.clone(), (p.years_experience, p.experience_group()))).collect();
        let ctx = Self { input, groups, footnotes: Vec::new() };
        for r in input.responses {
            if !ctx.groups.contains_key(&r.expert_id) {
                return Err(ReportError::Validation(format!("response from unenrolled expert {}", r.expert_id)));
            }
        }
        Ok(ctx)
    }

    fn experts(&self) -> Vec<ExpertId> {
        let mut e: Vec<ExpertId> = self.input.responses.iter().map(|r| r.expert_id.clone()).collect();
        e.sort();
        e.dedup();
        e
    }

    fn tally(&self, question: Question, slice: Slice) -> Result<BTreeMap<ExpertId, ConfusionCounts>, ReportError> {
        let t = confusion_from_log(self.input.responses, self.input.study, question, |j| slice.keeps(j))?;
        Ok(t.per_expert)
    }

    /// mean/std cells for accuracy, sensitivity and specificity, in percent.
    fn metric_cells(&mut self, question: Question, slice: Slice, with_rates: bool) -> Result<Vec<Cell>, ReportError> {
        let per_expert = self.tally(question, slice)?;
        let mut acc = BTreeMap::new();
        let mut sens = BTreeMap::new();
        let mut specificity = BTreeMap::new();
        for (e, cc) in &per_expert {
            let m = metrics(cc)?;
            acc.insert(e.clone(), percent(m.accuracy));
            if let Some(s) = m.sensitivity {
                sens.insert(e.clone(), percent(s));
            }
            if let Some(s) = m.specificity {
                specificity.insert(e.clone(), percent(s));
            }
        }
        let mut cells = Vec::with_capacity(6);
        let mut push = |values: BTreeMap<ExpertId, f64>, shown: bool| -> Result<(), ReportError> {
            if !shown || values.is_empty() {
                cells.extend([Cell::Num(None), Cell::Num(None)]);
            } else {
                let s = summarize_across_experts(values)?;
                cells.extend([Cell::Num(Some(s.mean)), Cell::Num(s.std)]);
            }
            Ok(())
        };
        push(acc, true)?;
        push(sens, with_rates)?;
        push(specificity, with_rates)?;
        if per_expert.len() == 1 {
            let note = "std is NA where a row has a single expert".to_string();
            if !self.footnotes.contains(&note) {
                self.footnotes.push(note);
            }
        }
        Ok(cells)
    }

    fn table1(&mut self) -> Result<Vec<Vec<Cell>>, ReportError> {
        let mut rows = Vec::new();
        for p in WITH_TRUTH {
            let slice = Slice { procedure: p, source: None, origin: None };
            let mut row = vec![Cell::text(p.label())];
            row.extend(self.metric_cells(Question::Realness, slice, p == Procedure::A1)?);
            rows.push(row);
        }
        self.footnotes.push("realness: real images positive, synthetic negative; values in percent".into());
        Ok(rows)
    }

    fn table2(&mut self) -> Result<Vec<Vec<Cell>>, ReportError> {
        use Origin::{Kid, Kvasir};
        use Source::{Real, Synthetic};
        // (image type, origin, whether the row has data)
        type Row = (Option<Source>, Option<Origin>, bool);
        let layout: [(Procedure, &[Row]); 4] = [
            (Procedure::A1, &[(Some(Real), None, true), (Some(Synthetic), None, true), (None, None, true)]),
            (
                Procedure::A2,
                &[
                    (Some(Real), None, false),
                    (Some(Synthetic), Some(Kid), true),
                    (Some(Synthetic), Some(Kvasir), true),
                    (None, None, true),
                ],
            ),
            (
                Procedure::A3,
                &[
                    (Some(Real), Some(Kid), true),
                    (Some(Real), Some(Kvasir), true),
                    (Some(Synthetic), None, false),
                    (None, None, true),
                ],
            ),
            (
                Procedure::A4,
                &[
                    (Some(Real), None, true),
                    (Some(Real), Some(Kid), true),
                    (Some(Real), Some(Kvasir), true),
                    (Some(Synthetic), None, true),
                    (Some(Synthetic), Some(Kid), true),
                    (Some(Synthetic), Some(Kvasir), true),
                ],
            ),
        ];
        let mut rows = Vec::new();
        for (procedure, entries) in layout {
            for (source, origin, present) in entries {
                let mut row = vec![
                    Cell::text(procedure.label()),
                    Cell::text(source_label(*source)),
                    Cell::text(origin_label(*origin)),
                ];
                if *present {
                    let slice = Slice { procedure, source: *source, origin: *origin };
                    row.extend(self.metric_cells(Question::Abnormality, slice, true)?);
                } else {
                    row.extend(std::iter::repeat_n(Cell::Num(None), 6));
                }
                rows.push(row);
            }
        }
        self.footnotes.push("abnormality: abnormal images positive, normal negative; values in percent".into());
        Ok(rows)
    }

    fn fig1(&mut self) -> Result<Vec<Vec<Cell>>, ReportError> {
        let mut experts = self.experts();
        experts.sort_by_key(|e| (self.groups[e].0, e.clone()));
        let mut rows = Vec::new();
        for p in WITH_TRUTH {
            let per_expert = self.tally(Question::Realness, Slice { procedure: p, source: None, origin: None })?;
            let mut by_group: BTreeMap<ExperienceGroup, Vec<f64>> = BTreeMap::new();
            for e in &experts {
                let (years, group) = self.groups[e];
                let acc = per_expert.get(e).map(|cc| metrics(cc).map(|m| percent(m.accuracy))).transpose()?;
                if let Some(a) = acc {
                    by_group.entry(group).or_default().push(a);
                }
                rows.push(vec![
                    Cell::text(e.as_str()),
                    Cell::Int(u64::from(years)),
                    Cell::text(group.label()),
                    Cell::text(p.label()),
                    Cell::Num(acc),
                ]);
            }
            for g in ExperienceGroup::ALL {
                let mean = crate::stats::mean_std(by_group.remove(&g).unwrap_or_default()).map(|s| s.0);
                rows.push(vec![
                    Cell::text("group_mean"),
                    Cell::Num(None),
                    Cell::text(g.label()),
                    Cell::text(p.label()),
                    Cell::Num(mean),
                ]);
            }
        }
        self.footnotes.push("experts ordered by years of experience; group_mean rows average their group".into());
        Ok(rows)
    }

    /// image type of a single-image or slot task.
    fn image_type(&self, r: &Response) -> Option<&'static str> {
        let task = self.input.study.task(&r.task_id)?;
        let image = match (&task.payload, task.kind) {
            (Payload::Single { image }, _) => image,
            (Payload::Pair { slot1, .. }, TaskKind::T4a | TaskKind::T5a) => slot1,
            (Payload::Pair { slot2, .. }, TaskKind::T4b | TaskKind::T5b) => slot2,
            (Payload::Pair { .. }, _) => return Some("pair"),
            (Payload::Group { .. }, _) => return None,
        };
        Some(self.input.study.record(image)?.source.label())
    }

    fn likert_report(
        &mut self,
        kinds: &[TaskKind],
        catalog: &'static [&'static str],
    ) -> Result<Vec<Vec<Cell>>, ReportError> {
        let mut rows = Vec::new();
        for p in WITH_TRUTH {
            let selected: Vec<(&'static str, ExperienceGroup, &Answer)> = self
                .input
                .responses
                .iter()
                .filter_map(|r| {
                    let t = self.input.study.task(&r.task_id)?;
                    (t.procedure == p && kinds.contains(&t.kind))
                        .then(|| Some((self.image_type(r)?, self.groups[&r.expert_id].1, &r.answer)))
                        .flatten()
                })
                .collect();
            if selected.is_empty() {
                continue;
            }
            let overall = likert_aggregate(selected.iter().map(|(ty, _, a)| ((*ty, "all"), catalog, *a)))?;
            let grouped = likert_aggregate(selected.iter().map(|(ty, g, a)| ((*ty, g.label()), catalog, *a)))?;
            for ((ty, group), dist) in overall.groups.iter().chain(grouped.groups.iter()) {
                for (i, label) in catalog.iter().enumerate() {
                    rows.push(vec![
                        Cell::text(p.label()),
                        Cell::text(*ty),
                        Cell::text(*group),
                        Cell::text(*label),
                        Cell::Int(dist.counts[i]),
                        Cell::Num(Some(dist.percentages[i])),
                    ]);
                }
            }
        }
        Ok(rows)
    }

    fn reasons(&mut self) -> Result<Vec<Vec<Cell>>, ReportError> {
        let study = self.input.study;
        // correctness of each expert's realness call per item
        let mut correct: HashMap<(ExpertId, Procedure, usize), bool> = HashMap::new();
        for r in self.input.responses {
            if let Resolution::Judged(js) = study.resolve(r)? {
                for j in js.iter().filter(|j| j.question == Question::Realness) {
                    correct.insert((j.expert_id.clone(), j.procedure, j.item_index), j.is_correct());
                }
            }
        }
        let mut rows = Vec::new();
        let mut excluded = 0;
        for p in WITH_TRUTH {
            let mut by_type: BTreeMap<&'static str, Vec<(&Answer, Option<bool>)>> = BTreeMap::new();
            for r in self.input.responses {
                let Some(t) = study.task(&r.task_id) else { continue };
                if t.procedure != p || t.kind != TaskKind::T3 {
                    continue;
                }
                let ty = self.image_type(r).unwrap_or("pair");
                let c = correct.get(&(r.expert_id.clone(), p, t.item_index)).copied();
                by_type.entry(ty).or_default().push((&r.answer, c));
            }
            let catalog = crate::domain::option_catalog(p, TaskKind::T3).expect("T3 exists for A1-A4");
            for (ty, entries) in by_type {
                let table = reason_crosstab(catalog, entries)?;
                excluded += table.excluded;
                for rate in &table.rates {
                    for (cond, n, value) in [
                        ("overall", table.n_overall, rate.overall),
                        ("correct", table.n_correct, rate.given_correct),
                        ("incorrect", table.n_incorrect, rate.given_incorrect),
                    ] {
                        rows.push(vec![
                            Cell::text(p.label()),
                            Cell::text(ty),
                            Cell::text(cond),
                            Cell::text(rate.option),
                            Cell::Int(n),
                            Cell::Num(value),
                        ]);
                    }
                }
            }
        }
        if excluded > 0 {
            self.footnotes
                .push(format!("{excluded} reason answers had no realness answer for the same item and were excluded"));
        }
        self.footnotes.push("percentage = share of responses in the condition selecting the reason".into());
        Ok(rows)
    }

    fn ratings(&self) -> Vec<(GroupRating, ExperienceGroup)> {
        let study = self.input.study;
        self.input
            .responses
            .iter()
            .filter_map(|r| {
                let t = study.task(&r.task_id)?;
                if t.procedure != Procedure::A5 {
                    return None;
                }
                let GroupLabel { source, category } = study.group_label(t.item_index)?;
                let question =
                    if t.kind == TaskKind::T1 { CollectionQuestion::Diversity } else { CollectionQuestion::Realism };
                let option = r.answer.single()?;
                Some((GroupRating { source, category, question, option }, self.groups[&r.expert_id].1))
            })
            .collect()
    }

    fn realism_diversity(&mut self) -> Result<Vec<Vec<Cell>>, ReportError> {
        use crate::domain::Generator::{Tide, TideII};
        let shown = [Provenance::Real, Provenance::Synthetic(Tide), Provenance::Synthetic(TideII)];
        let ratings: Vec<_> = self.ratings().into_iter().filter(|(r, _)| shown.contains(&r.source)).collect();
        let mut rows = Vec::new();
        for question in [CollectionQuestion::Realism, CollectionQuestion::Diversity] {
            let catalog = collection_catalog(question);
            let answers: Vec<(Provenance, &'static str, Answer)> = ratings
                .iter()
                .filter(|(r, _)| r.question == question)
                .flat_map(|(r, g)| {
                    [(r.source, "all", Answer::Single(r.option)), (r.source, g.label(), Answer::Single(r.option))]
                })
                .collect();
            if answers.is_empty() {
                continue;
            }
            let table = likert_aggregate(answers.iter().map(|(s, g, a)| ((*s, *g), catalog, a)))?;
            for ((source, group), dist) in &table.groups {
                for (i, label) in catalog.iter().enumerate() {
                    rows.push(vec![
                        Cell::text(source.label()),
                        Cell::text(question_label(question)),
                        Cell::text(*group),
                        Cell::text(*label),
                        Cell::Int(dist.counts[i]),
                        Cell::Num(Some(dist.percentages[i])),
                    ]);
                }
            }
        }
        Ok(rows)
    }

    fn model_comparison(&mut self) -> Result<Vec<Vec<Cell>>, ReportError> {
        let by_category = self.input.study.config().grouping_policy == GroupingPolicy::HomogeneousSourceCategory;
        let ratings: Vec<GroupRating> = self.ratings().into_iter().map(|(r, _)| r).collect();
        if ratings.is_empty() {
            return Ok(Vec::new());
        }
        let mc = model_comparison(ratings, by_category)?;
        let mut rows = Vec::new();
        for row in &mc.rows {
            let catalog = collection_catalog(row.question);
            for (i, label) in catalog.iter().enumerate() {
                rows.push(vec![
                    Cell::text(row.source.label()),
                    Cell::text(row.category.map_or("all", |c| c.label())),
                    Cell::text(question_label(row.question)),
                    Cell::text(*label),
                    Cell::Num(Some(row.distribution.percentages[i])),
                ]);
            }
        }
        let ranking: Vec<String> =
            mc.realism_ranking.iter().map(|(s, v)| format!("{} {}", s.label(), crate::stats::fmt2(*v))).collect();
        self.footnotes.push(format!("realism top-2-box ranking: {}", ranking.join(", ")));
        if !by_category {
            self.footnotes.push("groups mix categories under this grouping policy; no per-category rows".into());
        }
        Ok(rows)
    }
}

fn collection_catalog(q: CollectionQuestion) -> &'static [&'static str] {
    let kind = match q {
        CollectionQuestion::Diversity => TaskKind::T1,
        CollectionQuestion::Realism => TaskKind::T2,
    };
    crate::domain::option_catalog(Procedure::A5, kind).expect("A5 catalogs exist")
}

fn question_label(q: CollectionQuestion) -> &'static str {
    match q {
        CollectionQuestion::Diversity => "diversity",
        CollectionQuestion::Realism => "realism",
    }
}

/// Pooled realness inference for one procedure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InferenceRow {
    pub procedure: Procedure,
    /// Images the proportion is over: "real", "synthetic" or "all".
    pub subset: &'static str,
    pub correct: u64,
    pub n: u64,
    pub p_hat: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub test: Option<&'static str>,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
}

/// Pooled proportions of correct realness calls with Wald 95% intervals and
/// a test against chance. A1 gets a chi-square goodness-of-fit over the four
/// (class, correct/incorrect) cells against half-correct expectations; A2 a
/// one-sided lower binomial; A3 and A4 a two-sided binomial. A4 counts each
/// pair once.
pub fn realness_inference(input: ReportInput<'_>) -> Result<Vec<InferenceRow>, ReportError> {
    if input.responses.is_empty() {
        return Err(ReportError::Empty(input.study.id().to_string()));
    }
    let pooled = |p: Procedure, source: Option<Source>| -> Result<(u64, u64), ReportError> {
        let slice = Slice { procedure: p, source, origin: None };
        let cc = confusion_from_log(input.responses, input.study, Question::Realness, |j| slice.keeps(j))?.pooled();
        Ok((cc.correct(), cc.total()))
    };
    let mut rows = Vec::new();
    let mut push = |procedure, subset, (k, n): (u64, u64), test: Option<(&'static str, crate::stats::TestResult)>| {
        if n == 0 {
            return Ok::<_, ReportError>(());
        }
        let ci = wald_ci(k, n, 0.95)?;
        rows.push(InferenceRow {
            procedure,
            subset,
            correct: k,
            n,
            p_hat: ci.p_hat,
            ci_lower: ci.lower,
            ci_upper: ci.upper,
            test: test.as_ref().map(|t| t.0),
            statistic: test.as_ref().map(|t| t.1.statistic),
            p_value: test.as_ref().map(|t| t.1.p_value),
        });
        Ok(())
    };

    let real = pooled(Procedure::A1, Some(Source::Real))?;
    let synth = pooled(Procedure::A1, Some(Source::Synthetic))?;
    push(Procedure::A1, "real", real, None)?;
    push(Procedure::A1, "synthetic", synth, None)?;
    if real.1 > 0 && synth.1 > 0 {
        let observed = [real.0, real.1 - real.0, synth.0, synth.1 - synth.0].map(|c| c as f64);
        let (hr, hs) = (real.1 as f64 / 2.0, synth.1 as f64 / 2.0);
        let chi = chi2_gof(&observed, &[hr, hr, hs, hs])?;
        push(Procedure::A1, "all", (real.0 + synth.0, real.1 + synth.1), Some(("chi2_gof", chi)))?;
    }
    for (p, sidedness, name) in [
        (Procedure::A2, Sidedness::OneSidedLower, "binom_one_sided_lower"),
        (Procedure::A3, Sidedness::TwoSided, "binom_two_sided"),
    ] {
        let (k, n) = pooled(p, None)?;
        let test = if n > 0 { Some((name, binom_test(k, n, 0.5, sidedness)?)) } else { None };
        push(p, "all", (k, n), test)?;
    }
    // a pair's two judgments mirror each other; the real slot's call stands for the pair
    let (k, n) = pooled(Procedure::A4, Some(Source::Real))?;
    let test = if n > 0 { Some(("binom_two_sided", binom_test(k, n, 0.5, Sidedness::TwoSided)?)) } else { None };
    push(Procedure::A4, "all", (k, n), test)?;
    Ok(rows)
}
