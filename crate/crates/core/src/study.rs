//! Study materialization: every procedure's items are sampled once, frozen,
//! and expanded into the task schedule shared by all experts.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::Range;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::domain::{
    DomainError, ExpertId, Generator, ImageId, ImageRecord, Payload, Pool, Procedure, Source, StudyConfig, TaskId,
    TaskInstance,
};
use crate::sampling::rng::{derive_seed, label_tag, stream, LANE_QUOTA};
use crate::sampling::{
    build_a4_pairs, build_a5_groups, plan_quotas, sample_individual_set, A5Shape, Dim, DimValue, GroupLabel, GroupSet,
    ImagePair, SamplingError, SamplingPlan, StratumKey,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StudyError {
    #[error("invalid study config: {0}")]
    Config(#[from] DomainError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error("frozen plans do not match the pool: {0}")]
    Inconsistent(String),
}

impl StudyError {
    pub fn category(&self) -> &'static str {
        match self {
            StudyError::Config(_) => "config.invalid",
            StudyError::Sampling(e) => e.category(),
            StudyError::Inconsistent(_) => "study.inconsistent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndividualSet {
    pub plan: SamplingPlan,
    pub images: Vec<ImageId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSet {
    pub real_plan: SamplingPlan,
    pub synthetic_plan: SamplingPlan,
    pub pairs: Vec<ImagePair>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionSet {
    pub real_plan: SamplingPlan,
    pub generator_plans: Vec<SamplingPlan>,
    pub groups: GroupSet,
}

/// The frozen output of sampling. Serialized verbatim into the study file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyPlans {
    pub a1: IndividualSet,
    pub a2: IndividualSet,
    pub a3: IndividualSet,
    pub a4: PairSet,
    pub a5: CollectionSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyFile {
    pub config: StudyConfig,
    pub plans: StudyPlans,
}

#[derive(Debug, Clone)]
pub struct Study {
    config: StudyConfig,
    pool: Pool,
    plans: StudyPlans,
    tasks: Vec<TaskInstance>,
    task_index: HashMap<TaskId, usize>,
    spans: Vec<(Procedure, Range<usize>, usize)>,
    handles: HashMap<ImageId, String>,
    by_handle: HashMap<String, ImageId>,
}

/// Samples all five procedures from `pool` and freezes the result.
pub fn create_study(config: StudyConfig, pool: Pool) -> Result<Study, StudyError> {
    config.validate()?;
    let plans = materialize(&config, &pool)?;
    Study::from_plans(config, pool, plans)
}

fn key(values: impl IntoIterator<Item = DimValue>) -> StratumKey {
    StratumKey::new(values).expect("fixed keys name distinct dimensions")
}

fn records<'a>(pool: &'a Pool, ids: &[ImageId]) -> Vec<&'a ImageRecord> {
    ids.iter().filter_map(|id| pool.get(id)).collect()
}

fn materialize(config: &StudyConfig, pool: &Pool) -> Result<StudyPlans, StudyError> {
    let c = &config.counts;
    let target = config.target_generator;
    let seed_of = |p: Procedure| derive_seed(config.seed, p.stream_tag());
    let cat_origin = [Dim::Category, Dim::Origin];
    let real = key([DimValue::Source(Source::Real)]);
    let synthetic_of = |g: Generator| key([DimValue::Source(Source::Synthetic), DimValue::Generator(g)]);

    let individual = |plan: SamplingPlan| -> Result<IndividualSet, StudyError> {
        let images = sample_individual_set(pool, &plan)?;
        Ok(IndividualSet { plan, images })
    };

    let a1 = individual(SamplingPlan::build(
        Procedure::A1,
        c.a1_images,
        StratumKey::empty(),
        &[Dim::Source, Dim::Category, Dim::Origin],
        Some(target),
        seed_of(Procedure::A1),
    )?)?;
    let a2 = individual(SamplingPlan::build(
        Procedure::A2,
        c.a2_images,
        synthetic_of(target),
        &cat_origin,
        None,
        seed_of(Procedure::A2),
    )?)?;
    let a3 = individual(SamplingPlan::build(
        Procedure::A3,
        c.a3_images,
        real.clone(),
        &cat_origin,
        None,
        seed_of(Procedure::A3),
    )?)?;

    let a4_seed = seed_of(Procedure::A4);
    let shared = plan_quotas(c.a4_pairs, &cat_origin, &mut stream(a4_seed, LANE_QUOTA))?;
    let real_plan =
        SamplingPlan::with_quotas(Procedure::A4, real.clone(), &cat_origin, &shared, None, derive_seed(a4_seed, 1))?;
    let synthetic_plan = SamplingPlan::with_quotas(
        Procedure::A4,
        synthetic_of(target),
        &cat_origin,
        &shared,
        None,
        derive_seed(a4_seed, 2),
    )?;
    let real_ids = sample_individual_set(pool, &real_plan)?;
    let synth_ids = sample_individual_set(pool, &synthetic_plan)?;
    let pairs = build_a4_pairs(&records(pool, &real_ids), &records(pool, &synth_ids), a4_seed)?;
    let a4 = PairSet { real_plan, synthetic_plan, pairs };

    let a5_seed = seed_of(Procedure::A5);
    let real_plan = SamplingPlan::build(
        Procedure::A5,
        c.a5_real_images,
        real,
        &cat_origin,
        None,
        derive_seed(a5_seed, label_tag("real")),
    )?;
    let real_part = sample_individual_set(pool, &real_plan)?;
    let mut generator_plans = Vec::new();
    let mut synthetic_parts = BTreeMap::new();
    for g in &c.a5_generators {
        let plan = SamplingPlan::build(
            Procedure::A5,
            c.a5_images_per_generator,
            synthetic_of(*g),
            &cat_origin,
            None,
            derive_seed(a5_seed, label_tag(g.label())),
        )?;
        synthetic_parts.insert(*g, sample_individual_set(pool, &plan)?);
        generator_plans.push(plan);
    }
    let synthetic_records: BTreeMap<Generator, Vec<&ImageRecord>> =
        synthetic_parts.iter().map(|(g, ids)| (*g, records(pool, ids))).collect();
    let groups = build_a5_groups(
        &records(pool, &real_part),
        &synthetic_records,
        config.grouping_policy,
        A5Shape {
            group_size: c.a5_group_size,
            real_images: c.a5_real_images,
            images_per_generator: c.a5_images_per_generator,
        },
        a5_seed,
    )?;
    let a5 = CollectionSet { real_plan, generator_plans, groups };

    Ok(StudyPlans { a1, a2, a3, a4, a5 })
}

impl Study {
    /// Rebuilds a study from frozen plans, checking that every referenced image exists.
    pub fn from_plans(config: StudyConfig, pool: Pool, plans: StudyPlans) -> Result<Self, StudyError> {
        let mut payloads: Vec<(Procedure, Vec<Payload>)> = Vec::new();
        for (p, set) in [(Procedure::A1, &plans.a1), (Procedure::A2, &plans.a2), (Procedure::A3, &plans.a3)] {
            payloads.push((p, set.images.iter().map(|id| Payload::Single { image: id.clone() }).collect()));
        }
        payloads.push((
            Procedure::A4,
            plans
                .a4
                .pairs
                .iter()
                .map(|pair| Payload::Pair { slot1: pair.slot1.clone(), slot2: pair.slot2.clone() })
                .collect(),
        ));
        payloads.push((
            Procedure::A5,
            plans.a5.groups.groups.iter().map(|g| Payload::Group { images: g.images.clone() }).collect(),
        ));

        let mut tasks = Vec::new();
        let mut spans = Vec::new();
        for (procedure, items) in payloads {
            let start = tasks.len();
            for (i, payload) in items.iter().enumerate() {
                for id in payload.images() {
                    if pool.get(id).is_none() {
                        return Err(StudyError::Inconsistent(format!(
                            "{procedure} item {} references unknown image `{id}`",
                            i + 1
                        )));
                    }
                }
                for kind in procedure.task_kinds() {
                    tasks.push(TaskInstance::new(procedure, i, *kind, payload.clone())?);
                }
            }
            spans.push((procedure, start..tasks.len(), items.len()));
        }
        let task_index = tasks.iter().enumerate().map(|(i, t)| (t.task_id.clone(), i)).collect();

        let mut handles = HashMap::new();
        let mut by_handle = HashMap::new();
        for t in &tasks {
            for id in t.payload.images() {
                if !handles.contains_key(id) {
                    let h = image_handle(&config, id);
                    by_handle.insert(h.clone(), id.clone());
                    handles.insert(id.clone(), h);
                }
            }
        }

        Ok(Self { config, pool, plans, tasks, task_index, spans, handles, by_handle })
    }

    pub fn id(&self) -> &str {
        &self.config.study_id
    }

    pub fn config(&self) -> &StudyConfig {
        &self.config
    }

    pub fn pool(&self) -> &Pool {
        &self.pool
    }

    pub fn plans(&self) -> &StudyPlans {
        &self.plans
    }

    pub fn file(&self) -> StudyFile {
        StudyFile { config: self.config.clone(), plans: self.plans.clone() }
    }

    /// Canonical byte serialization of the frozen plans.
    pub fn plan_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&self.plans).expect("plans serialize")
    }

    pub fn plan_digest(&self) -> String {
        hex::encode(Sha256::digest(self.plan_bytes()))
    }

    /// The canonical task schedule, A1 through A5.
    pub fn tasks(&self) -> &[TaskInstance] {
        &self.tasks
    }

    pub fn task(&self, id: &TaskId) -> Option<&TaskInstance> {
        self.task_index.get(id).map(|i| &self.tasks[*i])
    }

    pub fn task_position(&self, id: &TaskId) -> Option<usize> {
        self.task_index.get(id).copied()
    }

    pub fn record(&self, id: &ImageId) -> Option<&ImageRecord> {
        self.pool.get(id)
    }

    pub fn item_count(&self, procedure: Procedure) -> usize {
        self.spans.iter().find(|s| s.0 == procedure).map_or(0, |s| s.2)
    }

    /// Opaque per-study reference used on the wire instead of the manifest id.
    pub fn image_handle(&self, id: &ImageId) -> Option<&str> {
        self.handles.get(id).map(String::as_str)
    }

    pub fn image_for_handle(&self, handle: &str) -> Option<&ImageId> {
        self.by_handle.get(handle)
    }

    pub fn group_label(&self, item_index: usize) -> Option<GroupLabel> {
        self.plans.a5.groups.groups.get(item_index).map(|g| g.label)
    }

    /// Which image sits in the real slot of an A4 pair (1 or 2).
    pub fn real_slot(&self, item_index: usize) -> Option<u8> {
        let pair = self.plans.a4.pairs.get(item_index)?;
        let first = self.pool.get(&pair.slot1)?;
        Some(if first.source == Source::Real { 1 } else { 2 })
    }

    /// Task order for one expert: the canonical schedule, or with items
    /// permuted inside each procedure when per-expert shuffling is on.
    pub fn schedule_for(&self, expert: &ExpertId) -> Vec<usize> {
        if !self.config.shuffle_per_expert {
            return (0..self.tasks.len()).collect();
        }
        let mut order = Vec::with_capacity(self.tasks.len());
        for (procedure, range, items) in &self.spans {
            let per_item = procedure.task_kinds().len();
            let mut item_order: Vec<usize> = (0..*items).collect();
            let mut rng = stream(self.config.seed, procedure.stream_tag() ^ label_tag(expert.as_str()));
            item_order.shuffle(&mut rng);
            for i in item_order {
                let first = range.start + i * per_item;
                order.extend(first..first + per_item);
            }
        }
        order
    }

    pub fn summary(&self) -> PlanSummary {
        let margin_of = |plan: &SamplingPlan, dims: &[Dim]| -> Vec<(String, usize)> {
            dims.iter()
                .flat_map(|d| plan.margins(*d).into_iter().map(|(v, n)| (format!("{}={}", d.label(), v.label()), n)))
                .collect()
        };
        let mut groups: BTreeMap<String, usize> = BTreeMap::new();
        for g in &self.plans.a5.groups.groups {
            *groups.entry(group_label_text(&g.label)).or_insert(0) += 1;
        }
        PlanSummary {
            study_id: self.config.study_id.clone(),
            seed: self.config.seed,
            a1_images: self.plans.a1.images.len(),
            a1_margins: margin_of(&self.plans.a1.plan, &[Dim::Source, Dim::Category, Dim::Origin]),
            a2_images: self.plans.a2.images.len(),
            a2_margins: margin_of(&self.plans.a2.plan, &[Dim::Category, Dim::Origin]),
            a3_images: self.plans.a3.images.len(),
            a3_margins: margin_of(&self.plans.a3.plan, &[Dim::Category, Dim::Origin]),
            a4_pairs: self.plans.a4.pairs.len(),
            a5_groups: self.plans.a5.groups.groups.len(),
            a5_groups_by_label: groups,
            a5_leftover_images: self.plans.a5.groups.leftovers.iter().map(|l| l.images.len()).sum(),
            tasks_per_expert: self.tasks.len(),
            plan_digest: self.plan_digest(),
        }
    }
}

pub fn group_label_text(label: &GroupLabel) -> String {
    match label.category {
        Some(c) => format!("{}/{}", label.source.label(), c.label()),
        None => label.source.label().to_string(),
    }
}

fn image_handle(config: &StudyConfig, id: &ImageId) -> String {
    let mut h = Sha256::new();
    h.update(config.study_id.as_bytes());
    h.update(config.seed.to_le_bytes());
    h.update(id.as_str().as_bytes());
    format!("img-{}", &hex::encode(h.finalize())[..24])
}

/// Counts printed after study creation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlanSummary {
    pub study_id: String,
    pub seed: u64,
    pub a1_images: usize,
    pub a1_margins: Vec<(String, usize)>,
    pub a2_images: usize,
    pub a2_margins: Vec<(String, usize)>,
    pub a3_images: usize,
    pub a3_margins: Vec<(String, usize)>,
    pub a4_pairs: usize,
    pub a5_groups: usize,
    pub a5_groups_by_label: BTreeMap<String, usize>,
    pub a5_leftover_images: usize,
    pub tasks_per_expert: usize,
    pub plan_digest: String,
}

impl fmt::Display for PlanSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let margins = |m: &[(String, usize)]| m.iter().map(|(k, v)| format!("{k}:{v}")).collect::<Vec<_>>().join(" ");
        writeln!(f, "study {} (seed {})", self.study_id, self.seed)?;
        writeln!(f, "A1 images {:>4}  {}", self.a1_images, margins(&self.a1_margins))?;
        writeln!(f, "A2 images {:>4}  {}", self.a2_images, margins(&self.a2_margins))?;
        writeln!(f, "A3 images {:>4}  {}", self.a3_images, margins(&self.a3_margins))?;
        writeln!(f, "A4 pairs  {:>4}", self.a4_pairs)?;
        let groups = self.a5_groups_by_label.iter().map(|(k, v)| format!("{k}:{v}")).collect::<Vec<_>>().join(" ");
        writeln!(f, "A5 groups {:>4}  {}", self.a5_groups, groups)?;
        writeln!(f, "A5 leftover images {}", self.a5_leftover_images)?;
        writeln!(f, "tasks per expert {}", self.tasks_per_expert)?;
        write!(f, "plan digest {}", self.plan_digest)
    }
}
