use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::quota::{Dim, SamplingPlan, StratumKey};
use super::rng::{stream, StudyRng, LANE_GROUP, LANE_PAIR, LANE_SELECT};
use super::SamplingError;
use crate::domain::{Category, Generator, GroupingPolicy, ImageId, ImageRecord, Origin, Pool, Provenance, Source};

/// Draws exactly the plan's quota from each cell, without replacement, and
/// returns the selection in a seeded presentation order.
pub fn sample_individual_set(pool: &Pool, plan: &SamplingPlan) -> Result<Vec<ImageId>, SamplingError> {
    let mut candidates: Vec<Vec<&ImageRecord>> = Vec::with_capacity(plan.quotas.len());
    for cq in &plan.quotas {
        let mut matching: Vec<&ImageRecord> = pool.records().iter().filter(|r| cq.cell.matches(r)).collect();
        if matching.len() < cq.quota {
            return Err(SamplingError::UnderPopulated {
                cell: cq.cell.to_string(),
                needed: cq.quota,
                available: matching.len(),
            });
        }
        matching.sort_by(|a, b| a.image_id.cmp(&b.image_id));
        candidates.push(matching);
    }

    let mut rng = stream(plan.seed, LANE_SELECT);
    let mut chosen = Vec::with_capacity(plan.total);
    for (cq, matching) in plan.quotas.iter().zip(&candidates) {
        let mut picks = index::sample(&mut rng, matching.len(), cq.quota).into_vec();
        picks.sort_unstable();
        chosen.extend(picks.into_iter().map(|i| matching[i].image_id.clone()));
    }
    chosen.shuffle(&mut rng);
    Ok(chosen)
}

/// A real/synthetic pair in presentation slots. Which slot holds the real
/// image is resolved from the pool, never stored on the pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImagePair {
    pub slot1: ImageId,
    pub slot2: ImageId,
}

/// Pairs every real image with a synthetic one of the same category and
/// origin. Slot order is a fair coin per pair.
pub fn build_a4_pairs(
    real: &[&ImageRecord],
    synthetic: &[&ImageRecord],
    seed: u64,
) -> Result<Vec<ImagePair>, SamplingError> {
    if let Some(r) = real.iter().find(|r| r.source != Source::Real) {
        return Err(SamplingError::Pairing(format!("`{}` in the real subset is synthetic", r.image_id)));
    }
    if let Some(r) = synthetic.iter().find(|r| r.source != Source::Synthetic) {
        return Err(SamplingError::Pairing(format!("`{}` in the synthetic subset is real", r.image_id)));
    }

    let real_cells = bucket_by_cell(real);
    let synth_cells = bucket_by_cell(synthetic);
    let keys: std::collections::BTreeSet<(Category, Origin)> =
        real_cells.keys().chain(synth_cells.keys()).copied().collect();
    for k in &keys {
        let nr = real_cells.get(k).map_or(0, Vec::len);
        let ns = synth_cells.get(k).map_or(0, Vec::len);
        if nr != ns {
            return Err(SamplingError::Pairing(format!(
                "cell category={}/origin={} has {nr} real and {ns} synthetic images",
                k.0.label(),
                k.1.label()
            )));
        }
    }

    let mut rng = stream(seed, LANE_PAIR);
    let mut pairs = Vec::with_capacity(real.len());
    for k in &keys {
        let mut r = real_cells[k].clone();
        let mut s = synth_cells[k].clone();
        r.shuffle(&mut rng);
        s.shuffle(&mut rng);
        for (ri, si) in r.into_iter().zip(s) {
            let (slot1, slot2) = if rng.random_bool(0.5) {
                (ri.image_id.clone(), si.image_id.clone())
            } else {
                (si.image_id.clone(), ri.image_id.clone())
            };
            pairs.push(ImagePair { slot1, slot2 });
        }
    }
    pairs.shuffle(&mut rng);
    Ok(pairs)
}

fn bucket_by_cell<'a>(records: &[&'a ImageRecord]) -> BTreeMap<(Category, Origin), Vec<&'a ImageRecord>> {
    let mut m: BTreeMap<(Category, Origin), Vec<&ImageRecord>> = BTreeMap::new();
    for r in records {
        m.entry((r.category, r.origin)).or_default().push(r);
    }
    for v in m.values_mut() {
        v.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupLabel {
    pub source: Provenance,
    /// Present when the grouping policy keeps categories apart.
    pub category: Option<Category>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageGroup {
    pub label: GroupLabel,
    pub images: Vec<ImageId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leftover {
    pub label: GroupLabel,
    pub images: Vec<ImageId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSet {
    pub policy: GroupingPolicy,
    pub groups: Vec<ImageGroup>,
    /// Images that did not fill a whole group.
    pub leftovers: Vec<Leftover>,
}

/// Expected sizes of the A5 parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct A5Shape {
    pub group_size: usize,
    pub real_images: usize,
    pub images_per_generator: usize,
}

/// Chunks the A5 parts into single-source groups.
///
/// Within a partition, images are dealt round-robin across their
/// (category, origin) cells before chunking so that every group sees the
/// partition's cells in near-equal numbers.
pub fn build_a5_groups(
    real: &[&ImageRecord],
    synthetic: &BTreeMap<Generator, Vec<&ImageRecord>>,
    policy: GroupingPolicy,
    shape: A5Shape,
    seed: u64,
) -> Result<GroupSet, SamplingError> {
    if shape.group_size == 0 {
        return Err(SamplingError::Construction("group size must be positive".into()));
    }
    if real.len() != shape.real_images {
        return Err(SamplingError::Construction(format!(
            "real part has {} images, expected {}",
            real.len(),
            shape.real_images
        )));
    }
    if let Some(r) = real.iter().find(|r| r.source != Source::Real) {
        return Err(SamplingError::Construction(format!("`{}` in the real part is synthetic", r.image_id)));
    }
    if synthetic.is_empty() {
        return Err(SamplingError::Construction("no generator subsets supplied".into()));
    }
    for (g, subset) in synthetic {
        if subset.is_empty() {
            return Err(SamplingError::Construction(format!("generator subset {} is empty", g.label())));
        }
        if subset.len() != shape.images_per_generator {
            return Err(SamplingError::Construction(format!(
                "generator subset {} has {} images, expected {}",
                g.label(),
                subset.len(),
                shape.images_per_generator
            )));
        }
        if let Some(r) = subset.iter().find(|r| r.generator != Some(*g)) {
            return Err(SamplingError::Construction(format!(
                "`{}` does not belong to generator subset {}",
                r.image_id,
                g.label()
            )));
        }
    }

    let mut rng = stream(seed, LANE_GROUP);
    let mut parts: Vec<(Provenance, &[&ImageRecord])> = vec![(Provenance::Real, real)];
    parts.extend(synthetic.iter().map(|(g, v)| (Provenance::Synthetic(*g), v.as_slice())));

    let mut groups = Vec::new();
    let mut leftovers = Vec::new();
    for (source, records) in parts {
        let partitions: Vec<(Option<Category>, Vec<&ImageRecord>)> = match policy {
            GroupingPolicy::HomogeneousSourceMixed => vec![(None, records.to_vec())],
            GroupingPolicy::HomogeneousSourceCategory => Category::ALL
                .iter()
                .map(|c| (Some(*c), records.iter().copied().filter(|r| r.category == *c).collect()))
                .collect(),
        };
        for (category, members) in partitions {
            let label = GroupLabel { source, category };
            let mut dealt = deal_round_robin(&members, &mut rng);
            let whole = dealt.len() / shape.group_size * shape.group_size;
            let rest = dealt.split_off(whole);
            for chunk in dealt.chunks(shape.group_size) {
                let mut images = chunk.to_vec();
                images.shuffle(&mut rng);
                groups.push(ImageGroup { label, images });
            }
            if !rest.is_empty() {
                leftovers.push(Leftover { label, images: rest });
            }
        }
    }
    groups.shuffle(&mut rng);
    Ok(GroupSet { policy, groups, leftovers })
}

fn deal_round_robin(records: &[&ImageRecord], rng: &mut StudyRng) -> Vec<ImageId> {
    let mut cells: BTreeMap<StratumKey, Vec<ImageId>> = BTreeMap::new();
    for r in records {
        cells.entry(StratumKey::of(r, &[Dim::Category, Dim::Origin])).or_default().push(r.image_id.clone());
    }
    let mut queues: Vec<Vec<ImageId>> = cells
        .into_values()
        .map(|mut v| {
            v.sort();
            v.shuffle(rng);
            v
        })
        .collect();
    let mut out = Vec::with_capacity(records.len());
    while queues.iter().any(|q| !q.is_empty()) {
        for q in queues.iter_mut() {
            if let Some(id) = q.pop() {
                out.push(id);
            }
        }
    }
    out
}
