//! Simulated expert panels. Each simulated expert enrolls and answers every
//! task through the engine's public session operations, drawing answers
//! from a [`SkillProfile`] with its own seeded stream.

use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::catalog::{finding_option, FINDINGS_NORMAL, REALNESS_REAL};
use crate::domain::{Answer, Category, ExpertId, Payload, Source, TaskId, TaskInstance, TaskKind};
use crate::sampling::rng::{derive_seed, stream, StudyRng};
use crate::session::{Engine, EngineError, NextTask};
use crate::study::Study;

/// Rate at which the reference panel picked the real image of a pair.
pub const REFERENCE_PAIR_RATE: f64 = 0.6682;

const LANE_SIM: u64 = 0x5349;

fn default_pair_rate() -> f64 {
    REFERENCE_PAIR_RATE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkillProfile {
    pub years_experience: u32,
    /// Probability of calling a real image real.
    pub p_correct_real: f64,
    /// Probability of calling a synthetic image fake.
    pub p_correct_synth: f64,
    /// Probability of picking the real image of a pair.
    #[serde(default = "default_pair_rate")]
    pub p_pair: f64,
    pub sens_abn: f64,
    pub spec_abn: f64,
    pub difficulty_dist: [f64; 5],
    pub quality_dist: [f64; 5],
    pub realism_dist: [f64; 5],
    pub diversity_dist: [f64; 5],
    pub reason_probs: [f64; 5],
    pub seed: u64,
}

impl SkillProfile {
    /// A profile at the reference panel's pooled rates: realness 0.65 (real) and
    /// 0.70 (synthetic), pair choice 0.6682, abnormality sensitivity 0.712
    /// and specificity 0.864 (A1 totals).
    pub fn reference(years_experience: u32, seed: u64) -> Self {
        Self {
            years_experience,
            p_correct_real: 0.65,
            p_correct_synth: 0.70,
            p_pair: REFERENCE_PAIR_RATE,
            sens_abn: 0.712,
            spec_abn: 0.864,
            difficulty_dist: [0.10, 0.30, 0.25, 0.25, 0.10],
            quality_dist: [0.15, 0.35, 0.25, 0.15, 0.10],
            realism_dist: [0.15, 0.30, 0.25, 0.20, 0.10],
            diversity_dist: [0.10, 0.30, 0.30, 0.20, 0.10],
            reason_probs: [0.30, 0.40, 0.20, 0.18, 0.25],
            seed,
        }
    }

    /// Ten experts split 3/4/3 across the experience groups, 5 to 27 years.
    pub fn reference_panel(seed: u64) -> Vec<Self> {
        [5, 7, 9, 11, 13, 16, 19, 22, 25, 27]
            .into_iter()
            .enumerate()
            .map(|(i, years)| Self::reference(years, derive_seed(seed, i as u64)))
            .collect()
    }

    /// Always right on every binary question.
    pub fn oracle(years_experience: u32, seed: u64) -> Self {
        Self {
            p_correct_real: 1.0,
            p_correct_synth: 1.0,
            p_pair: 1.0,
            sens_abn: 1.0,
            spec_abn: 1.0,
            ..Self::reference(years_experience, seed)
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let probs = [
            ("p_correct_real", self.p_correct_real),
            ("p_correct_synth", self.p_correct_synth),
            ("p_pair", self.p_pair),
            ("sens_abn", self.sens_abn),
            ("spec_abn", self.spec_abn),
        ];
        let reasons = self.reason_probs.iter().map(|p| ("reason_probs", *p));
        for (name, p) in probs.into_iter().chain(reasons) {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::Profile(format!("{name} = {p} is not a probability")));
            }
        }
        for (name, dist) in [
            ("difficulty_dist", &self.difficulty_dist),
            ("quality_dist", &self.quality_dist),
            ("realism_dist", &self.realism_dist),
            ("diversity_dist", &self.diversity_dist),
        ] {
            let sum: f64 = dist.iter().sum();
            if dist.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-9 {
                return Err(SimError::Profile(format!("{name} must be probabilities summing to 1 (sum {sum})")));
            }
        }
        Ok(())
    }
}

pub fn read_profiles(path: &Path) -> Result<Vec<SkillProfile>, SimError> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::Profile(format!("{}: {e}", path.display())))?;
    let profiles: Vec<SkillProfile> =
        serde_json::from_str(&text).map_err(|e| SimError::Profile(format!("{}: {e}", path.display())))?;
    if profiles.is_empty() {
        return Err(SimError::Profile(format!("{}: no profiles", path.display())));
    }
    profiles.iter().try_for_each(SkillProfile::validate)?;
    Ok(profiles)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("{0}")]
    Profile(String),
    #[error("task {}: {source}", task.as_ref().map_or("-", |t| t.as_str()))]
    Engine { task: Option<TaskId>, source: EngineError },
}

impl SimError {
    pub fn category(&self) -> &'static str {
        match self {
            SimError::Profile(_) => "simulate.profile",
            SimError::Engine { source, .. } => source.category(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Sequential,
    /// One thread per expert.
    Concurrent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimulatedExpert {
    pub expert_id: ExpertId,
    pub years_experience: u32,
    pub answered: usize,
}

/// Answer draws for one expert.
pub struct Rater<'a> {
    profile: &'a SkillProfile,
    rng: StudyRng,
}

impl<'a> Rater<'a> {
    pub fn new(profile: &'a SkillProfile, study_seed: u64) -> Self {
        Self { profile, rng: stream(derive_seed(study_seed, profile.seed), LANE_SIM) }
    }

    fn likert(&mut self, dist: &[f64; 5]) -> usize {
        WeightedIndex::new(dist).expect("validated distribution").sample(&mut self.rng)
    }

    fn realness(&mut self, source: Source) -> usize {
        let p = match source {
            Source::Real => self.profile.p_correct_real,
            Source::Synthetic => self.profile.p_correct_synth,
        };
        let says_real = self.rng.random_bool(p) == (source == Source::Real);
        if says_real {
            REALNESS_REAL
        } else {
            1 - REALNESS_REAL
        }
    }

    fn finding(&mut self, study: &Study, image: &crate::domain::ImageId) -> usize {
        let record = study.record(image).expect("task images are in the pool");
        match record.category {
            Category::Abnormal if self.rng.random_bool(self.profile.sens_abn) => finding_option(record.lesion),
            Category::Abnormal => FINDINGS_NORMAL,
            Category::Normal if self.rng.random_bool(self.profile.spec_abn) => FINDINGS_NORMAL,
            Category::Normal => self.rng.random_range(1..5),
        }
    }

    fn reasons(&mut self) -> Vec<usize> {
        let probs = self.profile.reason_probs;
        let mut picked: Vec<usize> = (0..probs.len()).filter(|i| self.rng.random_bool(probs[*i])).collect();
        if picked.is_empty() {
            // at least one reason is required; fall back to the likeliest
            let top = (0..probs.len()).fold(0, |best, i| if probs[i] > probs[best] { i } else { best });
            picked.push(top);
        }
        picked
    }

    pub fn answer(&mut self, study: &Study, task: &TaskInstance) -> Answer {
        let p = self.profile;
        let index = match (&task.payload, task.kind) {
            (_, TaskKind::T3) => return Answer::Multi(self.reasons()),
            (Payload::Single { image }, TaskKind::T1) => {
                self.realness(study.record(image).expect("task images are in the pool").source)
            }
            (Payload::Single { image }, TaskKind::T4) => self.finding(study, image),
            (Payload::Pair { .. }, TaskKind::T1) => {
                let real = usize::from(study.real_slot(task.item_index).expect("pair exists")) - 1;
                if self.rng.random_bool(p.p_pair) {
                    real
                } else {
                    1 - real
                }
            }
            (Payload::Pair { slot1, .. }, TaskKind::T4a) => self.finding(study, slot1),
            (Payload::Pair { slot2, .. }, TaskKind::T4b) => self.finding(study, slot2),
            (Payload::Group { .. }, TaskKind::T1) => self.likert(&p.diversity_dist),
            (Payload::Group { .. }, _) => self.likert(&p.realism_dist),
            (_, TaskKind::T2) => self.likert(&p.difficulty_dist),
            (_, _) => self.likert(&p.quality_dist),
        };
        Answer::Single(index)
    }
}

fn run_session(engine: &Engine, token: &str, profile: &SkillProfile) -> Result<usize, SimError> {
    let study = engine.study();
    let mut rater = Rater::new(profile, study.config().seed);
    let mut answered = 0;
    loop {
        let next = engine.next_task(token).map_err(|source| SimError::Engine { task: None, source })?;
        let NextTask::Task { task, .. } = next else { return Ok(answered) };
        let answer = rater.answer(study, &task);
        engine
            .submit(token, &task.task_id, &answer)
            .map_err(|source| SimError::Engine { task: Some(task.task_id.clone()), source })?;
        answered += 1;
    }
}

/// Enrolls one expert per profile (in order) and completes their sessions.
/// Answers depend only on the study seed and each profile's seed.
pub fn simulate_panel(
    engine: &Engine,
    profiles: &[SkillProfile],
    mode: RunMode,
) -> Result<Vec<SimulatedExpert>, SimError> {
    profiles.iter().try_for_each(SkillProfile::validate)?;
    let mut enrolled = Vec::with_capacity(profiles.len());
    for p in profiles {
        let e =
            engine.enroll(i64::from(p.years_experience)).map_err(|source| SimError::Engine { task: None, source })?;
        enrolled.push(e);
    }
    let counts: Vec<Result<usize, SimError>> = match mode {
        RunMode::Sequential => {
            enrolled.iter().zip(profiles).map(|(e, p)| run_session(engine, &e.session_token, p)).collect()
        }
        RunMode::Concurrent => std::thread::scope(|s| {
            let handles: Vec<_> = enrolled
                .iter()
                .zip(profiles)
                .map(|(e, p)| s.spawn(move || run_session(engine, &e.session_token, p)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("simulated expert thread")).collect()
        }),
    };
    enrolled
        .into_iter()
        .zip(profiles)
        .zip(counts)
        .map(|((e, p), n)| {
            Ok(SimulatedExpert { expert_id: e.expert_id, years_experience: p.years_experience, answered: n? })
        })
        .collect()
}
