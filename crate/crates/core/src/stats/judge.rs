//! Ground truth for a study's responses.

use super::metrics::{Judgment, Resolution, TruthResolver};
use super::StatsError;
use crate::domain::catalog::{finding_option, FINDINGS_NORMAL, REALNESS_REAL};
use crate::domain::{
    resolve_truth, Answer, ImageId, Payload, Procedure, Question, Response, Source, TaskInstance, TaskKind, Truth,
};
use crate::study::Study;

impl Study {
    fn judgment(
        &self,
        r: &Response,
        image: &ImageId,
        question: Question,
        predicted: Truth,
    ) -> Result<Judgment, StatsError> {
        let task = self.task(&r.task_id).expect("caller checked the task");
        let record = self
            .record(image)
            .ok_or_else(|| StatsError::Validation(format!("image `{image}` is not in the study pool")))?;
        Ok(Judgment {
            expert_id: r.expert_id.clone(),
            task_id: r.task_id.clone(),
            procedure: task.procedure,
            item_index: task.item_index,
            image_id: image.clone(),
            question,
            truth: resolve_truth(record, question),
            predicted,
            source: record.source,
            generator: record.generator,
            category: record.category,
            origin: record.origin,
        })
    }

    /// The correct answer to a task with binary ground truth: the real
    /// option or slot for realness, the image's own finding for
    /// abnormality. `None` for tasks without one.
    pub fn answer_key(&self, task: &TaskInstance) -> Option<Answer> {
        let finding = |id: &ImageId| self.record(id).map(|r| Answer::Single(finding_option(r.lesion)));
        match (&task.payload, task.kind) {
            (Payload::Single { image }, TaskKind::T1) => {
                let real = self.record(image)?.source == Source::Real;
                Some(Answer::Single(if real { REALNESS_REAL } else { 1 - REALNESS_REAL }))
            }
            (Payload::Single { image }, TaskKind::T4) => finding(image),
            (Payload::Pair { .. }, TaskKind::T1) => {
                Some(Answer::Single(usize::from(self.real_slot(task.item_index)?) - 1))
            }
            (Payload::Pair { slot1, .. }, TaskKind::T4a) => finding(slot1),
            (Payload::Pair { slot2, .. }, TaskKind::T4b) => finding(slot2),
            _ => None,
        }
    }
}

fn single(answer: &Answer) -> Result<usize, StatsError> {
    match answer {
        Answer::Single(i) => Ok(*i),
        Answer::Multi(_) => Err(StatsError::Validation("expected a single-option answer".into())),
    }
}

impl TruthResolver for Study {
    /// Realness: "Real" is a positive call. In a pair, the chosen slot is
    /// called real and the other synthetic. Abnormality: any finding other
    /// than "Normal" is a positive call.
    fn resolve(&self, r: &Response) -> Result<Resolution, StatsError> {
        let task = self
            .task(&r.task_id)
            .ok_or_else(|| StatsError::Validation(format!("response for unknown task {}", r.task_id)))?;
        let j = match (&task.payload, task.kind) {
            (Payload::Single { image }, TaskKind::T1) => {
                let real = single(&r.answer)? == REALNESS_REAL;
                vec![self.judgment(r, image, Question::Realness, Truth::from_bool(real))?]
            }
            (Payload::Single { image }, TaskKind::T4) => {
                let abnormal = single(&r.answer)? != FINDINGS_NORMAL;
                vec![self.judgment(r, image, Question::Abnormality, Truth::from_bool(abnormal))?]
            }
            (Payload::Pair { slot1, slot2 }, TaskKind::T1) => {
                let first_is_real = single(&r.answer)? == 0;
                vec![
                    self.judgment(r, slot1, Question::Realness, Truth::from_bool(first_is_real))?,
                    self.judgment(r, slot2, Question::Realness, Truth::from_bool(!first_is_real))?,
                ]
            }
            (Payload::Pair { slot1, slot2 }, TaskKind::T4a | TaskKind::T4b) => {
                let image = if task.kind == TaskKind::T4a { slot1 } else { slot2 };
                let abnormal = single(&r.answer)? != FINDINGS_NORMAL;
                vec![self.judgment(r, image, Question::Abnormality, Truth::from_bool(abnormal))?]
            }
            _ => return Ok(Resolution::NoBinaryTruth),
        };
        debug_assert!(task.procedure != Procedure::A5);
        Ok(Resolution::Judged(j))
    }
}
