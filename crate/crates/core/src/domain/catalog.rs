//! Verbatim task prompts and option catalogs of the assessment protocol.
//!
//! Option strings are wire-visible and must not be edited: the web client
//! renders them as-is and answers are stored as zero-based indices into them.

use super::{DomainError, Lesion, Procedure, TaskKind};

pub const REALNESS: &[&str] = &["Real", "Fake"];
pub const PAIR_CHOICE: &[&str] = &["Image 1", "Image 2"];
pub const DIFFICULTY: &[&str] = &["Very Difficult", "Difficult", "Neutral", "Easy", "Very easy"];
pub const REASONS_INDIVIDUAL: &[&str] = &[
    "Color",
    "Texture",
    "Existence of artifacts/ luminal content",
    "Unrealistic appearance of anatomical structures",
    "Appearance of findings",
];
pub const REASONS_PAIRED: &[&str] = &[
    "Color",
    "Texture",
    "Absence of artifacts",
    "Realistic anatomical structures",
    "Realistic appearance of findings",
];
pub const FINDINGS: &[&str] =
    &["Normal", "Abnormal - Erosion", "Abnormal - Erythema", "Abnormal - Ulcer", "Abnormal - Other"];
pub const QUALITY: &[&str] =
    &["Very acceptable", "Acceptable", "Moderately acceptable", "Slightly acceptable", "Not Acceptable"];
pub const DIVERSITY: &[&str] = &["Very Diverse", "Diverse", "Moderately diverse", "Slightly diverse", "Not diverse"];
pub const REALISM: &[&str] =
    &["Very Realistic", "Realistic", "Moderately realistic", "Slightly realistic", "Not realistic"];

/// Index of "Real" in [`REALNESS`]; the other option means synthetic.
pub const REALNESS_REAL: usize = 0;
/// Index of "Normal" in [`FINDINGS`]; every other option is an abnormal finding.
pub const FINDINGS_NORMAL: usize = 0;

/// Ordered options for a (procedure, kind) pair.
pub fn option_catalog(procedure: Procedure, kind: TaskKind) -> Result<&'static [&'static str], DomainError> {
    use Procedure::*;
    use TaskKind::*;
    let catalog = match (procedure, kind) {
        (A1 | A2 | A3, T1) => REALNESS,
        (A1 | A2 | A3 | A4, T2) => DIFFICULTY,
        (A1 | A2 | A3, T3) => REASONS_INDIVIDUAL,
        (A1 | A2 | A3, T4) | (A4, T4a | T4b) => FINDINGS,
        (A1 | A2 | A3, T5) | (A4, T5a | T5b) => QUALITY,
        (A4, T1) => PAIR_CHOICE,
        (A4, T3) => REASONS_PAIRED,
        (A5, T1) => DIVERSITY,
        (A5, T2) => REALISM,
        _ => {
            return Err(DomainError::NotFound(format!("procedure {} has no task {}", procedure.label(), kind.label())))
        }
    };
    Ok(catalog)
}

/// Prompt shown above the options.
pub fn question_text(procedure: Procedure, kind: TaskKind) -> Result<&'static str, DomainError> {
    use Procedure::*;
    use TaskKind::*;
    let text = match (procedure, kind) {
        (A1 | A2 | A3, T1) => "The image presented is:",
        (A1 | A2 | A3 | A4, T2) => "Difficulty rate for this decision:",
        (A1 | A2 | A3 | A4, T3) => "Reason(s) behind this decision:",
        (A1 | A2 | A3, T4) => "Characterize the presented image as normal or abnormal:",
        (A1 | A2 | A3, T5) => "Evaluate the quality of this image:",
        (A4, T1) => "Indicate which is the real image:",
        (A4, T4a) => "Characterize Image-1 as normal or abnormal:",
        (A4, T4b) => "Characterize Image-2 as normal or abnormal:",
        (A4, T5a) => "Evaluate the quality of Image-1:",
        (A4, T5b) => "Evaluate the quality of Image-2:",
        (A5, T1) => "Characterize the diversity of this collection:",
        (A5, T2) => "Characterize the realism of this collection:",
        _ => {
            return Err(DomainError::NotFound(format!("procedure {} has no task {}", procedure.label(), kind.label())))
        }
    };
    Ok(text)
}

/// Static framing disclosed for a whole procedure. Only the paired procedure has one.
pub fn procedure_notice(procedure: Procedure) -> Option<&'static str> {
    match procedure {
        Procedure::A4 => Some("Each pair contains one real and one synthetic image."),
        _ => None,
    }
}

/// Findings option that names a lesion subtype.
pub fn finding_option(lesion: Option<Lesion>) -> usize {
    match lesion {
        None => FINDINGS_NORMAL,
        Some(Lesion::Erosion) => 1,
        Some(Lesion::Erythema) => 2,
        Some(Lesion::Ulcer) => 3,
        Some(Lesion::Other) => 4,
    }
}
