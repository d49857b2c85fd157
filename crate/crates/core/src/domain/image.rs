use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::DomainError;

/// Opaque identifier of one catalogued image, unique within a pool.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ImageId(pub String);

impl ImageId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ImageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Real,
    Synthetic,
}

impl Source {
    pub const ALL: [Source; 2] = [Source::Real, Source::Synthetic];

    pub fn label(self) -> &'static str {
        match self {
            Source::Real => "real",
            Source::Synthetic => "synthetic",
        }
    }
}

/// Generative model that produced a synthetic image. Real images carry no generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Generator {
    #[serde(rename = "StyleGANv2")]
    StyleGanV2,
    #[serde(rename = "CycleGAN")]
    CycleGan,
    #[serde(rename = "TS-GAN")]
    TsGan,
    #[serde(rename = "EndoVAE")]
    EndoVae,
    #[serde(rename = "TIDE")]
    Tide,
    #[serde(rename = "TIDE-II")]
    TideII,
}

impl Generator {
    pub const ALL: [Generator; 6] = [
        Generator::StyleGanV2,
        Generator::CycleGan,
        Generator::TsGan,
        Generator::EndoVae,
        Generator::Tide,
        Generator::TideII,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Generator::StyleGanV2 => "StyleGANv2",
            Generator::CycleGan => "CycleGAN",
            Generator::TsGan => "TS-GAN",
            Generator::EndoVae => "EndoVAE",
            Generator::Tide => "TIDE",
            Generator::TideII => "TIDE-II",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.label() == label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Normal,
    Abnormal,
}

impl Category {
    pub const ALL: [Category; 2] = [Category::Normal, Category::Abnormal];

    pub fn label(self) -> &'static str {
        match self {
            Category::Normal => "normal",
            Category::Abnormal => "abnormal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lesion {
    Erosion,
    Erythema,
    Ulcer,
    Other,
}

impl Lesion {
    pub const ALL: [Lesion; 4] = [Lesion::Erosion, Lesion::Erythema, Lesion::Ulcer, Lesion::Other];

    pub fn label(self) -> &'static str {
        match self {
            Lesion::Erosion => "erosion",
            Lesion::Erythema => "erythema",
            Lesion::Ulcer => "ulcer",
            Lesion::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Origin {
    #[serde(rename = "KID")]
    Kid,
    #[serde(rename = "Kvasir")]
    Kvasir,
}

impl Origin {
    pub const ALL: [Origin; 2] = [Origin::Kid, Origin::Kvasir];

    pub fn label(self) -> &'static str {
        match self {
            Origin::Kid => "KID",
            Origin::Kvasir => "Kvasir",
        }
    }
}

/// Where an image came from: the real datasets or one specific generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Provenance {
    Real,
    Synthetic(Generator),
}

impl Provenance {
    pub fn label(self) -> &'static str {
        match self {
            Provenance::Real => "real",
            Provenance::Synthetic(g) => g.label(),
        }
    }

    pub fn source(self) -> Source {
        match self {
            Provenance::Real => Source::Real,
            Provenance::Synthetic(_) => Source::Synthetic,
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl From<Provenance> for String {
    fn from(p: Provenance) -> Self {
        p.label().to_owned()
    }
}

impl TryFrom<String> for Provenance {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        if s == "real" {
            return Ok(Provenance::Real);
        }
        Generator::from_label(&s).map(Provenance::Synthetic).ok_or_else(|| format!("unknown provenance `{s}`"))
    }
}

/// One catalogued image with its ground-truth metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageRecord {
    pub image_id: ImageId,
    pub path: PathBuf,
    pub source: Source,
    #[serde(default)]
    pub generator: Option<Generator>,
    pub category: Category,
    #[serde(default)]
    pub lesion: Option<Lesion>,
    pub origin: Origin,
}

impl ImageRecord {
    pub fn validate(&self) -> Result<(), DomainError> {
        if self.image_id.0.trim().is_empty() {
            return Err(DomainError::Invariant("image_id must not be empty".into()));
        }
        match (self.source, self.generator) {
            (Source::Real, Some(g)) => {
                return Err(DomainError::Invariant(format!(
                    "real image `{}` must not name a generator (got {})",
                    self.image_id,
                    g.label()
                )))
            }
            (Source::Synthetic, None) => {
                return Err(DomainError::Invariant(format!(
                    "synthetic image `{}` must name its generator",
                    self.image_id
                )))
            }
            _ => {}
        }
        match (self.category, self.lesion) {
            (Category::Normal, Some(l)) => Err(DomainError::Invariant(format!(
                "normal image `{}` must not carry a lesion (got {})",
                self.image_id,
                l.label()
            ))),
            (Category::Abnormal, None) => {
                Err(DomainError::Invariant(format!("abnormal image `{}` must carry a lesion", self.image_id)))
            }
            _ => Ok(()),
        }
    }

    pub fn provenance(&self) -> Provenance {
        match self.generator {
            Some(g) => Provenance::Synthetic(g),
            None => Provenance::Real,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(source: Source, generator: Option<Generator>, category: Category, lesion: Option<Lesion>) -> ImageRecord {
        ImageRecord {
            image_id: ImageId::new("img"),
            path: "img.png".into(),
            source,
            generator,
            category,
            lesion,
            origin: Origin::Kid,
        }
    }

    #[test]
    fn real_with_generator_is_rejected() {
        let r = record(Source::Real, Some(Generator::Tide), Category::Normal, None);
        assert!(r.validate().is_err());
    }

    #[test]
    fn synthetic_without_generator_is_rejected() {
        let r = record(Source::Synthetic, None, Category::Normal, None);
        assert!(r.validate().is_err());
    }

    #[test]
    fn lesion_must_follow_category() {
        assert!(record(Source::Real, None, Category::Normal, Some(Lesion::Ulcer)).validate().is_err());
        assert!(record(Source::Real, None, Category::Abnormal, None).validate().is_err());
        assert!(record(Source::Real, None, Category::Abnormal, Some(Lesion::Ulcer)).validate().is_ok());
    }

    #[test]
    fn manifest_field_names_and_values() {
        let json = r#"{"image_id":"a","path":"a.png","source":"synthetic","generator":"TIDE-II","category":"abnormal","lesion":"erythema","origin":"Kvasir"}"#;
        let r: ImageRecord = serde_json::from_str(json).unwrap();
        assert_eq!(r.generator, Some(Generator::TideII));
        assert_eq!(r.origin, Origin::Kvasir);
        assert_eq!(r.provenance().label(), "TIDE-II");
        let back = serde_json::to_string(&r).unwrap();
        assert_eq!(back, json);
    }

    #[test]
    fn provenance_round_trips_through_labels() {
        for g in Generator::ALL {
            let p = Provenance::Synthetic(g);
            assert_eq!(Provenance::try_from(String::from(p)).unwrap(), p);
        }
        assert_eq!(Provenance::try_from("real".to_string()).unwrap(), Provenance::Real);
        assert!(Provenance::try_from("GAN".to_string()).is_err());
    }
}
