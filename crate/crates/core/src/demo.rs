//! Synthetic image pools for examples, tests and dry runs.
//!
//! Records carry placeholder paths; [`write_demo_manifest`] also writes a
//! tiny PNG for each one so the pool can be ingested like a real manifest.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;

use crate::domain::{Category, Generator, ImageId, ImageRecord, Lesion, Origin, Pool, Source};
use crate::sampling::rng::{label_tag, stream};

/// Images per (category, origin) cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DemoPoolSizes {
    pub real_per_cell: usize,
    pub synthetic_per_cell: usize,
}

impl Default for DemoPoolSizes {
    /// Enough for every procedure at its default size: A5 needs 75 real
    /// images per cell, A1/A2/A4 at most 13 TIDE-II images per cell.
    fn default() -> Self {
        Self { real_per_cell: 80, synthetic_per_cell: 20 }
    }
}

const LESIONS: [Lesion; 4] = [Lesion::Erosion, Lesion::Erythema, Lesion::Ulcer, Lesion::Other];

/// A 1x1 grey PNG.
pub const PLACEHOLDER_PNG: &[u8] = &[
    0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44, 0x52, 0x00, 0x00, 0x00,
    0x01, 0x00, 0x00, 0x00, 0x01, 0x08, 0x00, 0x00, 0x00, 0x00, 0x3a, 0x7e, 0x9b, 0x55, 0x00, 0x00, 0x00, 0x0a, 0x49,
    0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0x68, 0x00, 0x00, 0x00, 0x82, 0x00, 0x81, 0x4c, 0x17, 0xd7, 0xdf, 0x00, 0x00,
    0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82,
];

pub fn demo_records(seed: u64, sizes: DemoPoolSizes) -> Vec<ImageRecord> {
    let mut records = Vec::new();
    let mut rng = stream(seed, label_tag("demo"));
    let sources: Vec<(Source, Option<Generator>, usize)> = std::iter::once((Source::Real, None, sizes.real_per_cell))
        .chain(Generator::ALL.iter().map(|g| (Source::Synthetic, Some(*g), sizes.synthetic_per_cell)))
        .collect();
    for (source, generator, per_cell) in sources {
        let prefix = generator.map_or("real".to_string(), |g| g.label().to_lowercase());
        for origin in [Origin::Kid, Origin::Kvasir] {
            for category in [Category::Normal, Category::Abnormal] {
                let mut lesions: Vec<Lesion> = (0..per_cell).map(|i| LESIONS[i % LESIONS.len()]).collect();
                lesions.shuffle(&mut rng);
                for (i, lesion) in lesions.into_iter().enumerate() {
                    let id = format!("{prefix}-{}-{}-{:03}", origin.label().to_lowercase(), category.label(), i + 1);
                    records.push(ImageRecord {
                        path: PathBuf::from(format!("images/{id}.png")),
                        image_id: ImageId::new(id),
                        source,
                        generator,
                        category,
                        lesion: (category == Category::Abnormal).then_some(lesion),
                        origin,
                    });
                }
            }
        }
    }
    records
}

pub fn demo_pool(seed: u64, sizes: DemoPoolSizes) -> Pool {
    Pool::new(demo_records(seed, sizes)).expect("demo records are valid")
}

/// Writes `manifest.jsonl` and an `images/` directory under `dir`.
/// Returns the manifest path.
pub fn write_demo_manifest(dir: &Path, seed: u64, sizes: DemoPoolSizes) -> io::Result<PathBuf> {
    fs::create_dir_all(dir.join("images"))?;
    let manifest = dir.join("manifest.jsonl");
    let mut out = io::BufWriter::new(fs::File::create(&manifest)?);
    for record in demo_records(seed, sizes) {
        fs::write(dir.join(&record.path), PLACEHOLDER_PNG)?;
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(manifest)
}
