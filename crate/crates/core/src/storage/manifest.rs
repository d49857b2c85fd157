//! Image manifests: one JSON record per line, fields exactly as [`ImageRecord`].

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::domain::{ImageRecord, Pool};

use super::StorageError;

fn manifest_error(category: &'static str, line: Option<usize>, message: impl Into<String>) -> StorageError {
    StorageError::Manifest { category, line, message: message.into() }
}

/// Parses and validates a manifest. Relative image paths are resolved
/// against the manifest's directory and every file must exist.
pub fn read_manifest(path: &Path) -> Result<Pool, StorageError> {
    let text = fs::read_to_string(path).map_err(|e| StorageError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut records = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut record: ImageRecord =
            serde_json::from_str(line).map_err(|e| manifest_error("manifest.schema", Some(lineno), e.to_string()))?;
        record.validate().map_err(|e| manifest_error("manifest.invariant", Some(lineno), e.to_string()))?;
        if let Some(first) = seen.insert(record.image_id.0.clone(), lineno) {
            return Err(manifest_error(
                "manifest.duplicate_id",
                Some(lineno),
                format!("image_id `{}` already defined on line {first}", record.image_id),
            ));
        }
        if record.path.is_relative() {
            record.path = base.join(&record.path);
        }
        if !record.path.is_file() {
            return Err(manifest_error(
                "manifest.missing_file",
                Some(lineno),
                format!("image file {} does not exist", record.path.display()),
            ));
        }
        records.push(record);
    }
    if records.is_empty() {
        return Err(manifest_error("manifest.empty", None, format!("{} contains no records", path.display())));
    }
    Pool::new(records).map_err(|e| manifest_error("manifest.invariant", None, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::PLACEHOLDER_PNG;

    type Cell = (&'static str, Option<&'static str>, &'static str, Option<&'static str>, &'static str);
    const CELLS: [Cell; 8] = [
        ("real", None, "normal", None, "KID"),
        ("real", None, "normal", None, "Kvasir"),
        ("real", None, "abnormal", Some("ulcer"), "KID"),
        ("real", None, "abnormal", Some("erosion"), "Kvasir"),
        ("synthetic", Some("TIDE-II"), "normal", None, "KID"),
        ("synthetic", Some("TIDE-II"), "normal", None, "Kvasir"),
        ("synthetic", Some("TIDE-II"), "abnormal", Some("erythema"), "KID"),
        ("synthetic", Some("TIDE-II"), "abnormal", Some("other"), "Kvasir"),
    ];

    fn line(id: &str, cell: (&str, Option<&str>, &str, Option<&str>, &str)) -> String {
        serde_json::json!({
            "image_id": id, "path": format!("{id}.png"), "source": cell.0, "generator": cell.1,
            "category": cell.2, "lesion": cell.3, "origin": cell.4,
        })
        .to_string()
    }

    fn write(dir: &Path, lines: &[String]) -> std::path::PathBuf {
        for l in lines {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            fs::write(dir.join(v["path"].as_str().unwrap()), PLACEHOLDER_PNG).unwrap();
        }
        let p = dir.join("manifest.jsonl");
        fs::write(&p, lines.join("\n")).unwrap();
        p
    }

    fn category(err: StorageError) -> (&'static str, Option<usize>) {
        match err {
            StorageError::Manifest { category, line, .. } => (category, line),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn eight_cells_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let lines: Vec<String> = CELLS.iter().enumerate().map(|(i, c)| line(&format!("img{i}"), *c)).collect();
        let pool = read_manifest(&write(dir.path(), &lines)).unwrap();
        assert_eq!(pool.len(), 8);
        assert!(pool.records()[0].path.starts_with(dir.path()));
    }

    #[test]
    fn real_with_generator_rejected_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let mut lines = vec![line("a", CELLS[0])];
        lines.push(line("b", ("real", Some("TIDE"), "normal", None, "KID")));
        assert_eq!(category(read_manifest(&write(dir.path(), &lines)).unwrap_err()), ("manifest.invariant", Some(2)));
    }

    #[test]
    fn duplicates_empty_unknown_fields_and_missing_files() {
        let dir = tempfile::tempdir().unwrap();
        let dup = vec![line("a", CELLS[0]), line("b", CELLS[1]), line("a", CELLS[2])];
        assert_eq!(category(read_manifest(&write(dir.path(), &dup)).unwrap_err()), ("manifest.duplicate_id", Some(3)));

        let empty = dir.path().join("empty.jsonl");
        fs::write(&empty, "\n\n").unwrap();
        assert_eq!(category(read_manifest(&empty).unwrap_err()).0, "manifest.empty");

        let extra = dir.path().join("extra.jsonl");
        let mut v: serde_json::Value = serde_json::from_str(&line("a", CELLS[0])).unwrap();
        v["note"] = "x".into();
        fs::write(&extra, v.to_string()).unwrap();
        assert_eq!(category(read_manifest(&extra).unwrap_err()), ("manifest.schema", Some(1)));

        let missing = dir.path().join("missing.jsonl");
        fs::write(&missing, line("nofile", CELLS[0])).unwrap();
        assert_eq!(category(read_manifest(&missing).unwrap_err()), ("manifest.missing_file", Some(1)));
    }
}
