//! Sample manifests: one JSON object per line, paths relative to the
//! manifest's directory.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::png::{image_dims, load_mask};
use super::{to_json_line, DatasetError};
use crate::backend::BackendSample;
use crate::mask::Mask;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_path: Option<PathBuf>,
    pub gt_mask_path: PathBuf,
    pub target: String,
    #[serde(default)]
    pub modality: String,
    #[serde(default)]
    pub dataset: String,
}

/// A manifest entry with its ground truth decoded.
#[derive(Debug, Clone)]
pub struct LoadedSample {
    pub record: SampleRecord,
    pub gt: Mask,
}

impl LoadedSample {
    pub fn new(record: SampleRecord, gt: Mask) -> Self {
        Self { record, gt }
    }

    pub fn id(&self) -> &str {
        &self.record.id
    }

    pub fn backend_sample(&self) -> BackendSample {
        BackendSample {
            id: self.record.id.clone(),
            width: self.gt.width(),
            height: self.gt.height(),
            gt: Some(self.gt.clone()),
            image_path: self.record.image_path.clone(),
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Reads a manifest, resolving relative paths against its directory.
pub fn load_manifest(path: &Path) -> Result<Vec<SampleRecord>, DatasetError> {
    let text = fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut rec: SampleRecord = serde_json::from_str(line).map_err(|e| DatasetError::Line {
            path: path.to_path_buf(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        rec.gt_mask_path = resolve(base, &rec.gt_mask_path);
        rec.image_path = rec.image_path.map(|p| resolve(base, &p));
        out.push(rec);
    }
    Ok(out)
}

pub fn write_manifest(records: &[SampleRecord], path: &Path) -> Result<(), DatasetError> {
    let mut f = fs::File::create(path).map_err(|e| DatasetError::io(path, e))?;
    for r in records {
        f.write_all(to_json_line(r).as_bytes())
            .map_err(|e| DatasetError::io(path, e))?;
    }
    Ok(())
}

/// Loads and validates every sample in a manifest.
pub fn load_samples(path: &Path) -> Result<Vec<LoadedSample>, DatasetError> {
    load_manifest(path)?
        .into_iter()
        .map(|record| {
            let gt = load_mask(&record.gt_mask_path)?;
            if gt.is_empty() {
                return Err(DatasetError::EmptyMask(record.id));
            }
            if let Some(img) = &record.image_path {
                let dims = image_dims(img)?;
                if dims != gt.dims() {
                    return Err(DatasetError::DimensionMismatch {
                        id: record.id,
                        mask: gt.dims(),
                        image: dims,
                    });
                }
            }
            Ok(LoadedSample { record, gt })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::store_mask;

    #[test]
    fn manifest_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let m = Mask::from_fn(8, 8, |x, y| x > 2 && y > 2).unwrap();
        store_mask(&m, &dir.path().join("a.png")).unwrap();
        store_mask(&Mask::new(8, 8).unwrap(), &dir.path().join("empty.png")).unwrap();
        let rec = SampleRecord {
            id: "a".into(),
            image_path: None,
            gt_mask_path: "a.png".into(),
            target: "left kidney".into(),
            modality: "CT".into(),
            dataset: "demo".into(),
        };
        let manifest = dir.path().join("m.jsonl");
        write_manifest(&[rec.clone()], &manifest).unwrap();
        let loaded = load_samples(&manifest).unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(loaded[0].gt, m);
        assert_eq!(loaded[0].record.gt_mask_path, dir.path().join("a.png"));

        let bad = SampleRecord {
            gt_mask_path: "empty.png".into(),
            ..rec
        };
        write_manifest(&[bad], &manifest).unwrap();
        assert!(matches!(load_samples(&manifest), Err(DatasetError::EmptyMask(_))));

        fs::write(&manifest, "{\"id\": 1}\n").unwrap();
        assert!(matches!(
            load_manifest(&manifest),
            Err(DatasetError::Line { line: 1, .. })
        ));
    }
}
