//! Seeded synthetic samples: unions of rotated ellipses standing in for
//! anatomical targets, so the whole pipeline runs without external data.

use std::path::{Path, PathBuf};

use rand::Rng;

use crate::dataset::{store_mask, write_manifest, DatasetError, LoadedSample, SampleRecord};
use crate::mask::Mask;
use crate::rng::rng_for;

pub const MIN_AREA: usize = 64;

const MODALITIES: [&str; 5] = ["CT", "MRI", "Ultrasound", "X-ray", "Endoscopy"];
const TARGETS: [&str; 5] = ["liver lesion", "brain tumor", "thyroid nodule", "lung nodule", "polyp"];

/// Ground truth for fixture `index`. Always has at least [`MIN_AREA`] pixels.
pub fn fixture_mask(seed: u64, index: usize, width: usize, height: usize) -> Mask {
    assert!(width >= 16 && height >= 16, "fixtures need at least 16x16 pixels");
    let mut rng = rng_for(seed, &format!("fixture:{index}"));
    let (w, h) = (width as f64, height as f64);
    let short = w.min(h);
    loop {
        let parts = rng.gen_range(1..=3);
        let cx0 = rng.gen_range(0.3 * w..0.7 * w);
        let cy0 = rng.gen_range(0.3 * h..0.7 * h);
        let mut shapes = Vec::with_capacity(parts);
        for k in 0..parts {
            let a = rng.gen_range(0.06 * short..0.22 * short);
            let b = if rng.gen_bool(0.4) { a } else { rng.gen_range(0.06 * short..0.22 * short) };
            let (cx, cy) = if k == 0 {
                (cx0, cy0)
            } else {
                (cx0 + rng.gen_range(-2.5 * a..2.5 * a), cy0 + rng.gen_range(-2.5 * a..2.5 * a))
            };
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            shapes.push((cx, cy, a, b, theta.cos(), theta.sin()));
        }
        let m = Mask::from_fn(width, height, |x, y| {
            shapes.iter().any(|&(cx, cy, a, b, c, s)| {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                let u = dx * c + dy * s;
                let v = -dx * s + dy * c;
                (u / a).powi(2) + (v / b).powi(2) <= 1.0
            })
        })
        .expect("nonzero size");
        if m.count() >= MIN_AREA {
            return m;
        }
    }
}

pub fn fixture_record(index: usize, gt_mask_path: PathBuf) -> SampleRecord {
    SampleRecord {
        id: format!("fx{index:05}"),
        image_path: None,
        gt_mask_path,
        target: TARGETS[index % TARGETS.len()].to_owned(),
        modality: MODALITIES[index % MODALITIES.len()].to_owned(),
        dataset: "fixtures".to_owned(),
    }
}

/// `n` in-memory fixtures.
pub fn fixture_samples(n: usize, width: usize, height: usize, seed: u64) -> Vec<LoadedSample> {
    (0..n)
        .map(|i| {
            let rec = fixture_record(i, PathBuf::from(format!("masks/fx{i:05}.png")));
            LoadedSample::new(rec, fixture_mask(seed, i, width, height))
        })
        .collect()
}

/// Writes `n` fixture masks under `dir/masks` and a `dir/manifest.jsonl`
/// referencing them by relative path. Returns the manifest path.
pub fn write_fixtures(dir: &Path, n: usize, width: usize, height: usize, seed: u64) -> Result<PathBuf, DatasetError> {
    let samples = fixture_samples(n, width, height, seed);
    for s in &samples {
        store_mask(&s.gt, &dir.join(&s.record.gt_mask_path))?;
    }
    let manifest = dir.join("manifest.jsonl");
    let records: Vec<SampleRecord> = samples.into_iter().map(|s| s.record).collect();
    write_manifest(&records, &manifest)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::load_samples;

    #[test]
    fn deterministic_and_large_enough() {
        for i in 0..50 {
            let a = fixture_mask(3, i, 64, 64);
            assert_eq!(a, fixture_mask(3, i, 64, 64));
            assert!(a.count() >= MIN_AREA);
        }
        assert_ne!(fixture_mask(3, 0, 64, 64), fixture_mask(4, 0, 64, 64));
    }

    #[test]
    fn written_fixtures_load_back() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_fixtures(dir.path(), 4, 48, 40, 1).unwrap();
        let loaded = load_samples(&manifest).unwrap();
        let mem = fixture_samples(4, 48, 40, 1);
        assert_eq!(loaded.len(), 4);
        for (a, b) in loaded.iter().zip(&mem) {
            assert_eq!(a.gt, b.gt);
            assert_eq!(a.record.target, b.record.target);
        }
    }
}
