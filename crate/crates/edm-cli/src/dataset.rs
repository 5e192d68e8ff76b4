//! Dataset ingestion: directory scanning, image decoding, stratified
//! splitting, and loading into memory.
//!
//! A dataset is a directory with one subdirectory per class:
//! `normal/`, `layer_shift/`, `strings/`, `under_extrusion/`, `warping/`.
//! The binary task maps `normal/` to class 0 and the four fault
//! directories to class 1; the multi task maps the fault directories to
//! classes 0..=3 and ignores `normal/`. Every directory backing a class of
//! the active task must exist and contain at least one image.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use edm_core::augment::Image;
use edm_core::model::Task;
use edm_core::rng::Rng;
use edm_core::train::Sample;

pub use edm_core::batch::make_batches;

use crate::error::{Error, Result};
use crate::formats::ppm::decode_ppm;

/// Class-name table for a task; class ids are positions in `classes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub task: Task,
    pub classes: Vec<String>,
}

impl LabelMap {
    pub fn for_task(task: Task) -> Self {
        LabelMap {
            task,
            classes: task.class_names().iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// One discovered image file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSample {
    pub path: PathBuf,
    pub class_id: usize,
    pub origin_dir: String,
}

/// Scan outcome: path-sorted samples plus the count of skipped
/// non-image files.
#[derive(Debug, Clone)]
pub struct ScanResult {
    pub samples: Vec<LabeledSample>,
    pub skipped: usize,
}

/// Train/test partition of a sample list.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Vec<LabeledSample>,
    pub test: Vec<LabeledSample>,
    pub seed: u64,
    pub ratio: f64,
}

const FAULT_DIRS: [&str; 4] = ["layer_shift", "strings", "under_extrusion", "warping"];
const IMAGE_EXTENSIONS: [&str; 4] = ["ppm", "png", "jpg", "jpeg"];

/// Directory names and their class ids for a task.
pub fn class_directories(task: Task) -> Vec<(&'static str, usize)> {
    match task {
        Task::Binary => {
            let mut dirs = vec![("normal", 0)];
            dirs.extend(FAULT_DIRS.iter().map(|&d| (d, 1)));
            dirs
        }
        Task::Multi => FAULT_DIRS.iter().enumerate().map(|(i, &d)| (d, i)).collect(),
    }
}

/// Walks the class directories of `task` under `root`. Files are sorted
/// lexicographically by path; non-image files count as skipped.
pub fn scan_dataset(root: &Path, task: Task) -> Result<ScanResult> {
    let mut samples = Vec::new();
    let mut skipped = 0usize;
    let mut missing = Vec::new();
    for (dir, class_id) in class_directories(task) {
        let dir_path = root.join(dir);
        if !dir_path.is_dir() {
            missing.push(format!("{dir} (absent)"));
            continue;
        }
        let mut found = 0usize;
        let entries = fs::read_dir(&dir_path).map_err(|e| Error::io(&dir_path, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&dir_path, e))?;
            let path = entry.path();
            if !path.is_file() {
                continue;
            }
            if has_image_extension(&path) {
                samples.push(LabeledSample {
                    path,
                    class_id,
                    origin_dir: dir.to_string(),
                });
                found += 1;
            } else {
                skipped += 1;
            }
        }
        if found == 0 {
            missing.push(format!("{dir} (no images)"));
        }
    }
    if !missing.is_empty() {
        return Err(Error::Data(format!(
            "dataset at {} is missing class directories for the {} task: {}",
            root.display(),
            task.as_str(),
            missing.join(", ")
        )));
    }
    samples.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(ScanResult { samples, skipped })
}

fn has_image_extension(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| {
            let lower = e.to_ascii_lowercase();
            IMAGE_EXTENSIONS.contains(&lower.as_str())
        })
        .unwrap_or(false)
}

/// Decodes one image file. PPM decoding is the bit-exact reference path;
/// PNG and JPEG go through a stock codec for convenience.
pub fn decode_image(path: &Path) -> Result<Image> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "ppm" => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            decode_ppm(&bytes).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
        }
        "png" | "jpg" | "jpeg" => {
            let decoded = image::open(path)
                .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
                .to_rgb8();
            let (w, h) = decoded.dimensions();
            Image::new(w as usize, h as usize, decoded.into_raw())
                .map_err(|e| Error::Data(format!("{}: {e}", path.display())))
        }
        other => Err(Error::Data(format!(
            "{}: unknown image extension '{other}'",
            path.display()
        ))),
    }
}

/// Per-class split: shuffle with `Rng(seed ^ class_id)`, put
/// `floor(ratio * n)` samples in train (at least 1, at most `n - 1`),
/// the rest in test.
pub fn stratified_split(samples: &[LabeledSample], ratio: f64, seed: u64) -> Result<Split> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Data(format!("split ratio must be in (0, 1), got {ratio}")));
    }
    let mut by_class: BTreeMap<usize, Vec<LabeledSample>> = BTreeMap::new();
    for sample in samples {
        by_class.entry(sample.class_id).or_default().push(sample.clone());
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class_id, mut members) in by_class {
        if members.len() < 2 {
            return Err(Error::Data(format!(
                "class {class_id} has {} sample(s); need at least 2 to split",
                members.len()
            )));
        }
        Rng::new(seed ^ class_id as u64).shuffle(&mut members);
        let n_train = ((ratio * members.len() as f64) as usize).clamp(1, members.len() - 1);
        test.extend(members.split_off(n_train));
        train.extend(members);
    }
    Ok(Split {
        train,
        test,
        seed,
        ratio,
    })
}

/// Decodes a sample list into memory, preserving order. With
/// `workers > 1` the decode work is spread over that many threads; the
/// output is identical to the sequential path.
pub fn load_samples(samples: &[LabeledSample], workers: usize) -> Result<Vec<Sample>> {
    let decode_one = |s: &LabeledSample| -> Result<Sample> {
        Ok(Sample {
            image: decode_image(&s.path)?,
            label: s.class_id,
        })
    };
    if workers <= 1 || samples.len() < 2 {
        return samples.iter().map(decode_one).collect();
    }
    let chunk_size = samples.len().div_ceil(workers);
    let chunks: Vec<&[LabeledSample]> = samples.chunks(chunk_size).collect();
    let mut results: Vec<Result<Vec<Sample>>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|chunk| scope.spawn(move || chunk.iter().map(decode_one).collect::<Result<Vec<_>>>()))
            .collect();
        for handle in handles {
            results.push(handle.join().expect("decode worker panicked"));
        }
    });
    let mut out = Vec::with_capacity(samples.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}
