//! Depth-pruning search: train candidates from the maximum depth down to 1
//! and keep the smallest model whose test accuracy clears the threshold.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::metrics::Metrics;
use crate::model::{Model, ModelConfig};
use crate::train::{train, Sample, TrainConfig};

/// Outcome of one candidate depth.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthRecord {
    pub depth: usize,
    pub param_count: usize,
    pub test_accuracy: f64,
    pub passed: bool,
}

/// Full search outcome: one record per depth (ascending) plus the
/// selection. `fallback_used` marks that no depth passed and the
/// highest-accuracy candidate was returned instead.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchReport {
    pub records: Vec<DepthRecord>,
    pub selected_depth: usize,
    pub fallback_used: bool,
}

impl SearchReport {
    /// CSV rendering: `depth,params,test_accuracy,passed` header, one row
    /// per depth, and a `selected=<d>,fallback=<bool>` trailer line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("depth,params,test_accuracy,passed\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{:.6},{}\n",
                r.depth, r.param_count, r.test_accuracy, r.passed
            ));
        }
        out.push_str(&format!(
            "selected={},fallback={}\n",
            self.selected_depth, self.fallback_used
        ));
        out
    }
}

/// Trains one candidate depth with a fresh seed (`config.seed ^ depth`).
/// A non-finite training run reports as a failed record with NaN accuracy
/// rather than an error.
pub fn run_depth(
    config: &TrainConfig,
    train_samples: &[Sample],
    test_samples: &[Sample],
    depth: usize,
) -> Result<(DepthRecord, Option<(Model<f32>, Metrics)>)> {
    let arch = ModelConfig::for_task(config.task, config.input_size, depth)?;
    let mut depth_config = config.clone();
    depth_config.seed = config.seed ^ depth as u64;
    match train(&arch, &depth_config, train_samples, test_samples) {
        Ok((model, metrics)) => {
            let record = DepthRecord {
                depth,
                param_count: arch.param_count(),
                test_accuracy: metrics.accuracy,
                passed: metrics.accuracy >= config.threshold,
            };
            Ok((record, Some((model, metrics))))
        }
        Err(Error::Numeric(_)) => Ok((
            DepthRecord {
                depth,
                param_count: arch.param_count(),
                test_accuracy: f64::NAN,
                passed: false,
            },
            None,
        )),
        Err(other) => Err(other),
    }
}

/// Selection rule over a full record set: the minimum passing depth, or
/// the argmax-accuracy depth with `fallback_used` when nothing passes.
pub fn select_depth(records: &[DepthRecord]) -> Result<(usize, bool)> {
    if let Some(best) = records.iter().filter(|r| r.passed).map(|r| r.depth).min() {
        return Ok((best, false));
    }
    let mut best: Option<&DepthRecord> = None;
    for r in records {
        if r.test_accuracy.is_nan() {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => {
                r.test_accuracy > b.test_accuracy
                    || (r.test_accuracy == b.test_accuracy && r.depth < b.depth)
            }
        };
        if better {
            best = Some(r);
        }
    }
    match best {
        Some(r) => Ok((r.depth, true)),
        None => Err(Error::Numeric(
            "every candidate depth diverged; no model to select".into(),
        )),
    }
}

/// Runs the full search from `max_depth` down to 1.
///
/// Returns the selected model (retrained candidates are retained along the
/// way, so no depth trains twice) together with the report.
pub fn depth_search(
    config: &TrainConfig,
    train_samples: &[Sample],
    test_samples: &[Sample],
    max_depth: usize,
) -> Result<(Model<f32>, Metrics, SearchReport)> {
    if !(1..=10).contains(&max_depth) {
        return Err(Error::Data(format!("max_depth must be in 1..=10, got {max_depth}")));
    }
    config.validate()?;

    let mut records = Vec::with_capacity(max_depth);
    // Retain the current best passing candidate (descending depths mean the
    // latest passing one is the shallowest so far) and the argmax fallback.
    let mut passing: Option<(usize, Model<f32>, Metrics)> = None;
    let mut fallback: Option<(f64, usize, Model<f32>, Metrics)> = None;
    for depth in (1..=max_depth).rev() {
        let (record, outcome) = run_depth(config, train_samples, test_samples, depth)?;
        if let Some((model, metrics)) = outcome {
            if record.passed {
                passing = Some((depth, model.clone_weights(), metrics.clone()));
            }
            let replace = match &fallback {
                None => true,
                Some((best_acc, best_depth, _, _)) => {
                    record.test_accuracy > *best_acc
                        || (record.test_accuracy == *best_acc && depth < *best_depth)
                }
            };
            if replace {
                fallback = Some((record.test_accuracy, depth, model, metrics));
            }
        }
        records.push(record);
    }
    records.reverse();

    let (selected_depth, fallback_used) = select_depth(&records)?;
    let report = SearchReport {
        records,
        selected_depth,
        fallback_used,
    };
    let (model, metrics) = if fallback_used {
        let (_, _, model, metrics) = fallback.expect("fallback exists when selection succeeded");
        (model, metrics)
    } else {
        let (_, model, metrics) = passing.expect("passing candidate exists when not fallback");
        (model, metrics)
    };
    debug_assert_eq!(model.config.depth, selected_depth);
    Ok((model, metrics, report))
}
