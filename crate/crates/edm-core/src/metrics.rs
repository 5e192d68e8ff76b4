//! Evaluation statistics.

use alloc::vec;
use alloc::vec::Vec;

/// Per-epoch training record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub train_loss: f64,
    pub test_accuracy: f64,
}

/// Accuracy, confusion counts (rows = true class, columns = predicted),
/// mean loss, and the per-epoch history of the run that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub confusion: Vec<Vec<u64>>,
    pub mean_loss: f64,
    pub history: Vec<EpochRecord>,
}

impl Metrics {
    pub fn from_confusion(confusion: Vec<Vec<u64>>, mean_loss: f64) -> Self {
        let accuracy = accuracy_of(&confusion);
        Metrics {
            accuracy,
            confusion,
            mean_loss,
            history: Vec::new(),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.confusion.len()
    }
}

/// Diagonal mass fraction of a confusion matrix.
pub fn accuracy_of(confusion: &[Vec<u64>]) -> f64 {
    let mut trace = 0u64;
    let mut total = 0u64;
    for (i, row) in confusion.iter().enumerate() {
        for (j, &count) in row.iter().enumerate() {
            total += count;
            if i == j {
                trace += count;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        trace as f64 / total as f64
    }
}

/// Builds a `C x C` confusion matrix from `(true, predicted)` pairs.
pub fn confusion_from_pairs(num_classes: usize, pairs: &[(usize, usize)]) -> Vec<Vec<u64>> {
    let mut confusion = vec![vec![0u64; num_classes]; num_classes];
    for &(truth, pred) in pairs {
        confusion[truth][pred] += 1;
    }
    confusion
}
