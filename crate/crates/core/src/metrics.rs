//! Segmentation measures: confusion matrix, overall accuracy, mean
//! class-wise accuracy and pixel-weighted running loss.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `counts[true][predicted]` over evaluated pixels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    num_classes: usize,
    counts: Vec<u64>,
    excluded: Option<usize>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        Self {
            num_classes,
            counts: vec![0; num_classes * num_classes],
            excluded: None,
        }
    }

    /// Pixels whose true label is `background` are skipped.
    pub fn with_excluded(num_classes: usize, background: usize) -> Self {
        Self {
            excluded: Some(background),
            ..Self::new(num_classes)
        }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn excluded(&self) -> Option<usize> {
        self.excluded
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.num_classes + predicted]
    }

    pub fn from_counts(rows: &[Vec<u64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::dim("confusion matrix", "rows must form a square matrix"));
        }
        Ok(Self {
            num_classes: k,
            counts: rows.concat(),
            excluded: None,
        })
    }

    pub fn accumulate(&mut self, truth: &[u8], predicted: &[u8]) -> Result<()> {
        if truth.len() != predicted.len() {
            return Err(Error::dim(
                "accumulate",
                format!("{} true labels vs {} predictions", truth.len(), predicted.len()),
            ));
        }
        let k = self.num_classes;
        if let Some(bad) = truth.iter().chain(predicted).find(|&&l| l as usize >= k) {
            return Err(Error::Data(format!("label {bad} out of range for {k} classes")));
        }
        for (&t, &p) in truth.iter().zip(predicted) {
            if Some(t as usize) != self.excluded {
                self.counts[t as usize * k + p as usize] += 1;
            }
        }
        Ok(())
    }

    /// Elementwise sum of two shards.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.num_classes != self.num_classes || other.excluded != self.excluded {
            return Err(Error::dim("merge", "confusion matrices are configured differently"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn row_sum(&self, c: usize) -> u64 {
        self.counts[c * self.num_classes..(c + 1) * self.num_classes].iter().sum()
    }

    pub fn overall_accuracy(&self) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(Error::UndefinedMetric("overall accuracy of an empty confusion matrix".into()));
        }
        let trace: u64 = (0..self.num_classes).map(|c| self.get(c, c)).sum();
        Ok(trace as f64 / total as f64)
    }

    /// Mean per-class recall over classes that occur in the ground truth.
    pub fn mean_class_accuracy(&self) -> Result<f64> {
        let recalls: Vec<f64> = (0..self.num_classes)
            .filter_map(|c| {
                let row = self.row_sum(c);
                (row > 0).then(|| self.get(c, c) as f64 / row as f64)
            })
            .collect();
        if recalls.is_empty() {
            return Err(Error::UndefinedMetric("mean class accuracy with no populated class".into()));
        }
        Ok(recalls.iter().sum::<f64>() / recalls.len() as f64)
    }
}

/// Pixel-weighted average of per-pixel losses.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunningLoss {
    weighted_sum: f64,
    pixels: u64,
}

impl RunningLoss {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an example whose per-pixel loss is `loss` over `pixels` pixels.
    pub fn add(&mut self, loss: f64, pixels: u64) -> Result<()> {
        if pixels == 0 {
            return Err(Error::Parameter("running loss needs a positive pixel count".into()));
        }
        self.weighted_sum += loss * pixels as f64;
        self.pixels += pixels;
        Ok(())
    }

    pub fn pixels(&self) -> u64 {
        self.pixels
    }

    pub fn mean(&self) -> Result<f64> {
        if self.pixels == 0 {
            return Err(Error::UndefinedMetric("running loss has no samples".into()));
        }
        Ok(self.weighted_sum / self.pixels as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Train,
    Test,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Train => "train",
            Phase::Test => "test",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Phase::Train),
            "test" => Ok(Phase::Test),
            other => Err(Error::Parameter(format!("unknown phase {other:?}"))),
        }
    }
}

/// One evaluation of one run after one epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricRecord {
    pub run_id: u64,
    pub optimizer: String,
    pub epoch: usize,
    pub phase: Phase,
    pub loss: f64,
    pub overall_acc: f64,
    pub mean_class_acc: f64,
}
