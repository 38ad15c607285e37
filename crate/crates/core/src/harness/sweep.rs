//! Network-complexity sweeps: the facade network trained with gradient
//! descent and QuickProp while either the middle filter count `k` or the
//! number of repeated fully connected layers `l` grows.

use std::path::Path;

use rayon::prelude::*;

use super::config::{Architecture, Dataset, ExperimentConfig};
use super::csv::{fmt_float, to_csv_string};
use super::repeat::{run_repetitions, Repetitions, Stat};
use crate::error::{Error, Result};
use crate::metrics::Phase;
use crate::optim::OptimizerKind;

pub const SWEEP_OPTIMIZERS: [OptimizerKind; 2] = [OptimizerKind::Gd, OptimizerKind::QuickProp];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Filters,
    Layers,
}

impl SweepAxis {
    pub fn column(self) -> &'static str {
        match self {
            SweepAxis::Filters => "k",
            SweepAxis::Layers => "l",
        }
    }
}

/// Repetitions of one (axis value, optimizer) pair.
#[derive(Clone, Debug)]
pub struct SweepCell {
    pub value: usize,
    pub optimizer: OptimizerKind,
    pub parameters: usize,
    /// Error text when the cell produced no aggregate.
    pub outcome: std::result::Result<Repetitions, String>,
}

impl SweepCell {
    pub fn status(&self) -> String {
        match &self.outcome {
            Ok(_) => "ok".into(),
            Err(e) => e.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub epochs: usize,
    pub cells: Vec<SweepCell>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: usize,
    pub optimizer: OptimizerKind,
    pub parameters: usize,
    pub epoch: usize,
    pub phase: Phase,
    pub runs: usize,
    pub diverged: usize,
    pub loss: Option<Stat>,
    pub overall_acc: Option<Stat>,
    pub mean_class_acc: Option<Stat>,
    /// QuickProp mean loss minus gradient-descent mean loss at this value,
    /// epoch and phase.
    pub loss_gap: Option<f64>,
    pub status: String,
}

impl Sweep {
    pub fn cell(&self, value: usize, optimizer: OptimizerKind) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.value == value && c.optimizer == optimizer)
    }

    fn mean_loss(&self, value: usize, optimizer: OptimizerKind, epoch: usize, phase: Phase) -> Option<f64> {
        let reps = self.cell(value, optimizer)?.outcome.as_ref().ok()?;
        Some(reps.row(epoch, phase)?.loss.mean)
    }

    /// `QuickProp − GD` mean loss at the given point.
    pub fn gap(&self, value: usize, epoch: usize, phase: Phase) -> Option<f64> {
        Some(
            self.mean_loss(value, OptimizerKind::QuickProp, epoch, phase)?
                - self.mean_loss(value, OptimizerKind::Gd, epoch, phase)?,
        )
    }

    /// One row per (value, optimizer, epoch, phase), including cells that failed.
    pub fn rows(&self) -> Vec<SweepRow> {
        let mut rows = Vec::with_capacity(self.cells.len() * self.epochs * 2);
        for cell in &self.cells {
            for epoch in 1..=self.epochs {
                for phase in [Phase::Train, Phase::Test] {
                    let (runs, diverged, agg) = match &cell.outcome {
                        Ok(reps) => (reps.runs.len(), reps.diverged, reps.row(epoch, phase)),
                        Err(_) => (0, 0, None),
                    };
                    rows.push(SweepRow {
                        value: cell.value,
                        optimizer: cell.optimizer,
                        parameters: cell.parameters,
                        epoch,
                        phase,
                        runs,
                        diverged,
                        loss: agg.map(|a| a.loss),
                        overall_acc: agg.map(|a| a.overall_acc),
                        mean_class_acc: agg.map(|a| a.mean_class_acc),
                        loss_gap: self.gap(cell.value, epoch, phase),
                        status: cell.status(),
                    });
                }
            }
        }
        rows
    }

    pub fn to_csv(&self, metadata: &[(String, String)]) -> Result<String> {
        let header = [
            self.axis.column(),
            "optimizer",
            "parameters",
            "epoch",
            "phase",
            "runs",
            "diverged",
            "loss_mean",
            "loss_std",
            "overall_acc_mean",
            "overall_acc_std",
            "mean_class_acc_mean",
            "mean_class_acc_std",
            "loss_gap",
            "status",
        ];
        let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
        let rows = self.rows().into_iter().map(|r| {
            vec![
                r.value.to_string(),
                r.optimizer.name().into(),
                r.parameters.to_string(),
                r.epoch.to_string(),
                r.phase.to_string(),
                r.runs.to_string(),
                r.diverged.to_string(),
                opt(r.loss.map(|s| s.mean)),
                opt(r.loss.map(|s| s.std)),
                opt(r.overall_acc.map(|s| s.mean)),
                opt(r.overall_acc.map(|s| s.std)),
                opt(r.mean_class_acc.map(|s| s.mean)),
                opt(r.mean_class_acc.map(|s| s.std)),
                opt(r.loss_gap),
                r.status,
            ]
        });
        to_csv_string(&header, rows, metadata)
    }

    pub fn write_csv(&self, metadata: &[(String, String)], path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv(metadata)?).map_err(|e| Error::io(path, e))
    }
}

fn run_sweep(base: &ExperimentConfig, data: &Dataset, axis: SweepAxis, values: &[usize], arch: impl Fn(usize) -> Architecture) -> Result<Sweep> {
    if values.is_empty() {
        return Err(Error::Parameter(format!("empty {} list", axis.column())));
    }
    let mut jobs = Vec::new();
    for &value in values {
        let spec = arch(value).build()?;
        data.check_against(&spec)?;
        for optimizer in SWEEP_OPTIMIZERS {
            let mut cfg = base.clone();
            cfg.architecture = arch(value);
            cfg.optimizer = optimizer;
            cfg.validate()?;
            jobs.push((value, optimizer, spec.count_parameters(), cfg));
        }
    }
    let cells = jobs
        .into_par_iter()
        .map(|(value, optimizer, parameters, cfg)| SweepCell {
            value,
            optimizer,
            parameters,
            outcome: run_repetitions(&cfg, data).map_err(|e| match e {
                Error::AllRunsDiverged { .. } => "all_diverged".to_string(),
                other => format!("error: {other}"),
            }),
        })
        .collect();
    Ok(Sweep {
        axis,
        epochs: base.epochs,
        cells,
    })
}

fn base_layers(base: &ExperimentConfig) -> usize {
    match base.architecture {
        Architecture::Facade { l, .. } => l,
        Architecture::Toy => 0,
    }
}

/// Sweeps the facade network's middle filter count `k`, keeping the base
/// configuration's layer repetitions.
pub fn experiment_scale_filters(base: &ExperimentConfig, data: &Dataset, k_list: &[usize]) -> Result<Sweep> {
    if let Some(k) = k_list.iter().find(|&&k| k == 0) {
        return Err(Error::Parameter(format!("filter counts must be >= 1, got {k}")));
    }
    let l = base_layers(base);
    run_sweep(base, data, SweepAxis::Filters, k_list, |k| Architecture::Facade { k, l })
}

/// Sweeps the number of repetitions `l` of the first fully connected layer.
/// Uses the base configuration's `k`; the facade default gives that layer
/// 192 kernels.
pub fn experiment_scale_layers(base: &ExperimentConfig, data: &Dataset, l_list: &[usize]) -> Result<Sweep> {
    let k = match base.architecture {
        Architecture::Facade { k, .. } => k,
        Architecture::Toy => {
            return Err(Error::Parameter("layer scaling needs a facade architecture".into()));
        }
    };
    run_sweep(base, data, SweepAxis::Layers, l_list, |l| Architecture::Facade { k, l })
}
