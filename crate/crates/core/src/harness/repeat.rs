use rayon::prelude::*;

use super::config::{Dataset, ExperimentConfig};
use super::run::{run_training, RunResult};
use crate::error::{Error, Result};
use crate::metrics::Phase;

/// Sample mean and standard deviation (`n − 1` denominator, zero for `n = 1`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n == 1 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Some(Stat { mean, std })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub epoch: usize,
    pub phase: Phase,
    pub loss: Stat,
    pub overall_acc: Stat,
    pub mean_class_acc: Stat,
}

/// All repetitions of one configuration.
#[derive(Clone, Debug)]
pub struct Repetitions {
    pub optimizer: String,
    /// Every run, ordered by run id.
    pub runs: Vec<RunResult>,
    /// Number of runs that diverged and are left out of `rows`.
    pub diverged: usize,
    /// One row per (epoch, phase) over the non-diverged runs.
    pub rows: Vec<AggregateRow>,
}

impl Repetitions {
    pub fn row(&self, epoch: usize, phase: Phase) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| r.epoch == epoch && r.phase == phase)
    }

    pub fn final_row(&self, phase: Phase) -> Option<&AggregateRow> {
        self.rows.iter().rev().find(|r| r.phase == phase)
    }
}

/// Means and sample standard deviations per (epoch, phase) over the runs
/// that did not diverge. Run order does not matter.
pub fn aggregate(runs: &[RunResult]) -> Vec<AggregateRow> {
    let mut healthy: Vec<&RunResult> = runs.iter().filter(|r| !r.diverged()).collect();
    healthy.sort_by_key(|r| r.run_id);
    let epochs = healthy.iter().flat_map(|r| r.records.iter().map(|m| m.epoch)).max().unwrap_or(0);
    let mut rows = Vec::new();
    for epoch in 1..=epochs {
        for phase in [Phase::Train, Phase::Test] {
            let recs: Vec<_> = healthy
                .iter()
                .filter_map(|r| r.records.iter().find(|m| m.epoch == epoch && m.phase == phase))
                .collect();
            let stat = |f: fn(&crate::metrics::MetricRecord) -> f64| {
                Stat::of(&recs.iter().map(|m| f(m)).collect::<Vec<_>>())
            };
            if let (Some(loss), Some(overall_acc), Some(mean_class_acc)) =
                (stat(|m| m.loss), stat(|m| m.overall_acc), stat(|m| m.mean_class_acc))
            {
                rows.push(AggregateRow {
                    epoch,
                    phase,
                    loss,
                    overall_acc,
                    mean_class_acc,
                });
            }
        }
    }
    rows
}

/// Runs `cfg.repetitions` trainings in parallel, run `r` seeded with
/// `base_seed + r`, and aggregates them. Fails only if every run diverged.
pub fn run_repetitions(cfg: &ExperimentConfig, data: &Dataset) -> Result<Repetitions> {
    cfg.validate()?;
    let runs = (0..cfg.repetitions as u64)
        .into_par_iter()
        .map(|r| run_training(cfg, data, r))
        .collect::<Result<Vec<_>>>()?;
    let diverged = runs.iter().filter(|r| r.diverged()).count();
    if diverged == runs.len() {
        return Err(Error::AllRunsDiverged { runs: runs.len() });
    }
    Ok(Repetitions {
        optimizer: cfg.optimizer.name().into(),
        rows: aggregate(&runs),
        diverged,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::run::Divergence;
    use crate::harness::DatasetSpec;
    use crate::metrics::MetricRecord;
    use crate::nn::build_toy_net;
    use crate::Network;

    fn fake(run_id: u64, losses: &[f64], diverged: bool) -> RunResult {
        let records = losses
            .iter()
            .enumerate()
            .flat_map(|(e, &loss)| {
                [Phase::Train, Phase::Test].map(|phase| MetricRecord {
                    run_id,
                    optimizer: "gd".into(),
                    epoch: e + 1,
                    phase,
                    loss,
                    overall_acc: 0.5,
                    mean_class_acc: 0.25,
                })
            })
            .collect();
        RunResult {
            run_id,
            seed: run_id,
            records,
            divergence: diverged.then(|| Divergence {
                epoch: losses.len() + 1,
                reason: "test".into(),
            }),
            model: Network::zeros(build_toy_net()).unwrap(),
            wall_clock_secs: 0.0,
        }
    }

    #[test]
    fn stat_examples() {
        assert_eq!(Stat::of(&[]), None);
        assert_eq!(Stat::of(&[3.0]), Some(Stat { mean: 3.0, std: 0.0 }));
        let s = Stat::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn single_run_has_zero_std() {
        let rows = aggregate(&[fake(0, &[1.0, 0.5], false)]);
        assert_eq!(rows.len(), 4);
        for r in rows {
            assert_eq!((r.loss.std, r.overall_acc.std, r.mean_class_acc.std), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn diverged_runs_are_left_out() {
        let runs = [
            fake(0, &[1.0], false),
            fake(1, &[100.0], true),
            fake(2, &[3.0], false),
        ];
        let rows = aggregate(&runs);
        assert_eq!(rows[0].loss, Stat::of(&[1.0, 3.0]).unwrap());
    }

    #[test]
    fn means_ignore_run_order() {
        let runs = vec![
            fake(0, &[0.1, 0.7], false),
            fake(1, &[0.3, 0.11], false),
            fake(2, &[0.2, 0.13], false),
        ];
        let mut reversed = runs.clone();
        reversed.reverse();
        assert_eq!(aggregate(&runs), aggregate(&reversed));
    }

    #[test]
    fn seed_isolation_and_parallel_determinism() {
        let mut cfg = ExperimentConfig::toy_default();
        cfg.dataset = DatasetSpec::Toy {
            seed: 2,
            width: 32,
            height: 32,
        };
        cfg.epochs = 1;
        cfg.iterations_per_epoch = 20;
        cfg.repetitions = 2;
        let data = Dataset::load(&cfg.dataset).unwrap();
        let two = run_repetitions(&cfg, &data).unwrap();
        cfg.repetitions = 3;
        let three = run_repetitions(&cfg, &data).unwrap();
        assert_eq!(two.diverged, 0);
        for r in 0..2 {
            assert_eq!(two.runs[r].records, three.runs[r].records);
        }
    }

    #[test]
    fn all_diverged_is_an_error() {
        let mut cfg = ExperimentConfig::toy_default();
        cfg.dataset = DatasetSpec::Toy {
            seed: 2,
            width: 32,
            height: 32,
        };
        cfg.epochs = 2;
        cfg.iterations_per_epoch = 100;
        cfg.repetitions = 2;
        let mut data = Dataset::load(&cfg.dataset).unwrap();
        crate::harness::run::tests::poison(&mut data);
        assert!(matches!(
            run_repetitions(&cfg, &data),
            Err(Error::AllRunsDiverged { runs: 2 })
        ));
    }
}
