use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Dataset, ExperimentConfig};
use crate::datagen::{sample_patch_where, LabeledImage};
use crate::error::{Error, Result};
use crate::metrics::{ConfusionMatrix, MetricRecord, Phase, RunningLoss};
use crate::nn::{argmax_labels, one_hot, quadratic_loss_masked};
use crate::Network;

/// Per-pixel losses above this count as divergence.
pub const DIVERGENCE_LOSS: f64 = 1e6;
const MAX_PATCH_DRAWS: usize = 100_000;

const INIT_STREAM: u64 = 0;
const SAMPLE_STREAM: u64 = 1;

/// Why a run stopped early.
#[derive(Clone, Debug, PartialEq)]
pub struct Divergence {
    /// Epoch during which training blew up (1-based).
    pub epoch: usize,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub run_id: u64,
    pub seed: u64,
    /// One train and one test record per completed epoch.
    pub records: Vec<MetricRecord>,
    pub divergence: Option<Divergence>,
    /// Weights after the last completed epoch.
    pub model: Network,
    pub wall_clock_secs: f64,
}

impl RunResult {
    pub fn diverged(&self) -> bool {
        self.divergence.is_some()
    }

    pub fn final_record(&self, phase: Phase) -> Option<&MetricRecord> {
        self.records.iter().rev().find(|r| r.phase == phase)
    }
}

/// Loss and confusion matrix of a network over whole images.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub loss: f64,
    pub confusion: ConfusionMatrix,
}

/// Fully-convolutional evaluation. Labels are cropped to the output size and
/// pixels of `ignore_class` count neither in the loss nor in the accuracies.
pub fn evaluate(net: &Network, images: &[LabeledImage], ignore_class: Option<u8>) -> Result<Evaluation> {
    let k = net.spec().num_classes;
    let mut confusion = match ignore_class {
        Some(c) => ConfusionMatrix::with_excluded(k, c as usize),
        None => ConfusionMatrix::new(k),
    };
    let mut loss = RunningLoss::new();
    for img in images {
        let scores = net.infer(&img.image)?;
        let (_, h, w) = scores.dims3()?;
        let labels = img.center_crop_labels(h, w)?;
        let target = one_hot(&labels, k, h, w)?;
        let mask: Option<Vec<bool>> = ignore_class.map(|c| labels.iter().map(|&l| l != c).collect());
        let (l, pixels) = quadratic_loss_masked(&scores, &target, mask.as_deref())?;
        if pixels > 0 {
            loss.add(l, pixels as u64)?;
        }
        confusion.accumulate(&labels, &argmax_labels(&scores)?)?;
    }
    Ok(Evaluation {
        loss: loss.mean()?,
        confusion,
    })
}

fn record(run_id: u64, cfg: &ExperimentConfig, epoch: usize, phase: Phase, ev: &Evaluation) -> Result<MetricRecord> {
    Ok(MetricRecord {
        run_id,
        optimizer: cfg.optimizer.name().into(),
        epoch,
        phase,
        loss: ev.loss,
        overall_acc: ev.confusion.overall_accuracy()?,
        mean_class_acc: ev.confusion.mean_class_accuracy()?,
    })
}

fn blown_up(loss: f64) -> bool {
    !loss.is_finite() || loss > DIVERGENCE_LOSS
}

/// Mean gradient over `n` sampled patches, with the largest patch loss.
fn sample_gradient(
    net: &Network,
    data: &Dataset,
    cfg: &ExperimentConfig,
    rng: &mut ChaCha8Rng,
    n: usize,
) -> Result<(Vec<f64>, f64)> {
    let patch = cfg.architecture.patch();
    let k = data.num_classes;
    let ignore = cfg.ignore_class;
    let mut grad = vec![0.0; net.num_parameters()];
    let mut worst = 0.0f64;
    for _ in 0..n {
        let img = &data.train[rng.gen_range(0..data.train.len())];
        let (input, label) = sample_patch_where(img, patch, rng, MAX_PATCH_DRAWS, |l| Some(l) != ignore)?;
        let (scores, cache) = net.forward(&input)?;
        let target = one_hot(&[label], k, 1, 1)?;
        let (loss, _) = quadratic_loss_masked(&scores, &target, None)?;
        worst = worst.max(loss);
        if blown_up(loss) {
            return Ok((grad, loss));
        }
        for (acc, g) in grad.iter_mut().zip(net.backward(&cache, &target)?) {
            *acc += g;
        }
    }
    if n > 1 {
        let scale = 1.0 / n as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
    }
    Ok((grad, worst))
}

/// Trains one network with seed `base_seed + run_id`: every epoch performs
/// `iterations_per_epoch` weight updates on randomly sampled patches and
/// then evaluates the train and test split. A non-finite or exploding loss
/// ends the run; the records of completed epochs are kept.
pub fn run_training(cfg: &ExperimentConfig, data: &Dataset, run_id: u64) -> Result<RunResult> {
    cfg.validate()?;
    let spec = cfg.architecture.build()?;
    data.check_against(&spec)?;
    let started = Instant::now();
    let seed = cfg.base_seed.wrapping_add(run_id);

    let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
    init_rng.set_stream(INIT_STREAM);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SAMPLE_STREAM);

    let mut net = Network::init_uniform(spec, &mut init_rng)?;
    let mut optimizer = cfg.optimizer.build(cfg.optim, net.num_parameters())?;
    let per_update = cfg.batch_mode.samples_per_update();
    let mut records = Vec::with_capacity(2 * cfg.epochs);
    let mut divergence = None;
    let mut last_good = net.clone();

    'epochs: for epoch in 1..=cfg.epochs {
        for _ in 0..cfg.iterations_per_epoch {
            let (grad, loss) = sample_gradient(&net, data, cfg, &mut rng, per_update)?;
            if blown_up(loss) {
                divergence = Some(Divergence {
                    epoch,
                    reason: format!("training loss {loss}"),
                });
                break 'epochs;
            }
            match optimizer.step(net.weights_mut(), &grad) {
                Ok(()) => {}
                Err(Error::NonFinite { index }) => {
                    divergence = Some(Divergence {
                        epoch,
                        reason: format!("non-finite gradient at weight {index}"),
                    });
                    break 'epochs;
                }
                Err(e) => return Err(e),
            }
        }
        let train = evaluate(&net, &data.train, cfg.ignore_class)?;
        let test = evaluate(&net, &data.test, cfg.ignore_class)?;
        if blown_up(train.loss) || blown_up(test.loss) {
            divergence = Some(Divergence {
                epoch,
                reason: format!("evaluation loss train {} test {}", train.loss, test.loss),
            });
            break;
        }
        records.push(record(run_id, cfg, epoch, Phase::Train, &train)?);
        records.push(record(run_id, cfg, epoch, Phase::Test, &test)?);
        last_good = net.clone();
    }

    Ok(RunResult {
        run_id,
        seed,
        records,
        divergence,
        model: last_good,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    })
}
