use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datagen::{gen_facade_like, gen_toy, load_labeled_dir, ClassPalette, LabeledImage, TOY_CLASSES};
use crate::error::{Error, Result};
use crate::nn::{build_facade_net, build_toy_net, NetworkSpec, FACADE_CLASSES, FACADE_PATCH, LAYER_SCALING_K, TOY_PATCH};
use crate::optim::OptimizerKind;
use crate::OptimConfig;

/// Offset between the seeds of the toy training and test images.
const TOY_TEST_SEED_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    /// One generated training image and one generated test image.
    Toy { seed: u64, width: usize, height: usize },
    /// `train_count + test_count` generated street scenes.
    Facade {
        seed: u64,
        width: usize,
        height: usize,
        train_count: usize,
        test_count: usize,
    },
    /// Images and colour-coded label maps on disk.
    Dir {
        train_dir: PathBuf,
        test_dir: PathBuf,
        palette: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Architecture {
    Toy,
    Facade { k: usize, l: usize },
}

impl Architecture {
    pub fn build(self) -> Result<NetworkSpec> {
        match self {
            Architecture::Toy => Ok(build_toy_net()),
            Architecture::Facade { k, l } => build_facade_net(k, l),
        }
    }

    /// Side length of the input window that maps to one output pixel.
    pub fn patch(self) -> usize {
        match self {
            Architecture::Toy => TOY_PATCH,
            Architecture::Facade { .. } => FACADE_PATCH,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchMode {
    /// One patch, one weight update.
    PerSample,
    /// Average the gradients of `n` patches per weight update.
    Accumulate(usize),
}

impl BatchMode {
    pub fn samples_per_update(self) -> usize {
        match self {
            BatchMode::PerSample => 1,
            BatchMode::Accumulate(n) => n,
        }
    }

    pub fn describe(self) -> String {
        match self {
            BatchMode::PerSample => "per_sample".into(),
            BatchMode::Accumulate(n) => format!("accumulate {n}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub architecture: Architecture,
    pub optimizer: OptimizerKind,
    #[serde(default)]
    pub optim: OptimConfig,
    pub epochs: usize,
    pub iterations_per_epoch: usize,
    #[serde(default = "default_batch_mode")]
    pub batch_mode: BatchMode,
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Class left out of training targets, losses and accuracies.
    #[serde(default)]
    pub ignore_class: Option<u8>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_batch_mode() -> BatchMode {
    BatchMode::PerSample
}

impl ExperimentConfig {
    /// Toy comparison: 20 repetitions of 10 epochs × 2,000 iterations on a
    /// 64×64 scene.
    pub fn toy_default() -> Self {
        Self {
            dataset: DatasetSpec::Toy {
                seed: 0,
                width: 64,
                height: 64,
            },
            architecture: Architecture::Toy,
            optimizer: OptimizerKind::Gd,
            optim: OptimConfig::default(),
            epochs: 10,
            iterations_per_epoch: 2000,
            batch_mode: BatchMode::PerSample,
            repetitions: 20,
            base_seed: 0,
            ignore_class: None,
            output: None,
        }
    }

    /// Facade-like task at desk scale; the unlabeled background is ignored.
    pub fn facade_default() -> Self {
        Self {
            dataset: DatasetSpec::Facade {
                seed: 0,
                width: 48,
                height: 48,
                train_count: 8,
                test_count: 4,
            },
            architecture: Architecture::Facade {
                k: LAYER_SCALING_K,
                l: 0,
            },
            optimizer: OptimizerKind::Gd,
            optim: OptimConfig::default(),
            epochs: 10,
            iterations_per_epoch: 1000,
            batch_mode: BatchMode::PerSample,
            repetitions: 5,
            base_seed: 0,
            ignore_class: Some(0),
            output: None,
        }
    }

    /// Complexity sweeps: the facade task with 2 repetitions of 20 epochs.
    pub fn scaling_default() -> Self {
        Self {
            epochs: 20,
            repetitions: 2,
            ..Self::facade_default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let at_least_one = |v: usize, name: &str| {
            if v >= 1 {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{name} must be >= 1")))
            }
        };
        at_least_one(self.epochs, "epochs")?;
        at_least_one(self.repetitions, "repetitions")?;
        at_least_one(self.iterations_per_epoch, "iterations_per_epoch")?;
        at_least_one(self.batch_mode.samples_per_update(), "accumulate batch size")?;
        self.optim.validate()?;
        self.architecture.build()?.validate()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.into(),
            source,
        })?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("config serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// `# key: value` lines describing the run setup, written above CSVs.
    pub fn metadata(&self) -> Vec<(String, String)> {
        vec![
            ("batch_mode".into(), self.batch_mode.describe()),
            ("epochs".into(), self.epochs.to_string()),
            ("iterations_per_epoch".into(), self.iterations_per_epoch.to_string()),
            ("repetitions".into(), self.repetitions.to_string()),
            ("base_seed".into(), self.base_seed.to_string()),
            ("learning_rate".into(), self.optim.learning_rate.to_string()),
            ("mu".into(), self.optim.mu.to_string()),
        ]
    }
}

/// Training and test images of one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub train: Vec<LabeledImage>,
    pub test: Vec<LabeledImage>,
    pub num_classes: usize,
}

impl Dataset {
    pub fn load(spec: &DatasetSpec) -> Result<Self> {
        let ds = match spec {
            DatasetSpec::Toy { seed, width, height } => Dataset {
                train: vec![gen_toy(*seed, *width, *height)?],
                test: vec![gen_toy(seed.wrapping_add(TOY_TEST_SEED_OFFSET), *width, *height)?],
                num_classes: TOY_CLASSES,
            },
            DatasetSpec::Facade {
                seed,
                width,
                height,
                train_count,
                test_count,
            } => {
                if *train_count == 0 || *test_count == 0 {
                    return Err(Error::Parameter("facade split sizes must be >= 1".into()));
                }
                let mut train = gen_facade_like(*seed, *width, *height, train_count + test_count)?;
                let test = train.split_off(*train_count);
                Dataset {
                    train,
                    test,
                    num_classes: FACADE_CLASSES,
                }
            }
            DatasetSpec::Dir {
                train_dir,
                test_dir,
                palette,
            } => {
                let palette = ClassPalette::load(palette)?;
                let (train, _) = load_labeled_dir(train_dir, &palette)?;
                let (test, _) = load_labeled_dir(test_dir, &palette)?;
                if train.is_empty() || test.is_empty() {
                    return Err(Error::Data("training and test directories must hold images".into()));
                }
                Dataset {
                    train,
                    test,
                    num_classes: palette.num_classes(),
                }
            }
        };
        Ok(ds)
    }

    /// Checks that `spec` accepts these images and emits one score per class.
    pub fn check_against(&self, spec: &NetworkSpec) -> Result<()> {
        if spec.num_classes != self.num_classes {
            return Err(Error::Data(format!(
                "network predicts {} classes, dataset has {}",
                spec.num_classes, self.num_classes
            )));
        }
        for img in self.train.iter().chain(&self.test) {
            if img.channels() != spec.input_channels {
                return Err(Error::Data(format!(
                    "network expects {} input channels, image has {}",
                    spec.input_channels,
                    img.channels()
                )));
            }
            spec.output_shape(img.height(), img.width())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_defaults() {
        let cfg = ExperimentConfig::facade_default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), cfg);

        let minimal = r#"{
            "dataset": {"kind": "toy", "seed": 3, "width": 40, "height": 40},
            "architecture": {"kind": "toy"},
            "optimizer": "quickprop",
            "epochs": 2, "iterations_per_epoch": 5, "repetitions": 1
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(minimal).unwrap();
        assert_eq!(cfg.batch_mode, BatchMode::PerSample);
        assert_eq!(cfg.optim, OptimConfig::default());
        cfg.validate().unwrap();

        let acc: BatchMode = serde_json::from_str(r#"{"accumulate": 8}"#).unwrap();
        assert_eq!(acc, BatchMode::Accumulate(8));
    }

    #[test]
    fn invariants_are_enforced() {
        for edit in [
            |c: &mut ExperimentConfig| c.epochs = 0,
            |c: &mut ExperimentConfig| c.repetitions = 0,
            |c: &mut ExperimentConfig| c.iterations_per_epoch = 0,
            |c: &mut ExperimentConfig| c.batch_mode = BatchMode::Accumulate(0),
            |c: &mut ExperimentConfig| c.optim.mu = -1.0,
        ] {
            let mut cfg = ExperimentConfig::toy_default();
            edit(&mut cfg);
            assert!(matches!(cfg.validate(), Err(Error::Parameter(_))));
        }
    }

    #[test]
    fn toy_split_uses_distinct_images() {
        let ds = Dataset::load(&ExperimentConfig::toy_default().dataset).unwrap();
        assert_eq!((ds.train.len(), ds.test.len()), (1, 1));
        assert_ne!(ds.train[0], ds.test[0]);
        ds.check_against(&build_toy_net()).unwrap();
        assert!(ds.check_against(&build_facade_net(2, 0).unwrap()).is_err());
    }
}
