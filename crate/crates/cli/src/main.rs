use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use quickprop_core::datagen::{facade_palette, gen_facade_like, gen_toy, load_labeled_dir, save_labeled_image, toy_palette, ClassPalette};
use quickprop_core::harness::{
    evaluate, experiment_scale_filters, experiment_scale_layers, run_repetitions, write_csv_with_metadata, Dataset,
    ExperimentConfig, Sweep,
};
use quickprop_core::metrics::Phase;
use quickprop_core::nn::{load_model, save_model};
use quickprop_core::optim::OptimizerKind;
use quickprop_core::{Error, Network};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "quickprop", version, about = "QuickProp vs gradient descent on small segmentation networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a toy scene (toy.pgm, toy_labels.ppm, palette.json).
    GenToy {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "64x64", value_parser = parse_size)]
        size: (usize, usize),
    },
    /// Write street scenes facade_NNN.ppm with label maps and palette.json.
    GenFacade {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value = "64x64", value_parser = parse_size)]
        size: (usize, usize),
    },
    /// Train with repetitions and write per-epoch learning curves.
    Train(TrainArgs),
    /// Complexity sweeps comparing gradient descent and QuickProp.
    #[command(subcommand)]
    Experiment(Experiment),
    /// Evaluate a saved model on a labeled image directory.
    Eval {
        #[arg(long)]
        model: PathBuf,
        /// Directory with images, label maps and palette.json.
        #[arg(long)]
        data: PathBuf,
        /// Class excluded from loss and accuracies.
        #[arg(long)]
        ignore_class: Option<u8>,
    },
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    repetitions: Option<usize>,
    /// Base seed; run r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination (defaults to the config's output field).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Overrides,
    #[arg(long, value_parser = parse_optimizer)]
    optimizer: Option<OptimizerKind>,
    /// Save the first non-diverged run's final model as JSON.
    #[arg(long)]
    model_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Experiment {
    /// Sweep the facade network's middle filter count.
    ScaleFilters {
        #[command(flatten)]
        common: Overrides,
        #[arg(long, value_delimiter = ',', default_value = "2,7,12,17,22")]
        k: Vec<usize>,
    },
    /// Sweep the number of repeated fully connected layers.
    ScaleLayers {
        #[command(flatten)]
        common: Overrides,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5")]
        l: Vec<usize>,
    },
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got {s:?}"))?;
    let dim = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("bad dimension {v:?}: {e}"));
    Ok((dim(w)?, dim(h)?))
}

fn parse_optimizer(s: &str) -> Result<OptimizerKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn load_config(o: &Overrides) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(&o.config)?;
    if let Some(lr) = o.lr {
        cfg.optim.learning_rate = lr;
    }
    if let Some(mu) = o.mu {
        cfg.optim.mu = mu;
    }
    if let Some(e) = o.epochs {
        cfg.epochs = e;
    }
    if let Some(n) = o.iterations {
        cfg.iterations_per_epoch = n;
    }
    if let Some(r) = o.repetitions {
        cfg.repetitions = r;
    }
    if let Some(s) = o.seed {
        cfg.base_seed = s;
    }
    if let Some(out) = &o.out {
        cfg.output = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.into(),
        source,
    })
}

fn gen_toy_cmd(out: &Path, seed: u64, (w, h): (usize, usize)) -> Result<(), Error> {
    let img = gen_toy(seed, w, h)?;
    let palette = toy_palette();
    create_dir(out)?;
    save_labeled_image(out, "toy", &img, &palette)?;
    palette.save(&out.join("palette.json"))?;
    println!("wrote {w}x{h} toy scene to {}", out.display());
    Ok(())
}

fn gen_facade_cmd(out: &Path, seed: u64, count: usize, (w, h): (usize, usize)) -> Result<(), Error> {
    let images = gen_facade_like(seed, w, h, count)?;
    let palette = facade_palette();
    create_dir(out)?;
    for (i, img) in images.iter().enumerate() {
        save_labeled_image(out, &format!("facade_{i:03}"), img, &palette)?;
    }
    palette.save(&out.join("palette.json"))?;
    println!("wrote {count} {w}x{h} scenes to {}", out.display());
    Ok(())
}

fn train_cmd(args: &TrainArgs) -> Result<(), Error> {
    let mut cfg = load_config(&args.common)?;
    if let Some(kind) = args.optimizer {
        cfg.optimizer = kind;
    }
    let data = Dataset::load(&cfg.dataset)?;
    let reps = run_repetitions(&cfg, &data)?;
    let records: Vec<_> = reps.runs.iter().flat_map(|r| r.records.iter().cloned()).collect();
    if let Some(path) = &cfg.output {
        write_csv_with_metadata(&records, &cfg.metadata(), path)?;
        println!("wrote {}", path.display());
    }
    if let Some(path) = &args.model_out {
        let run = reps.runs.iter().find(|r| !r.diverged()).expect("at least one healthy run");
        save_model(&run.model, path)?;
        println!("wrote model of run {} to {}", run.run_id, path.display());
    }
    for run in reps.runs.iter().filter(|r| r.diverged()) {
        let d = run.divergence.as_ref().expect("diverged");
        eprintln!("run {} diverged in epoch {}: {}", run.run_id, d.epoch, d.reason);
    }
    for phase in [Phase::Train, Phase::Test] {
        if let Some(row) = reps.final_row(phase) {
            println!(
                "{} epoch {} {phase}: loss {:.5} ± {:.5}  overall {:.4}  class-wise {:.4}",
                cfg.optimizer, row.epoch, row.loss.mean, row.loss.std, row.overall_acc.mean, row.mean_class_acc.mean
            );
        }
    }
    Ok(())
}

fn report_sweep(cfg: &ExperimentConfig, sweep: &Sweep) -> Result<(), Error> {
    if let Some(path) = &cfg.output {
        sweep.write_csv(&cfg.metadata(), path)?;
        println!("wrote {}", path.display());
    } else {
        print!("{}", sweep.to_csv(&cfg.metadata())?);
    }
    for cell in &sweep.cells {
        if let Err(status) = &cell.outcome {
            eprintln!("{}={} {}: {status}", sweep.axis.column(), cell.value, cell.optimizer);
        }
    }
    Ok(())
}

fn eval_cmd(model: &Path, data: &Path, ignore_class: Option<u8>) -> Result<(), Error> {
    let net: Network = load_model(model)?;
    let palette = ClassPalette::load(&data.join("palette.json"))?;
    let (images, report) = load_labeled_dir(data, &palette)?;
    for u in &report.unknown_colors {
        eprintln!("{}: {} pixels of unknown colour {:?}", u.file.display(), u.pixels, u.rgb);
    }
    if images.is_empty() {
        return Err(Error::Data(format!("no labeled images in {}", data.display())));
    }
    let ds = Dataset {
        num_classes: palette.num_classes(),
        train: vec![],
        test: images,
    };
    ds.check_against(net.spec())?;
    let ev = evaluate(&net, &ds.test, ignore_class)?;
    println!("images {}", ds.test.len());
    println!("loss {:.8e}", ev.loss);
    println!("overall_acc {:.8e}", ev.confusion.overall_accuracy()?);
    println!("mean_class_acc {:.8e}", ev.confusion.mean_class_accuracy()?);
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::GenToy { out, seed, size } => gen_toy_cmd(&out, seed, size),
        Command::GenFacade { out, seed, count, size } => gen_facade_cmd(&out, seed, count, size),
        Command::Train(args) => train_cmd(&args),
        Command::Experiment(Experiment::ScaleFilters { common, k }) => {
            let cfg = load_config(&common)?;
            let data = Dataset::load(&cfg.dataset)?;
            report_sweep(&cfg, &experiment_scale_filters(&cfg, &data, &k)?)
        }
        Command::Experiment(Experiment::ScaleLayers { common, l }) => {
            let cfg = load_config(&common)?;
            let data = Dataset::load(&cfg.dataset)?;
            report_sweep(&cfg, &experiment_scale_layers(&cfg, &data, &l)?)
        }
        Command::Eval {
            model,
            data,
            ignore_class,
        } => eval_cmd(&model, &data, ignore_class),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parameter(_) => EXIT_USAGE,
        Error::AllRunsDiverged { .. } => EXIT_DIVERGED,
        _ => EXIT_DATA,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
