//! Experiment driver: configuration, seeded training runs, repetitions,
//! complexity sweeps and CSV output.

pub mod config;
pub mod csv;
pub mod repeat;
pub mod run;
pub mod sweep;

pub use config::{Architecture, BatchMode, Dataset, DatasetSpec, ExperimentConfig};
pub use csv::{format_csv, parse_csv, read_csv, write_csv, write_csv_with_metadata, CSV_HEADER};
pub use repeat::{aggregate, run_repetitions, AggregateRow, Repetitions, Stat};
pub use run::{evaluate, run_training, Divergence, Evaluation, RunResult, DIVERGENCE_LOSS};
pub use sweep::{experiment_scale_filters, experiment_scale_layers, Sweep, SweepAxis, SweepCell, SweepRow};
