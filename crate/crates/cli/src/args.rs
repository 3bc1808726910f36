//! Command-line surface. Every subcommand's arguments serialize to JSON so
//! they can be echoed into the headers of the files they produce.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use falqon_core::schedules::{NOMINAL_DT, NOMINAL_ELL};

#[derive(Debug, Parser)]
#[command(name = "falqon", version, about = "FALQON reference curves, surrogate training and evaluation")]
pub struct Cli {
    /// Worker threads for instance-parallel work; 1 gives bitwise-reproducible runs.
    /// Defaults to the available parallelism.
    #[arg(long, global = true, env = "FALQON_THREADS")]
    pub threads: Option<usize>,

    /// Directory that receives every output file.
    #[arg(long, global = true, env = "FALQON_OUT_DIR", default_value = "falqon-out")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Enumerate or sample cubic topologies and write weighted instance files.
    GenGraphs(GenGraphs),
    /// Build (or resume) the reference-curve dataset.
    GenDataset(GenDataset),
    /// Train the teacher, then distill the student.
    Train(Train),
    /// Predict parameter curves for instance files with a trained student.
    Predict(Predict),
    /// Run the feedback loop on instances and write curves and trajectories.
    RunFalqon(RunFalqon),
    /// Run the digitized linear annealing schedule on instances.
    RunAnneal(RunAnneal),
    /// Replay a parameter curve on an instance without feedback.
    Replay(Replay),
    /// Compare candidate curves with reference curves and the linear schedule.
    Evaluate(Evaluate),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenGraphs(_) => "gen-graphs",
            Command::GenDataset(_) => "gen-dataset",
            Command::Train(_) => "train",
            Command::Predict(_) => "predict",
            Command::RunFalqon(_) => "run-falqon",
            Command::RunAnneal(_) => "run-anneal",
            Command::Replay(_) => "replay",
            Command::Evaluate(_) => "evaluate",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct GenGraphs {
    /// Vertex counts (even, >= 4), comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    /// Weight draws per topology.
    #[arg(long, default_value_t = 1)]
    pub draws: usize,
    /// Master seed for weights and sampling.
    #[arg(long, default_value_t = 20_240)]
    pub seed: u64,
    /// Write unit-weight instances (one per topology) instead of weighted draws.
    #[arg(long)]
    pub unweighted: bool,
    /// Sample this many random topologies per size instead of enumerating all of them.
    #[arg(long)]
    pub sample: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct GenDataset {
    /// Dataset configuration JSON; the nominal configuration when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override the instance sizes.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Override the number of weight draws per topology.
    #[arg(long)]
    pub draws: Option<usize>,
    /// Override the curve length.
    #[arg(long)]
    pub ell: Option<usize>,
    /// Keep all draws of one topology in the same split.
    #[arg(long)]
    pub split_by_topology: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Full-size model, 100 epochs.
    Nominal,
    /// Hidden width 32, 30 epochs, cosine decay.
    Mini,
}

#[derive(Debug, Args, Serialize)]
pub struct Train {
    /// Dataset directory written by gen-dataset.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Training configuration JSON; overrides --preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "nominal")]
    pub preset: Preset,
    /// Override the training seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the number of epochs per phase.
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct Predict {
    /// Student checkpoint (the teacher is never used for prediction).
    #[arg(long)]
    pub model: PathBuf,
    /// Instance files or directories of instance files.
    #[arg(long = "in", required = true)]
    pub inputs: Vec<PathBuf>,
    /// Time step recorded in the predicted curve files.
    #[arg(long, default_value_t = NOMINAL_DT)]
    pub dt: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct RunFalqon {
    /// Instance files or directories of instance files.
    #[arg(long = "in", required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = NOMINAL_DT)]
    pub dt: f64,
    #[arg(long, default_value_t = NOMINAL_ELL)]
    pub ell: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct RunAnneal {
    /// Instance files or directories of instance files.
    #[arg(long = "in", required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = NOMINAL_DT)]
    pub dt: f64,
    #[arg(long, default_value_t = NOMINAL_ELL)]
    pub ell: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct Replay {
    /// Instance file.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Parameter curve file.
    #[arg(long)]
    pub curve: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    /// Candidate curves read from --candidate.
    Candidate,
    /// Each curve compared with itself; every deviation is zero.
    #[value(name = "self")]
    SelfCheck,
    /// The unweighted-baseline transfer as the candidate.
    Baseline,
}

#[derive(Debug, Args, Serialize)]
pub struct Evaluate {
    #[arg(long, value_enum, default_value = "candidate")]
    pub mode: EvalMode,
    /// Dataset directory; its records supply instances and reference curves.
    #[arg(long, conflicts_with = "instances")]
    pub dataset: Option<PathBuf>,
    /// Dataset split to evaluate.
    #[arg(long, default_value = "test", value_parser = ["train", "val", "test"])]
    pub split: String,
    /// Restrict to instances with this many vertices.
    #[arg(long)]
    pub size: Option<usize>,
    /// Instance files or directories (instead of --dataset).
    #[arg(long = "instances")]
    pub instances: Vec<PathBuf>,
    /// Reference curve file or directory; the feedback loop is run when absent.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Candidate curve file or directory.
    #[arg(long)]
    pub candidate: Option<PathBuf>,
    /// Time step for references computed on the fly.
    #[arg(long, default_value_t = NOMINAL_DT)]
    pub dt: f64,
    /// Length of references computed on the fly.
    #[arg(long, default_value_t = NOMINAL_ELL)]
    pub ell: usize,
}
