//! One binary for the whole workflow: generate a scene, link detections into
//! tracks, and score the result.
//!
//! Exit codes are a stable contract: 0 success, 2 unreadable or malformed
//! input, 3 invalid configuration, 4 inputs that parse but cannot be
//! evaluated against each other.

mod manifest;
mod run;
mod scene_cfg;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrackerKind {
    /// Nearest-centroid association, no motion model.
    Cta,
    /// Kalman prediction with global IOU assignment.
    Sort,
    /// Preset-velocity prediction with a jitter buffer and location scores.
    Ibta,
}

impl TrackerKind {
    pub fn name(self) -> &'static str {
        match self {
            TrackerKind::Cta => "cta",
            TrackerKind::Sort => "sort",
            TrackerKind::Ibta => "ibta",
        }
    }
}

#[derive(Parser)]
#[command(name = "rowtrack", version, about = "Row-crop multi-object tracking toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Link a detection stream into tracks.
    Track(TrackArgs),
    /// Score a track file against ground truth (MOTA, MOTP, identity metrics).
    Eval(EvalArgs),
    /// Generate a synthetic scene: ground truth plus detections.
    Simulate(SimulateArgs),
    /// Score raw detections against ground truth (per-class AP, mAP).
    DetectEval(DetectEvalArgs),
    /// Measure tracker throughput over a detection stream.
    Bench(BenchArgs),
}

#[derive(clap::Args)]
pub struct TrackArgs {
    /// Tracker to run.
    #[arg(long, value_enum)]
    pub tracker: TrackerKind,
    /// Detection file: frame,class_id,confidence,x_min,y_min,width,height.
    #[arg(long)]
    pub dets: PathBuf,
    /// Tracker config file (key = value lines); defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output track file; a run manifest is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::Args)]
pub struct EvalArgs {
    /// Ground-truth file. When absent, per-class files with `_c0/_c1/_c2`
    /// appended to the stem are merged instead.
    #[arg(long)]
    pub gt: PathBuf,
    /// Track file produced by the track command.
    #[arg(long)]
    pub tracks: PathBuf,
    /// IOU at or above which a track box may match a ground-truth box.
    #[arg(long, default_value_t = 0.5)]
    pub match_iou: f64,
    /// Use identity-level IDFN/IDFP instead of per-frame FN/FP in the MOTA
    /// formula.
    #[arg(long)]
    pub mota_id: bool,
    /// Keep inferred (status I) records in the evaluation. This is the
    /// default.
    #[arg(long, conflicts_with = "exclude_inferred")]
    pub include_inferred: bool,
    /// Drop inferred (status I) records before evaluating.
    #[arg(long)]
    pub exclude_inferred: bool,
    /// Also write the table as CSV; a run manifest is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct SimulateArgs {
    /// Scene config file (key = value lines); defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the seed from the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; receives gt.txt, dets.txt and manifest.txt.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::Args)]
pub struct DetectEvalArgs {
    /// Ground-truth file (same resolution rules as eval).
    #[arg(long)]
    pub gt: PathBuf,
    /// Detection file to score.
    #[arg(long)]
    pub dets: PathBuf,
    /// IOU threshold for counting a detection as a true positive.
    #[arg(long, default_value_t = 0.5)]
    pub match_iou: f64,
    /// Also write per-class AP rows as CSV; a manifest is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct BenchArgs {
    /// Tracker to measure.
    #[arg(long, value_enum)]
    pub tracker: TrackerKind,
    /// Detection file driving the measurement.
    #[arg(long)]
    pub dets: PathBuf,
    /// Tracker config file; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// How many times to repeat the measurement.
    #[arg(long, default_value_t = 1)]
    pub repeats: u32,
    /// Also write the report to a file; a manifest is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Track(a) => run::cmd_track(a),
        Command::Eval(a) => run::cmd_eval(a),
        Command::Simulate(a) => run::cmd_simulate(a),
        Command::DetectEval(a) => run::cmd_detect_eval(a),
        Command::Bench(a) => run::cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
