use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bilts::recognition::{Measure, ProgressKind};

#[derive(Debug, Parser)]
#[command(name = "bilts", about = "Bi-invariant trajectory-shape descriptors and similarity")]
pub struct Cli {
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Increase log verbosity.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic benchmark dataset.
    SynGen(SynGenArgs),
    /// Resample a trajectory uniformly in a geometric progress variable.
    Reparam(ReparamArgs),
    /// Write the descriptor sequence of a trajectory.
    Descriptors(DescriptorArgs),
    /// Distance between two trajectories.
    Compare(CompareArgs),
    /// Nearest-neighbour recognition on a dataset directory.
    Recognize(RecognizeArgs),
    /// Shape-change signal and breakpoints of a trajectory.
    Segment(SegmentArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ProgressArg {
    Arclength,
    Angle,
    #[value(alias = "screw_path", alias = "screw-path")]
    Screw,
}

impl From<ProgressArg> for ProgressKind {
    fn from(p: ProgressArg) -> Self {
        match p {
            ProgressArg::Arclength => ProgressKind::Arclength,
            ProgressArg::Angle => ProgressKind::Angle,
            ProgressArg::Screw => ProgressKind::ScrewPath,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MeasureArg {
    Bilts,
    #[value(name = "bilts+", alias = "bilts-plus")]
    BiltsPlus,
    Isa,
}

impl From<MeasureArg> for Measure {
    fn from(m: MeasureArg) -> Self {
        match m {
            MeasureArg::Bilts => Measure::Bilts,
            MeasureArg::BiltsPlus => Measure::BiltsPlus,
            MeasureArg::Isa => Measure::Isa,
        }
    }
}

/// Parses a number with an optional `deg` suffix converted to radians.
pub fn quantity(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let (num, deg) = match t.strip_suffix("deg") {
        Some(n) => (n.trim(), true),
        None => (t, false),
    };
    let v: f64 = num.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if !v.is_finite() {
        return Err(format!("not finite: {s:?}"));
    }
    Ok(if deg { v.to_radians() } else { v })
}

#[derive(Debug, Args)]
pub struct SynGenArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// JSON file with generator settings; omitted fields use defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Clone)]
pub struct PreprocessArgs {
    #[arg(long, value_enum, default_value = "screw")]
    pub progress: ProgressArg,
    /// Samples after resampling.
    #[arg(long, default_value_t = bilts::reparam::DEFAULT_N_OUT)]
    pub n_out: usize,
    /// Smoothing width in samples; 0 disables smoothing.
    #[arg(long, default_value_t = bilts::reparam::DEFAULT_SIGMA)]
    pub sigma: f64,
}

#[derive(Debug, Args)]
pub struct ReparamArgs {
    pub file: PathBuf,
    #[command(flatten)]
    pub pre: PreprocessArgs,
    /// Length scale of the screw-path progress.
    #[arg(long = "L", value_parser = quantity, default_value = "0.5")]
    pub l: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DescriptorArgs {
    pub file: PathBuf,
    #[command(flatten)]
    pub pre: PreprocessArgs,
    #[arg(long = "L", value_parser = quantity)]
    pub l: f64,
    #[arg(long, value_parser = quantity)]
    pub xi: f64,
    /// Regularized frames.
    #[arg(long)]
    pub plus: bool,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    #[command(flatten)]
    pub pre: PreprocessArgs,
    #[arg(long = "L", value_parser = quantity)]
    pub l: f64,
    #[arg(long, value_parser = quantity)]
    pub xi: f64,
    /// Regularized frames with rotational alignment.
    #[arg(long)]
    pub plus: bool,
    /// Sakoe-Chiba band half-width.
    #[arg(long)]
    pub band: Option<usize>,
    /// CSV of the alignment path with per-pair distances.
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RecognizeArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub reference_context: String,
    #[arg(long, value_enum)]
    pub measure: MeasureArg,
    #[arg(long, value_enum, default_value = "screw")]
    pub progress: ProgressArg,
    /// Select parameters by grid search on the training split.
    #[arg(long)]
    pub tune: bool,
    #[arg(long = "L", value_parser = quantity)]
    pub l: Option<f64>,
    #[arg(long, value_parser = quantity)]
    pub xi: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = bilts::reparam::DEFAULT_N_OUT)]
    pub n_out: usize,
    #[arg(long, default_value_t = bilts::reparam::DEFAULT_SIGMA)]
    pub sigma: f64,
    #[arg(long)]
    pub band: Option<usize>,
    /// Directory receiving report.json and confusion.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    pub file: PathBuf,
    #[command(flatten)]
    pub pre: PreprocessArgs,
    #[arg(long = "L", value_parser = quantity)]
    pub l: f64,
    #[arg(long, value_parser = quantity)]
    pub xi: f64,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Minimum breakpoint separation in samples; defaults to the descriptor
    /// half-width.
    #[arg(long)]
    pub min_gap: Option<usize>,
    /// Unregularized frames without alignment.
    #[arg(long)]
    pub plain: bool,
    /// Signal CSV with columns `s,d`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
