use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "seminpaint", version, about = "Inpainting of semantic label maps")]
pub struct Cli {
    /// JSON file of flag values for the subcommand; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Only log errors.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a paired synthetic dataset.
    Synth(SynthArgs),
    /// Fill the masked pixels of one label map or of a whole manifest.
    Inpaint(InpaintArgs),
    /// Train the learned engine on a manifest.
    Train(TrainArgs),
    /// Score predictions against a manifest and write the report.
    Eval(EvalArgs),
    /// Combine several accuracy tables into one.
    Report(ReportArgs),
    /// List taxonomies or export one as JSON.
    Taxonomy(TaxonomyArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    /// Minimum dynamic pixel fraction of a kept sample (exclusive).
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Largest simulated misalignment in pixels; 0 disables drift.
    #[arg(long)]
    pub drift_max: Option<u32>,
    #[arg(long)]
    pub drift_prob: Option<f64>,
    #[arg(long, default_value = "carla9")]
    pub taxonomy: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Nn,
    Ns,
    Pm,
    Learned,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Nn => "nn",
            Method::Ns => "ns",
            Method::Pm => "pm",
            Method::Learned => "learned",
        }
    }
}

#[derive(Debug, Args)]
pub struct InpaintArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    /// Label map to fill.
    #[arg(
        long = "in",
        value_name = "PNG",
        conflicts_with = "manifest",
        required_unless_present = "manifest"
    )]
    pub input: Option<PathBuf>,
    /// Mask PNG; without it the dynamic pixels of the input are masked.
    #[arg(long, value_name = "PNG", conflicts_with = "manifest")]
    pub mask: Option<PathBuf>,
    /// Output PNG for a single map, or output directory with --manifest.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Fill the dynamic frame of every manifest sample into `<out>/<id>.png`.
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    #[arg(long, default_value = "carla9")]
    pub taxonomy: String,
    /// Map raw source ids through the taxonomy remap before inpainting.
    #[arg(long)]
    pub remap: bool,
    /// Grow an extracted mask by this many 3x3 dilations.
    #[arg(long, default_value_t = 0)]
    pub dilation: usize,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub transport: Option<f64>,
    #[arg(long)]
    pub patch_size: Option<usize>,
    #[arg(long)]
    pub nnf_iters: Option<usize>,
    #[arg(long)]
    pub vote_iters: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Checkpoint for the learned engine.
    #[arg(long, value_name = "FILE", required_if_eq("method", "learned"))]
    pub ckpt: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
    /// Checkpoint path; the sidecar and loss curve are written next to it.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[arg(long, default_value = "carla9")]
    pub taxonomy: String,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub adv_weight: Option<f64>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub disc_width: Option<usize>,
    #[arg(long)]
    pub crop_width: Option<usize>,
    #[arg(long)]
    pub crop_height: Option<usize>,
    #[arg(long)]
    pub rect_min: Option<usize>,
    #[arg(long)]
    pub rect_max: Option<usize>,
    /// Continue from an existing checkpoint at --out.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
    /// Directory holding `<id>.png` predictions.
    #[arg(long, value_name = "DIR")]
    pub pred_dir: PathBuf,
    #[arg(long)]
    pub method: String,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, default_value = "carla9")]
    pub taxonomy: String,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// An `accuracy.csv` written by `eval` (repeatable).
    #[arg(long = "result", value_name = "CSV", required = true)]
    pub results: Vec<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TaxonomyArgs {
    /// Built-in name, name in $SEMINPAINT_TAXONOMY_DIR, or file path.
    pub name: Option<String>,
    /// Write the taxonomy as JSON here.
    #[arg(long, value_name = "FILE", requires = "name")]
    pub out: Option<PathBuf>,
}
