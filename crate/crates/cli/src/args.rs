use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "desmap", version, about = "Map multi-objective design candidates to 2-D and pick representatives")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run NSGA-II on the machine surrogate and write the candidate archive.
    Generate(GenerateArgs),
    /// Embed candidate objective vectors with t-SNE, PCA or Isomap.
    Embed(EmbedArgs),
    /// Score one or more embeddings against the original objectives.
    Metrics(MetricsArgs),
    /// Render a 2-D embedding as SVG.
    Plot(PlotArgs),
    /// Cluster an embedding and write one representative candidate per cluster.
    Pick(PickArgs),
}

#[derive(Debug, Args, Default)]
pub struct Common {
    /// `key = value` file with defaults for any flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Falls back to the config file, then `MP_SEED`, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Default)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Candidate CSV; a `.meta` sidecar is written next to it.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub pop_size: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    /// Optimize at one operating point (A, B or C) instead of all three.
    #[arg(long)]
    pub single_op: Option<String>,
    #[arg(long)]
    pub min_efficiency: Option<f64>,
    #[arg(long)]
    pub max_ripple: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Embedding CSV; `.params` and (t-SNE) `.trace.csv` files go next to it.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// tsne, pca or isomap.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(short = 'd', long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub perplexity: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Isomap neighbor count.
    #[arg(long)]
    pub k: Option<usize>,
    /// zscore, minmax or none.
    #[arg(long)]
    pub scale: Option<String>,
    /// Isomap disconnected-graph policy: strict, largest or mst.
    #[arg(long)]
    pub connect: Option<String>,
    /// Conditional (per-point bandwidth) or shared affinities.
    #[arg(long)]
    pub affinity: Option<String>,
    /// Early exaggeration (factor 4 for 100 iterations).
    #[arg(long)]
    pub exaggeration: bool,
    /// Embed only rows flagged feasible.
    #[arg(long)]
    pub feasible_only: bool,
}

#[derive(Debug, Args, Default)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Candidate CSV holding the original objectives.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    /// Comma-separated embedding CSVs scored side by side.
    #[arg(long, value_delimiter = ',')]
    pub compare: Vec<PathBuf>,
    /// Report file (single embedding) or comparison table CSV.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Neighborhood size for trustworthiness and kNN preservation.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub scale: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct PlotArgs {
    #[command(flatten)]
    pub common: Common,
    /// 2-D embedding CSV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// `cluster` (needs --labels) or an objective column (needs --candidates).
    #[arg(long)]
    pub color_by: Option<String>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub candidates: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct PickArgs {
    #[command(flatten)]
    pub common: Common,
    /// Candidate CSV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub clusters: Option<usize>,
}
