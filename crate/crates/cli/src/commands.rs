//! Subcommand pipelines. Each subcommand is a pure function over loaded data
//! plus a thin file-handling wrapper.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use desmap::affinity::{default_perplexity, joint_affinities_with, AffinityConfig, AffinityMode};
use desmap::baselines::{isomap_with, pca_project, DisconnectedPolicy, IsomapConfig, DEFAULT_ISOMAP_K};
use desmap::dataset::{format_real, load_candidates, pairwise_sq_distances, save_candidates, standardize_matrix, ScaleMode};
use desmap::kv::KeyValues;
use desmap::metrics::{kmeans, quality_report, representative_indices, ReportConfig, DEFAULT_RESTARTS};
use desmap::moo::{constraint_filter, nsga2_generate, ConstraintThresholds, SurrogateProblem, DEFAULT_MAX_RIPPLE, DEFAULT_MIN_EFFICIENCY};
use desmap::tsne::{run_tsne, EarlyExaggeration, TsneConfig};
use desmap::{CandidateSet64, Error, QualityReport64};

use crate::args::{Cli, Command, EmbedArgs, GenerateArgs, MetricsArgs, PickArgs, PlotArgs};
use crate::config::Resolver;
use crate::error::CliError;
use crate::io::{self, Embedding};
use crate::svg::{self, Coloring, PlotOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateSettings {
    pub pop_size: usize,
    pub generations: usize,
    pub seed: u64,
    pub single_op: Option<String>,
    pub min_efficiency: f64,
    pub max_ripple: f64,
}

impl Default for GenerateSettings {
    fn default() -> Self {
        Self {
            pop_size: 20,
            generations: 50,
            seed: 0,
            single_op: None,
            min_efficiency: DEFAULT_MIN_EFFICIENCY,
            max_ripple: DEFAULT_MAX_RIPPLE,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenerateOutcome {
    pub set: CandidateSet64,
    pub feasible: usize,
    pub ratio: f64,
}

pub fn generate(s: &GenerateSettings) -> Result<GenerateOutcome, CliError> {
    let mut problem = match &s.single_op {
        Some(label) => SurrogateProblem::single_point(label)?,
        None => SurrogateProblem::three_point(),
    };
    problem.thresholds = ConstraintThresholds {
        operating_point: problem.thresholds.operating_point.clone(),
        min_efficiency: s.min_efficiency,
        max_ripple: s.max_ripple,
    };
    let set = nsga2_generate(&problem, s.pop_size, s.generations, s.seed)?;
    let (kept, ratio) = constraint_filter(&set, &problem.thresholds)?;
    Ok(GenerateOutcome {
        feasible: kept.len(),
        set,
        ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Tsne,
    Pca,
    Isomap,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "tsne" | "t-sne" => Ok(Self::Tsne),
            "pca" => Ok(Self::Pca),
            "isomap" => Ok(Self::Isomap),
            other => Err(format!("unknown method `{other}` (tsne|pca|isomap)")),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Tsne => "tsne",
            Self::Pca => "pca",
            Self::Isomap => "isomap",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbedSettings {
    pub method: Method,
    pub dim: usize,
    /// `None` picks a size-dependent default.
    pub perplexity: Option<f64>,
    pub iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub k: usize,
    pub scale: ScaleMode,
    pub connect: DisconnectedPolicy,
    pub affinity: AffinityMode,
    pub exaggeration: bool,
    pub feasible_only: bool,
}

impl Default for EmbedSettings {
    fn default() -> Self {
        Self {
            method: Method::Tsne,
            dim: 2,
            perplexity: None,
            iterations: 1000,
            learning_rate: 100.0,
            seed: 0,
            k: DEFAULT_ISOMAP_K,
            scale: ScaleMode::ZScore,
            connect: DisconnectedPolicy::LargestComponent,
            affinity: AffinityMode::Conditional,
            exaggeration: false,
            feasible_only: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmbedOutcome {
    pub embedding: Embedding,
    /// `(iteration, KL)` for t-SNE.
    pub trace: Option<Vec<(usize, f64)>>,
    pub params: KeyValues,
    /// Ids left out by Isomap's largest-component policy.
    pub dropped: Vec<String>,
}

pub fn embed(set: &CandidateSet64, s: &EmbedSettings) -> Result<EmbedOutcome, CliError> {
    let set = if s.feasible_only { set.feasible_only() } else { set.clone() };
    if set.len() < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 candidates, got {}", set.len())).into());
    }
    let x = standardize_matrix(set.objectives(), s.scale, &set.schema().objective_columns)?;
    let n = set.len();
    let mut params = KeyValues::new();
    params.push("method", s.method);
    params.push("n", n);
    params.push("dim", s.dim);
    params.push("scale", s.scale);
    params.push("seed", s.seed);
    params.push("feasible_only", s.feasible_only);
    let mut trace = None;
    let mut dropped = Vec::new();
    let (ids, coords) = match s.method {
        Method::Tsne => {
            let perplexity = s.perplexity.unwrap_or_else(|| default_perplexity(n));
            let dist = pairwise_sq_distances(&x);
            let p = joint_affinities_with(&dist, &AffinityConfig::new(perplexity).with_mode(s.affinity))?;
            let cfg = TsneConfig {
                perplexity,
                out_dim: s.dim,
                iterations: s.iterations,
                learning_rate: s.learning_rate,
                seed: s.seed,
                early_exaggeration: s.exaggeration.then(EarlyExaggeration::default),
                ..TsneConfig::default()
            };
            let state = run_tsne(&p, &cfg)?;
            params.push("perplexity", format_real(perplexity));
            params.push("iterations", s.iterations);
            params.push("learning_rate", format_real(s.learning_rate));
            params.push("affinity", s.affinity);
            params.push("exaggeration", s.exaggeration);
            if let Some(&(_, kl)) = state.cost_trace.last() {
                params.push("final_kl", format_real(kl));
            }
            trace = Some(state.cost_trace.clone());
            (set.ids().to_vec(), state.y)
        }
        Method::Pca => {
            let pca = pca_project(&x, s.dim)?;
            let ratios: Vec<String> = pca.explained_variance_ratio.iter().map(|&r| format_real(r)).collect();
            params.push("explained_variance_ratio", ratios.join(","));
            (set.ids().to_vec(), pca.projection)
        }
        Method::Isomap => {
            let cfg = IsomapConfig {
                k: s.k,
                out_dim: s.dim,
                policy: s.connect,
            };
            let iso = isomap_with(&x, &cfg)?;
            params.push("k", s.k);
            params.push("connect", s.connect);
            dropped = iso.unembedded.iter().map(|&i| set.ids()[i].clone()).collect();
            params.push("unembedded", dropped.join(","));
            (iso.embedded.iter().map(|&i| set.ids()[i].clone()).collect(), iso.embedding)
        }
    };
    Ok(EmbedOutcome {
        embedding: Embedding { ids, coords },
        trace,
        params,
        dropped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSettings {
    pub neighbors: usize,
    pub clusters: usize,
    pub seed: u64,
    pub scale: ScaleMode,
}

impl Default for MetricsSettings {
    fn default() -> Self {
        Self {
            neighbors: 12,
            clusters: 3,
            seed: 0,
            scale: ScaleMode::ZScore,
        }
    }
}

/// Candidate rows in embedding order; every embedded id must exist in `set`.
fn align(set: &CandidateSet64, emb: &Embedding) -> Result<CandidateSet64, CliError> {
    let index: HashMap<&str, usize> = set.ids().iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let rows = emb
        .ids
        .iter()
        .map(|id| {
            index
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::IdMismatch(format!("embedded id `{id}` not among the candidates")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(set.subset(&rows))
}

pub fn score(set: &CandidateSet64, emb: &Embedding, method: &str, s: &MetricsSettings) -> Result<QualityReport64, CliError> {
    let matched = align(set, emb)?;
    let x = standardize_matrix(matched.objectives(), s.scale, &matched.schema().objective_columns)?;
    let cfg = ReportConfig {
        neighbors: s.neighbors,
        clusters: s.clusters,
        seed: s.seed,
        ..ReportConfig::default()
    };
    Ok(quality_report(method, &emb.ids, &x, &emb.coords, &cfg)?)
}

/// `embedding,method,n,trustworthiness,knn_preservation,silhouette` rows.
pub fn comparison_table(rows: &[(String, QualityReport64)]) -> String {
    let mut out = String::from("embedding,method,n,trustworthiness,knn_preservation,silhouette\n");
    for (name, r) in rows {
        out.push_str(&format!(
            "{name},{},{},{:.6},{:.6},{}\n",
            r.method,
            r.ids.len(),
            r.trustworthiness,
            r.knn_preservation,
            r.silhouette.map_or_else(|| "n/a".to_string(), |s| format!("{s:.6}"))
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Picked {
    /// Candidate row indices, one per cluster in cluster order.
    pub rows: Vec<usize>,
    pub labels: Vec<usize>,
}

pub fn pick(set: &CandidateSet64, emb: &Embedding, clusters: usize, seed: u64) -> Result<Picked, CliError> {
    let matched = align(set, emb)?;
    let km = kmeans(&emb.coords, clusters, seed, DEFAULT_RESTARTS)?;
    let reps = representative_indices(&emb.coords, &km.labels, &km.centroids);
    let rows = reps
        .iter()
        .map(|&i| set.index_of(&matched.ids()[i]).expect("aligned id"))
        .collect();
    Ok(Picked { rows, labels: km.labels })
}

pub fn representatives_csv(set: &CandidateSet64, picked: &Picked) -> String {
    let schema = set.schema();
    let mut out = String::from("cluster,id");
    for c in schema.param_columns.iter().chain(&schema.objective_columns) {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (cluster, &row) in picked.rows.iter().enumerate() {
        out.push_str(&format!("{cluster},{}", set.ids()[row]));
        for &v in set.params().row(row).iter().chain(set.objectives().row(row)) {
            out.push(',');
            out.push_str(&format_real(v));
        }
        out.push('\n');
    }
    out
}

pub fn coloring_for(
    emb: &Embedding,
    color_by: Option<&str>,
    labels: Option<&[(String, usize)]>,
    candidates: Option<&CandidateSet64>,
) -> Result<Coloring, CliError> {
    let Some(key) = color_by else {
        return Ok(Coloring::Uniform);
    };
    if key == "cluster" {
        let labels = labels.ok_or_else(|| CliError::Usage("--color-by cluster needs --labels".into()))?;
        let map: HashMap<&str, usize> = labels.iter().map(|(id, l)| (id.as_str(), *l)).collect();
        let picked = emb
            .ids
            .iter()
            .map(|id| {
                map.get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::IdMismatch(format!("no cluster label for `{id}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        return Ok(Coloring::Clusters(picked));
    }
    let set = candidates.ok_or_else(|| CliError::Usage(format!("--color-by {key} needs --candidates")))?;
    let column = set.column(key).ok_or_else(|| Error::MissingColumn { column: key.to_string() })?;
    let matched = align(set, emb)?;
    let values = matched
        .ids()
        .iter()
        .map(|id| column[set.index_of(id).expect("aligned id")])
        .collect();
    Ok(Coloring::Continuous {
        label: key.to_string(),
        values,
    })
}

fn method_name(path: &Path) -> String {
    io::read_text(&io::params_path(path))
        .ok()
        .and_then(|t| KeyValues::parse(&t).ok())
        .and_then(|kv| kv.get("method").map(str::to_string))
        .unwrap_or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default())
}

fn parse_with<T, E: fmt::Display>(key: &str, v: Option<String>, f: impl Fn(&str) -> Result<T, E>) -> Result<Option<T>, CliError> {
    v.map(|s| f(&s).map_err(|e| CliError::Usage(format!("--{key}: {e}")))).transpose()
}

fn run_generate(a: GenerateArgs) -> Result<String, CliError> {
    let r = Resolver::load(a.common.config.as_deref())?;
    let d = GenerateSettings::default();
    let s = GenerateSettings {
        pop_size: r.value("pop_size", a.pop_size, d.pop_size)?,
        generations: r.value("generations", a.generations, d.generations)?,
        seed: r.seed(a.common.seed)?,
        single_op: r.optional("single_op", a.single_op)?,
        min_efficiency: r.value("min_efficiency", a.min_efficiency, d.min_efficiency)?,
        max_ripple: r.value("max_ripple", a.max_ripple, d.max_ripple)?,
    };
    let output = r.path("output", a.output)?;
    let out = generate(&s)?;
    save_candidates(&out.set, &output)?;
    Ok(format!(
        "candidates = {}\nobjectives = {}\nfeasible = {}\npreservation_ratio = {:.6}\n",
        out.set.len(),
        out.set.objectives().cols(),
        out.feasible,
        out.ratio
    ))
}

fn run_embed(a: EmbedArgs) -> Result<String, CliError> {
    let r = Resolver::load(a.common.config.as_deref())?;
    let d = EmbedSettings::default();
    let s = EmbedSettings {
        method: r.value("method", parse_with("method", a.method, Method::from_str)?, d.method)?,
        dim: r.value("dim", a.dim, d.dim)?,
        perplexity: r.optional("perplexity", a.perplexity)?,
        iterations: r.value("iterations", a.iterations, d.iterations)?,
        learning_rate: r.value("learning_rate", a.learning_rate, d.learning_rate)?,
        seed: r.seed(a.common.seed)?,
        k: r.value("k", a.k, d.k)?,
        scale: r.value("scale", parse_with("scale", a.scale, ScaleMode::from_str)?, d.scale)?,
        connect: r.value("connect", parse_with("connect", a.connect, DisconnectedPolicy::from_str)?, d.connect)?,
        affinity: r.value("affinity", parse_with("affinity", a.affinity, AffinityMode::from_str)?, d.affinity)?,
        exaggeration: r.switch("exaggeration", a.exaggeration)?,
        feasible_only: r.switch("feasible_only", a.feasible_only)?,
    };
    let input = r.path("input", a.input)?;
    let output = r.path("output", a.output)?;
    let set = load_candidates::<f64>(&input, None)?;
    let out = embed(&set, &s)?;
    io::write_embedding(&output, &out.embedding)?;
    let mut params_text = String::from("# embedding run parameters\n");
    params_text.push_str(&out.params.render());
    io::write_text(&io::params_path(&output), &params_text)?;
    if let Some(trace) = &out.trace {
        io::write_trace(&io::trace_path(&output), trace)?;
    }
    let mut msg = format!(
        "method = {}\nrows = {}\ndim = {}\n",
        s.method,
        out.embedding.ids.len(),
        out.embedding.coords.cols()
    );
    if !out.dropped.is_empty() {
        msg.push_str(&format!("unembedded = {}\n", out.dropped.len()));
    }
    Ok(msg)
}

fn run_metrics(a: MetricsArgs) -> Result<String, CliError> {
    let r = Resolver::load(a.common.config.as_deref())?;
    let d = MetricsSettings::default();
    let s = MetricsSettings {
        neighbors: r.value("k", a.k, d.neighbors)?,
        clusters: r.value("clusters", a.clusters, d.clusters)?,
        seed: r.seed(a.common.seed)?,
        scale: r.value("scale", parse_with("scale", a.scale, ScaleMode::from_str)?, d.scale)?,
    };
    let input = r.path("input", a.input)?;
    let output = r.path("output", a.output)?;
    let set = load_candidates::<f64>(&input, None)?;
    if !a.compare.is_empty() {
        let mut rows = Vec::new();
        for path in &a.compare {
            let emb = io::read_embedding(path)?;
            let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            rows.push((name, score(&set, &emb, &method_name(path), &s)?));
        }
        let table = comparison_table(&rows);
        io::write_text(&output, &table)?;
        return Ok(table);
    }
    let path = r.path("embedding", a.embedding)?;
    let emb = io::read_embedding(&path)?;
    let report = score(&set, &emb, &method_name(&path), &s)?;
    report.write(&output, &io::labels_path(&output))?;
    Ok(report.to_kv().render())
}

fn run_plot(a: PlotArgs) -> Result<String, CliError> {
    let r = Resolver::load(a.common.config.as_deref())?;
    let d = PlotOptions::default();
    let opts = PlotOptions {
        width: r.value("width", a.width, d.width)?,
        height: r.value("height", a.height, d.height)?,
        radius: r.value("radius", a.radius, d.radius)?,
    };
    let input = r.path("input", a.input)?;
    let output = r.path("output", a.output)?;
    let color_by: Option<String> = r.optional("color_by", a.color_by)?;
    let emb = io::read_embedding(&input)?;
    if emb.coords.cols() != 2 {
        return Err(CliError::NotTwoDimensional { dim: emb.coords.cols() });
    }
    let labels = r.optional("labels", a.labels)?.map(|p| io::read_labels(&p)).transpose()?;
    let candidates = r
        .optional("candidates", a.candidates)?
        .map(|p| load_candidates::<f64>(&p, None))
        .transpose()?;
    let coloring = coloring_for(&emb, color_by.as_deref(), labels.as_deref(), candidates.as_ref())?;
    io::write_text(&output, &svg::render(&emb, &coloring, &opts)?)?;
    Ok(format!("points = {}\n", emb.ids.len()))
}

fn run_pick(a: PickArgs) -> Result<String, CliError> {
    let r = Resolver::load(a.common.config.as_deref())?;
    let clusters = r.required("clusters", a.clusters)?;
    let seed = r.seed(a.common.seed)?;
    let input = r.path("input", a.input)?;
    let embedding = r.path("embedding", a.embedding)?;
    let output = r.path("output", a.output)?;
    let set = load_candidates::<f64>(&input, None)?;
    let emb = io::read_embedding(&embedding)?;
    let picked = pick(&set, &emb, clusters, seed)?;
    io::write_text(&output, &representatives_csv(&set, &picked))?;
    let ids: Vec<&str> = picked.rows.iter().map(|&i| set.ids()[i].as_str()).collect();
    Ok(format!("representatives = {}\n", ids.join(",")))
}

pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Generate(a) => run_generate(a),
        Command::Embed(a) => run_embed(a),
        Command::Metrics(a) => run_metrics(a),
        Command::Plot(a) => run_plot(a),
        Command::Pick(a) => run_pick(a),
    }
}
