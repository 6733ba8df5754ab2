//! Command-line front end. Every subcommand reads and writes plain files so
//! stages compose in shell pipelines.
//!
//! Exit codes: 0 success, 2 usage or configuration error (including missing
//! or unreadable inputs), 3 runtime failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::codec::{graph_descriptors, DEFAULT_BINS};
use crate::complete::{
    complete, CompletionConfig, HeuristicProposer, NodeProposer, OracleProposer,
};
use crate::connect::{self, ConnectConfig, ConnectNet, PairMode, TrainConfig};
use crate::error::Error;
use crate::geometry::Point;
use crate::io::{
    load_descriptors, load_graph, save_descriptors, save_graph, DescriptorFile, GraphFormat,
};
use crate::labels::{generate_labels, ConnectionLabelSet};
use crate::metrics::{evaluate, format_table, AplsMode, MetricConfig, MetricReport};
use crate::raster::Image;
use crate::synth::{fragment, generate_scene, SceneSpec};
use crate::tiling::{extract_tiled, ExtractConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    CityScale,
    Spacenet3,
}

impl Preset {
    /// Decoder query count used for each dataset.
    pub fn queries(self) -> usize {
        match self {
            Preset::CityScale => 500,
            Preset::Spacenet3 => 300,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AplsModeArg {
    Harmonic,
    PaperVerbatim,
}

impl From<AplsModeArg> for AplsMode {
    fn from(m: AplsModeArg) -> Self {
        match m {
            AplsModeArg::Harmonic => AplsMode::Harmonic,
            AplsModeArg::PaperVerbatim => AplsMode::PaperVerbatim,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PairModeArg {
    Concat,
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProposerArg {
    Oracle,
    Heuristic,
}

#[derive(Debug, Parser)]
#[command(
    name = "roadnet",
    version,
    about = "Road network graph extraction toolkit"
)]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Dataset preset recorded alongside outputs.
    #[arg(long, global = true, value_enum)]
    pub preset: Option<Preset>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene: gt.json, fragmented.json, image.png.
    Synth(SynthArgs),
    /// Write node descriptors of a graph.
    Nodes(NodesArgs),
    /// Generate connection labels for node descriptors against a ground truth.
    Labels(LabelsArgs),
    /// Train the connect network.
    TrainConnect(TrainArgs),
    /// Predict a road graph from node descriptors, tile by tile.
    Extract(ExtractArgs),
    /// Bridge gaps in a graph by walking from its endpoints.
    Complete(CompleteArgs),
    /// Compare a prediction against a ground truth.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, clap::Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 512)]
    pub width: usize,
    #[arg(long, default_value_t = 512)]
    pub height: usize,
    #[arg(long, default_value_t = 64.0)]
    pub pitch: f64,
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    #[arg(long, default_value_t = 0.0)]
    pub drop_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    pub curve: f64,
    /// Number of gaps cut into the fragmented graph.
    #[arg(long, default_value_t = 7)]
    pub breaks: usize,
    #[arg(long, default_value_t = 40.0)]
    pub gap: f64,
    #[arg(long, default_value_t = 0)]
    pub noise_channels: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct NodesArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Split edges longer than this before encoding.
    #[arg(long)]
    pub densify: Option<f64>,
    /// Gaussian coordinate noise in pixels.
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct LabelsArgs {
    #[arg(long)]
    pub nodes: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long, default_value_t = crate::labels::DEFAULT_RANGE_R)]
    pub range_r: f64,
    #[arg(long, default_value_t = crate::labels::DEFAULT_N_PT)]
    pub n_pt: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub nodes: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = connect::DEFAULT_LR)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.0)]
    pub momentum: f64,
    #[arg(long, value_enum, default_value_t = PairModeArg::Concat)]
    pub pair_mode: PairModeArg,
    #[arg(long, default_value_t = crate::labels::DEFAULT_RANGE_R)]
    pub range_r: f64,
    #[arg(long, default_value_t = crate::labels::DEFAULT_N_PT)]
    pub n_pt: usize,
    #[arg(long, default_value_t = connect::DEFAULT_THRESHOLD)]
    pub connect_threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Loss curve JSON; defaults to the weights path with `.curve.json`.
    #[arg(long)]
    pub curve: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub nodes: PathBuf,
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long, default_value_t = crate::tiling::DEFAULT_TILE)]
    pub tile: usize,
    #[arg(long, default_value_t = crate::tiling::DEFAULT_OVERLAP)]
    pub overlap: usize,
    #[arg(long, default_value_t = connect::DEFAULT_THRESHOLD)]
    pub connect_threshold: f64,
    #[arg(long, default_value_t = crate::labels::DEFAULT_RANGE_R)]
    pub range_r: f64,
    #[arg(long, default_value_t = crate::labels::DEFAULT_N_PT)]
    pub n_pt: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct CompleteArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long, value_enum, default_value_t = ProposerArg::Oracle)]
    pub proposer: ProposerArg,
    /// Ground truth walked by the oracle proposer.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(long, default_value_t = 10.0)]
    pub stride: f64,
    /// Oracle proposal noise in pixels.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = crate::complete::DEFAULT_MAX_STEPS)]
    pub max_steps: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Completion trace as JSON lines.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub gt: PathBuf,
    /// One or more predictions; each becomes a table row.
    #[arg(long, required = true, num_args = 1..)]
    pub pred: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = AplsModeArg::Harmonic)]
    pub apls_mode: AplsModeArg,
    /// Report JSON (one object per prediction, in order).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Settings echoed next to metric reports.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineConfig {
    pub seed: u64,
    pub preset: Option<Preset>,
    pub queries: Option<usize>,
}

#[derive(Debug, Serialize)]
struct EvaluationOutput<'a> {
    name: String,
    #[serde(flatten)]
    report: &'a MetricReport,
    pipeline: &'a PipelineConfig,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Parse { .. } => CliError::Usage(e.to_string()),
            Error::Io { ref source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn load_graph_auto(path: &Path) -> CliResult<crate::graph::RoadGraph> {
    Ok(load_graph(path, GraphFormat::from_path(path))?)
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Runtime(Error::io(path, e).to_string()))
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let (CliError::Usage(msg) | CliError::Runtime(msg)) = &e;
            eprintln!("error: {msg}");
            e.code()
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    let pipeline = PipelineConfig {
        seed: cli.seed,
        preset: cli.preset,
        queries: cli.preset.map(Preset::queries),
    };
    log::info!("pipeline settings: {pipeline:?}");
    match &cli.command {
        Command::Synth(a) => cmd_synth(a, cli.seed),
        Command::Nodes(a) => cmd_nodes(a, cli.seed),
        Command::Labels(a) => cmd_labels(a),
        Command::TrainConnect(a) => cmd_train(a, cli.seed),
        Command::Extract(a) => cmd_extract(a),
        Command::Complete(a) => cmd_complete(a, cli.seed),
        Command::Evaluate(a) => cmd_evaluate(a, &pipeline),
    }
}

fn cmd_synth(a: &SynthArgs, seed: u64) -> CliResult<()> {
    let spec = SceneSpec {
        width: a.width,
        height: a.height,
        pitch: a.pitch,
        jitter_sigma: a.jitter,
        drop_rate: a.drop_rate,
        curve_amplitude: a.curve,
        noise_channels: a.noise_channels,
        seed,
        ..SceneSpec::default()
    };
    let scene = generate_scene(&spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let frag = fragment(&scene.gt, a.breaks, a.gap, &mut rng)
        .map_err(|e| usage(format!("cannot fragment scene: {e}")))?;
    fs::create_dir_all(&a.out_dir).map_err(|e| usage(Error::io(&a.out_dir, e).to_string()))?;
    save_graph(&scene.gt, a.out_dir.join("gt.json"), GraphFormat::EdgeList)?;
    save_graph(
        &frag.residual,
        a.out_dir.join("fragmented.json"),
        GraphFormat::EdgeList,
    )?;
    scene.image.save_png(a.out_dir.join("image.png"))?;
    println!(
        "scene {}x{}: {} nodes, {} edges, {} gaps",
        a.width,
        a.height,
        scene.gt.node_count(),
        scene.gt.edge_count(),
        frag.gaps.len()
    );
    Ok(())
}

fn cmd_nodes(a: &NodesArgs, seed: u64) -> CliResult<()> {
    if a.bins == 0 {
        return Err(usage("--bins must be positive"));
    }
    let g = load_graph_auto(&a.graph)?;
    let g = match a.densify {
        Some(step) if step > 0.0 => g.densify(step),
        Some(step) => return Err(usage(format!("--densify {step} must be positive"))),
        None => g,
    };
    let mut nodes: Vec<_> = graph_descriptors(&g, a.bins)
        .into_iter()
        .map(|(_, d)| d)
        .collect();
    if a.jitter > 0.0 {
        let noise = Normal::new(0.0, a.jitter).map_err(|e| usage(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ext = g.extent();
        for d in &mut nodes {
            d.coord = Point::new(
                (d.coord.x + noise.sample(&mut rng)).clamp(0.0, ext.width),
                (d.coord.y + noise.sample(&mut rng)).clamp(0.0, ext.height),
            );
        }
    }
    save_descriptors(&DescriptorFile::new(g.extent(), &nodes), &a.out)?;
    println!("{} node descriptors", nodes.len());
    Ok(())
}

fn cmd_labels(a: &LabelsArgs) -> CliResult<()> {
    let file = load_descriptors(&a.nodes)?;
    let gt = load_graph_auto(&a.gt)?;
    let pts: Vec<Point> = file.nodes.iter().map(|r| Point::new(r.x, r.y)).collect();
    let labels = generate_labels(&pts, &gt, a.range_r, a.n_pt)?;
    write_text(&a.out, &labels.to_jsonl())?;
    println!(
        "{} valid nodes, {} labeled pairs, {} connections",
        labels.valid_nodes.len(),
        labels.pairs.len(),
        labels.positives().count()
    );
    Ok(())
}

fn cmd_train(a: &TrainArgs, seed: u64) -> CliResult<()> {
    let file = load_descriptors(&a.nodes)?;
    let text =
        fs::read_to_string(&a.labels).map_err(|e| CliError::from(Error::io(&a.labels, e)))?;
    let pairs = ConnectionLabelSet::pairs_from_jsonl(&text)?;
    let nodes = file.descriptors();
    let n_bins = nodes.first().map_or(DEFAULT_BINS, |d| d.bins.len());
    let mode = match a.pair_mode {
        PairModeArg::Concat => PairMode::Concat,
        PairModeArg::Sum => PairMode::Sum,
    };
    let config = ConnectConfig {
        pair_mode: mode,
        node_dim: n_bins + 2,
        ..ConnectConfig::default()
    };
    let data = connect::build_dataset(&nodes, &pairs, a.range_r, a.n_pt, mode)?;
    if data.is_empty() {
        return Err(usage("no labeled pairs within range"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = ConnectNet::new(config, &mut rng)?;
    let cfg = TrainConfig {
        epochs: a.epochs,
        lr: a.lr,
        momentum: a.momentum,
        seed,
    };
    let (net, report) = connect::train(&net, &data, &cfg)?;
    connect::save_weights(&net, &a.out)?;
    let curve_path = a
        .curve
        .clone()
        .unwrap_or_else(|| a.out.with_extension("curve.json"));
    write_text(
        &curve_path,
        &serde_json::to_string(&report).expect("report serializes"),
    )?;
    let acc = connect::accuracy(&net, &data, a.connect_threshold)?;
    println!(
        "trained {} epochs on {} centers: loss {:.6} -> {:.6}",
        a.epochs,
        data.len(),
        report.loss_curve[0],
        report.final_loss()
    );
    println!("final accuracy: {acc:.4}");
    Ok(())
}

fn cmd_extract(a: &ExtractArgs) -> CliResult<()> {
    if a.overlap >= a.tile {
        return Err(usage(format!(
            "--overlap {} must be smaller than --tile {}",
            a.overlap, a.tile
        )));
    }
    if !(a.connect_threshold > 0.0 && a.connect_threshold < 1.0) {
        return Err(usage("--connect-threshold must lie in (0, 1)"));
    }
    let file = load_descriptors(&a.nodes)?;
    let net = connect::load_weights(&a.weights).map_err(|e| match e {
        Error::Io { .. } => CliError::from(e),
        other => CliError::Runtime(format!("weights: {other}")),
    })?;
    let nodes = file.descriptors();
    if let Some(first) = nodes.first() {
        if first.bins.len() + 2 != net.config.node_dim {
            return Err(CliError::Runtime(format!(
                "weights expect {} direction bins, descriptors have {}",
                net.config.node_dim - 2,
                first.bins.len()
            )));
        }
    }
    let cfg = ExtractConfig {
        tile: a.tile,
        overlap: a.overlap,
        range_r: a.range_r,
        n_pt: a.n_pt,
        threshold: a.connect_threshold,
    };
    let g = extract_tiled(&net, &nodes, file.extent(), &cfg)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    save_graph(&g, &a.out, GraphFormat::EdgeList)?;
    println!(
        "predicted {} nodes, {} edges",
        g.node_count(),
        g.edge_count()
    );
    Ok(())
}

fn cmd_complete(a: &CompleteArgs, seed: u64) -> CliResult<()> {
    if a.max_steps == 0 {
        return Err(usage("--max-steps must be at least 1"));
    }
    let g = load_graph_auto(&a.graph)?;
    let image = Image::load(&a.image).map_err(|e| match e {
        Error::Image(_) => usage(format!("cannot read image {}: {e}", a.image.display())),
        other => CliError::from(other),
    })?;
    let mut proposer: Box<dyn NodeProposer> = match a.proposer {
        ProposerArg::Oracle => {
            let gt_path =
                a.gt.as_ref()
                    .ok_or_else(|| usage("--proposer oracle needs --gt"))?;
            if !(a.stride > 0.0 && a.stride < 64.0) {
                return Err(usage("--stride must lie in (0, 64)"));
            }
            Box::new(OracleProposer::new(
                load_graph_auto(gt_path)?,
                a.sigma,
                a.stride,
                seed,
            ))
        }
        ProposerArg::Heuristic => Box::new(HeuristicProposer {
            stride: a.stride,
            ..HeuristicProposer::default()
        }),
    };
    let cfg = CompletionConfig {
        max_steps: a.max_steps,
        ..CompletionConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = complete(&g, &image, proposer.as_mut(), &cfg, &mut rng)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    save_graph(&out.graph, &a.out, GraphFormat::EdgeList)?;
    if let Some(path) = &a.trace {
        write_text(path, &out.trace_jsonl())?;
    }
    println!(
        "completed: {} -> {} edges, {} proposer calls",
        g.edge_count(),
        out.graph.edge_count(),
        out.invocations
    );
    Ok(())
}

fn cmd_evaluate(a: &EvaluateArgs, pipeline: &PipelineConfig) -> CliResult<()> {
    let gt = load_graph_auto(&a.gt)?;
    let mut cfg = MetricConfig::default();
    cfg.apls.mode = a.apls_mode.into();
    cfg.apls.seed = pipeline.seed;
    let mut reports = Vec::new();
    for path in &a.pred {
        let pred = load_graph_auto(path)?;
        let report = evaluate(&gt, &pred, &cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        reports.push((name, report));
    }
    let rows: Vec<(&str, &MetricReport)> = reports.iter().map(|(n, r)| (n.as_str(), r)).collect();
    print!("{}", format_table(&rows));
    if let Some(out) = &a.out {
        let docs: Vec<EvaluationOutput> = reports
            .iter()
            .map(|(name, report)| EvaluationOutput {
                name: name.clone(),
                report,
                pipeline,
            })
            .collect();
        write_text(
            out,
            &serde_json::to_string_pretty(&docs).expect("report serializes"),
        )?;
    }
    Ok(())
}
