//! Implementations behind the `diarstream` binary: `run`, `score`, `synth`,
//! and `bench`. The binary itself only parses arguments and dispatches here,
//! so everything is callable (and testable) as a library.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::core::{ClusteringMode, Config, ReclusterMode};
use crate::error::Error;
use crate::formats::{
    annotation_from_turns, apply_config_file, parse_rttm, read_embeddings, write_embeddings,
    write_rttm,
};
use crate::pipeline::{turns_from_labels, Baseline3State, PipelineState, StreamOutput};
use crate::scoring::score_der;
use crate::synth::{generate, SynthConfig};

/// Command-line error split by exit code: 1 for usage problems, 2 for bad
/// or unreadable data.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "diarstream",
    version,
    about = "Streaming speaker diarization: label embedding streams online, \
             score RTTM hypotheses, synthesize test streams, and benchmark \
             system variants"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Label an embedding JSONL stream and emit RTTM turns
    Run(RunArgs),
    /// Score a hypothesis RTTM against a reference RTTM
    Score(ScoreArgs),
    /// Generate a synthetic embedding stream with ground-truth RTTM
    Synth(SynthArgs),
    /// Time system variants on the same input stream
    Bench(BenchArgs),
}

/// Pipeline tuning flags shared by `run` and `bench`. Precedence:
/// built-in defaults, then the config file, then explicit flags.
#[derive(Args, Debug, Clone, Default)]
pub struct ConfigArgs {
    /// Flat key=value config file
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Clustering stage: full AHC every step, or checkpointed
    #[arg(long, value_enum)]
    pub clustering: Option<ClusteringMode>,
    /// Re-clustering stage applied before label matching
    #[arg(long, value_enum)]
    pub recluster: Option<ReclusterMode>,
    /// Stopping threshold for (chkpt-)AHC
    #[arg(long)]
    pub ahc_threshold: Option<f64>,
    /// Edge threshold for the speaker embedding graph
    #[arg(long)]
    pub graph_threshold: Option<f64>,
    /// Maximum number of clusters kept in a checkpoint
    #[arg(long)]
    pub checkpoint_k: Option<usize>,
    /// Minimum cluster duration (seconds) to count as a speaker
    #[arg(long)]
    pub duration_threshold: Option<f64>,
    /// Centroid-similarity threshold for naive re-clustering
    #[arg(long)]
    pub naive_threshold: Option<f64>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<Config, CliError> {
        let mut config = Config::default();
        if let Some(path) = &self.config {
            let file = File::open(path)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            apply_config_file(BufReader::new(file), &path.display().to_string(), &mut config)
                .map_err(|e| CliError::Usage(e.to_string()))?;
        }
        if let Some(v) = self.clustering {
            config.clustering_mode = v;
        }
        if let Some(v) = self.recluster {
            config.recluster_mode = v;
        }
        if let Some(v) = self.ahc_threshold {
            config.ahc_stop_threshold = v;
        }
        if let Some(v) = self.graph_threshold {
            config.graph_threshold = v;
        }
        if let Some(v) = self.checkpoint_k {
            config.checkpoint_k = v;
        }
        if let Some(v) = self.duration_threshold {
            config.speaker_duration_threshold = v;
        }
        if let Some(v) = self.naive_threshold {
            config.naive_recluster_threshold = v;
        }
        config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(config)
    }
}

#[derive(Args)]
pub struct RunArgs {
    /// Embedding JSONL input
    pub input: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Write RTTM here instead of standard output
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Use the greedy online baseline instead of the pipeline
    #[arg(long)]
    pub baseline3: bool,
    /// Print `segment_id<TAB>label` to standard output after each step
    #[arg(long)]
    pub emit_per_step: bool,
    /// RTTM file id (defaults to the input file stem)
    #[arg(long)]
    pub file_id: Option<String>,
    /// Dump the speaker embedding graph as `i j weight` lines
    #[arg(long, value_name = "FILE")]
    pub dump_graph: Option<PathBuf>,
}

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let config = args.config.resolve()?;
    let file = File::open(&args.input)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.input.display())))?;
    let segments = read_embeddings(BufReader::new(file), &args.input.display().to_string())?;

    let stdout = io::stdout();
    let mut labels = Vec::with_capacity(segments.len());
    if args.baseline3 {
        let mut state = Baseline3State::new(config.baseline3_threshold);
        for e in &segments {
            let label = state.step(e)?;
            if args.emit_per_step {
                writeln!(stdout.lock(), "{}\t{label}", e.segment_id)?;
            }
            labels.push(label);
        }
        emit_rttm(args, &segments, &labels)?;
    } else {
        let mut state = PipelineState::new(config)?;
        for e in &segments {
            let label = state.step(e.clone())?;
            if args.emit_per_step {
                writeln!(stdout.lock(), "{}\t{label}", e.segment_id)?;
            }
            labels.push(label);
        }
        emit_rttm(args, &segments, &labels)?;
        if let Some(path) = &args.dump_graph {
            let mut w = BufWriter::new(File::create(path)?);
            state.graph().write_edge_list(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn emit_rttm(
    args: &RunArgs,
    segments: &[crate::core::Embedding],
    labels: &[u32],
) -> Result<(), CliError> {
    let annotation = annotation_from_turns(&turns_from_labels(segments, labels));
    let file_id = args
        .file_id
        .clone()
        .or_else(|| file_stem(&args.input))
        .unwrap_or_else(|| "stream".to_string());
    match &args.output {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_rttm(&mut w, &file_id, &annotation)?;
            w.flush()?;
        }
        None => write_rttm(io::stdout().lock(), &file_id, &annotation)?,
    }
    Ok(())
}

fn file_stem(path: &Path) -> Option<String> {
    path.file_stem().map(|s| s.to_string_lossy().into_owned())
}

#[derive(Args)]
pub struct ScoreArgs {
    /// Reference RTTM
    pub reference: PathBuf,
    /// Hypothesis RTTM
    pub hypothesis: PathBuf,
    /// Forgiveness collar in seconds around reference turn boundaries
    #[arg(long, default_value_t = 0.0)]
    pub collar: f64,
    /// Emit the report as JSON instead of text
    #[arg(long)]
    pub json: bool,
}

pub fn cmd_score(args: &ScoreArgs) -> Result<(), CliError> {
    let parse = |path: &PathBuf| -> Result<_, CliError> {
        let file =
            File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        Ok(parse_rttm(BufReader::new(file), &path.display().to_string())?)
    };
    let reference = parse(&args.reference)?;
    let hypothesis = parse(&args.hypothesis)?;
    let report = score_der(&reference, &hypothesis, args.collar)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let mut out = io::stdout().lock();
    if args.json {
        writeln!(out, "{}", serde_json::to_string(&report).expect("report serializes"))?;
    } else {
        writeln!(out, "miss          {:10.3} s", report.miss)?;
        writeln!(out, "false alarm   {:10.3} s", report.false_alarm)?;
        writeln!(out, "confusion     {:10.3} s", report.confusion)?;
        writeln!(out, "scored total  {:10.3} s", report.scored_total)?;
        writeln!(out, "DER           {:10.3} %", report.der * 100.0)?;
    }
    Ok(())
}

#[derive(Args)]
pub struct SynthArgs {
    /// Number of speakers
    #[arg(long, default_value_t = 4)]
    pub speakers: usize,
    /// Number of segments
    #[arg(long, default_value_t = 400)]
    pub segments: usize,
    /// Embedding dimension
    #[arg(long, default_value_t = 128)]
    pub dim: usize,
    /// Expected cosine of an embedding to its speaker centroid
    #[arg(long, default_value_t = 0.95)]
    pub intra_cos: f64,
    /// Pairwise cosine between speaker centroids
    #[arg(long, default_value_t = 0.0)]
    pub inter_cos: f64,
    /// RNG seed; identical seeds give byte-identical outputs
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Where to write the embedding JSONL
    #[arg(long, value_name = "FILE")]
    pub out_embeddings: PathBuf,
    /// Where to write the ground-truth RTTM
    #[arg(long, value_name = "FILE")]
    pub out_rttm: PathBuf,
    /// RTTM file id
    #[arg(long, default_value = "synth")]
    pub file_id: String,
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let cfg = SynthConfig {
        speakers: args.speakers,
        segments: args.segments,
        dim: args.dim,
        intra_cos: args.intra_cos,
        inter_cos: args.inter_cos,
        seed: args.seed,
        ..SynthConfig::default()
    };
    let stream = generate(&cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut w = BufWriter::new(File::create(&args.out_embeddings)?);
    write_embeddings(&mut w, &stream.embeddings)?;
    w.flush()?;
    let mut w = BufWriter::new(File::create(&args.out_rttm)?);
    write_rttm(&mut w, &args.file_id, &stream.reference)?;
    w.flush()?;
    Ok(())
}

#[derive(Args)]
pub struct BenchArgs {
    /// Embedding JSONL input
    pub input: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Comma-separated variants: ahc, chkpt, graph, baseline3
    #[arg(long, default_value = "ahc,chkpt,graph")]
    pub compare: String,
    /// Emit the report as JSON instead of text
    #[arg(long)]
    pub json: bool,
}

#[derive(serde::Serialize)]
struct BenchVariantReport {
    variant: String,
    steps: usize,
    total_secs: f64,
    mean_step_ms: f64,
    first_decile_mean_ms: f64,
    last_decile_mean_ms: f64,
}

fn bench_variant(
    name: &str,
    base: &Config,
    segments: &[crate::core::Embedding],
) -> Result<StreamOutput, CliError> {
    let mut config = base.clone();
    let out = match name {
        "ahc" => {
            config.clustering_mode = ClusteringMode::Ahc;
            config.recluster_mode = ReclusterMode::Naive;
            crate::pipeline::run_stream(segments, &config)?
        }
        "chkpt" => {
            config.clustering_mode = ClusteringMode::Chkpt;
            config.recluster_mode = ReclusterMode::Naive;
            crate::pipeline::run_stream(segments, &config)?
        }
        "graph" => {
            config.clustering_mode = ClusteringMode::Chkpt;
            config.recluster_mode = ReclusterMode::Graph;
            crate::pipeline::run_stream(segments, &config)?
        }
        "baseline3" => crate::pipeline::run_baseline3(segments, &config)?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown bench variant '{other}' (expected ahc, chkpt, graph, or baseline3)"
            )))
        }
    };
    Ok(out)
}

pub fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    let base = args.config.resolve()?;
    let file = File::open(&args.input)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.input.display())))?;
    let segments = read_embeddings(BufReader::new(file), &args.input.display().to_string())?;

    let names: Vec<&str> = args
        .compare
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if names.is_empty() {
        return Err(CliError::Usage("--compare needs at least one variant".into()));
    }

    // variants run one after another so their timings do not interfere
    let mut reports = Vec::new();
    for name in &names {
        let out = bench_variant(name, &base, &segments)?;
        reports.push(BenchVariantReport {
            variant: name.to_string(),
            steps: out.steps.len(),
            total_secs: out.total_secs(),
            mean_step_ms: out.mean_step_secs() * 1e3,
            first_decile_mean_ms: out.first_decile_mean_secs() * 1e3,
            last_decile_mean_ms: out.last_decile_mean_secs() * 1e3,
        });
    }

    let mut out = io::stdout().lock();
    if args.json {
        writeln!(out, "{}", serde_json::to_string(&reports).expect("report serializes"))?;
    } else {
        for r in &reports {
            writeln!(
                out,
                "{:<10} steps {:>6}  total {:>9.3} s  mean {:>8.3} ms  \
                 first-decile {:>8.3} ms  last-decile {:>8.3} ms",
                r.variant, r.steps, r.total_secs, r.mean_step_ms,
                r.first_decile_mean_ms, r.last_decile_mean_ms
            )?;
        }
        for r in &reports[1..] {
            if r.total_secs > 0.0 {
                writeln!(
                    out,
                    "speedup {} / {}: {:.2}x",
                    reports[0].variant,
                    r.variant,
                    reports[0].total_secs / r.total_secs
                )?;
            }
        }
    }
    Ok(())
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Score(args) => cmd_score(&args),
        Command::Synth(args) => cmd_synth(&args),
        Command::Bench(args) => cmd_bench(&args),
    }
}
