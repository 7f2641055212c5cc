//! Command-line front end for the cross-modal retrieval engine.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crossmodal_core::eval::{
    planted_store, run_benchmark, time_retrieval, BenchmarkConfig, Planted, RelevanceJudgments,
};
use crossmodal_core::store::Dtype;
use crossmodal_core::synth::SynthSpec;
use crossmodal_core::{Dims, ReprStore, ScorerConfig};
use crossmodal_server::{AppState, ServerConfig};

#[derive(Debug, Parser)]
#[command(name = "crossmodal", version, about = "Cross-modal image and text retrieval")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP API.
    Serve(ServeArgs),
    /// Retrieval evaluation.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Representation store utilities.
    #[command(subcommand)]
    Store(StoreCommand),
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// TOML configuration; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override the configured bind address.
    #[arg(long)]
    pub bind: Option<SocketAddr>,
    /// Override only the port of the bind address.
    #[arg(long)]
    pub port: Option<u16>,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Recall@k in both directions.
    Recall(RecallArgs),
    /// Single-stream text-to-image latency.
    Latency(LatencyArgs),
    /// Write the relevance judgments implied by the store's description links.
    Judgments(JudgmentsArgs),
}

#[derive(Debug, Args)]
pub struct RecallArgs {
    /// Store manifest.
    #[arg(long)]
    pub store: PathBuf,
    /// Judgments file; derived from description links when omitted.
    #[arg(long)]
    pub judgments: Option<PathBuf>,
    /// Comma-separated cutoffs.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 5, 10])]
    pub k: Vec<usize>,
    /// Weight of the global term.
    #[arg(long, default_value_t = ScorerConfig::default().alpha)]
    pub alpha: f32,
    /// Evaluate only the first N queries of each direction.
    #[arg(long)]
    pub max_queries: Option<usize>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct LatencyArgs {
    #[arg(long)]
    pub store: PathBuf,
    /// Description ids, one per line. Without it the first `--sample` descriptions are used.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub sample: usize,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f32,
    /// Include per-query rows in JSON output.
    #[arg(long)]
    pub rows: bool,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct JudgmentsArgs {
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum StoreCommand {
    /// Write a seeded synthetic store.
    Synth(SynthArgs),
    /// Print dimensions and counts of a store.
    Info(InfoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlantArg {
    Optimum,
    Pessimum,
}

impl From<PlantArg> for Planted {
    fn from(p: PlantArg) -> Self {
        match p {
            PlantArg::Optimum => Planted::Optimum,
            PlantArg::Pessimum => Planted::Pessimum,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub images: usize,
    #[arg(long, default_value_t = 1)]
    pub per_image: usize,
    #[arg(long, default_value_t = 768)]
    pub global: usize,
    #[arg(long, default_value_t = 256)]
    pub local: usize,
    #[arg(long, default_value_t = 200)]
    pub locals: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Store half-precision tensors.
    #[arg(long)]
    pub f16: bool,
    /// Place each description at the best or worst possible match of its image.
    #[arg(long, value_enum)]
    pub planted: Option<PlantArg>,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Serialize)]
pub struct StoreInfo {
    pub manifest: PathBuf,
    pub dims: Dims,
    pub dtype: Dtype,
    pub images: usize,
    pub descriptions: usize,
}

fn emit<T: Serialize>(value: &T, json: bool, text: impl FnOnce(&T) -> String) -> Result<String> {
    if json {
        Ok(serde_json::to_string_pretty(value)? + "\n")
    } else {
        Ok(text(value))
    }
}

/// Description ids, one per line; blank lines and `#` comments are skipped.
pub fn read_queries(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

fn open_store(path: &Path) -> Result<ReprStore> {
    ReprStore::open(path).with_context(|| format!("opening store {}", path.display()))
}

pub fn recall(args: &RecallArgs) -> Result<String> {
    let store = open_store(&args.store)?;
    let judgments = match &args.judgments {
        Some(p) => RelevanceJudgments::load(p)?,
        None => RelevanceJudgments::from_links(&store),
    };
    let config = BenchmarkConfig {
        ks: args.k.clone(),
        scorer: ScorerConfig::with_alpha(args.alpha),
        max_queries: args.max_queries,
    };
    let report = run_benchmark(&store, &judgments, &config)?;
    emit(&report, args.json, |r| r.render())
}

pub fn latency(args: &LatencyArgs) -> Result<String> {
    let store = open_store(&args.store)?;
    let queries = match &args.queries {
        Some(p) => read_queries(p)?,
        None => store
            .manifest()
            .descriptions
            .iter()
            .take(args.sample)
            .map(|d| d.id.clone())
            .collect(),
    };
    if queries.is_empty() {
        bail!("no queries to time");
    }
    let mut report = time_retrieval(
        &store,
        &queries,
        args.reps,
        args.k,
        &ScorerConfig::with_alpha(args.alpha),
    )?;
    if !args.rows {
        report.rows.clear();
    }
    emit(&report, args.json, |r| r.render())
}

pub fn judgments(args: &JudgmentsArgs) -> Result<String> {
    let store = open_store(&args.store)?;
    let j = RelevanceJudgments::from_links(&store);
    j.save(&args.out)?;
    Ok(format!(
        "wrote {} text-to-image and {} image-to-text queries to {}\n",
        j.text_to_image.len(),
        j.image_to_text.len(),
        args.out.display()
    ))
}

pub fn synth(args: &SynthArgs) -> Result<String> {
    let dims = Dims {
        global: args.global,
        local: args.local,
        locals_per_item: args.locals,
    };
    let manifest = match args.planted {
        Some(plant) => {
            if args.per_image != 1 || args.f16 {
                bail!("planted stores have one float32 description per image");
            }
            planted_store(&args.out, args.images, dims, args.seed, plant.into())?
        }
        None => {
            let mut spec = SynthSpec::new(args.images, dims, args.seed);
            spec.descriptions_per_image = args.per_image;
            if args.f16 {
                spec.dtype = Dtype::Float16;
            }
            spec.write(&args.out)?
        }
    };
    Ok(format!("{}\n", manifest.display()))
}

pub fn info(args: &InfoArgs) -> Result<String> {
    let store = open_store(&args.store)?;
    let info = StoreInfo {
        manifest: args.store.clone(),
        dims: store.dims(),
        dtype: store.manifest().dtype,
        images: store.image_count(),
        descriptions: store.description_count(),
    };
    emit(&info, args.json, |i| {
        format!(
            "manifest      {}\ndtype         {:?}\nglobal dim    {}\nlocal dim     {}\nlocals/item   {}\nimages        {}\ndescriptions  {}\n",
            i.manifest.display(),
            i.dtype,
            i.dims.global,
            i.dims.local,
            i.dims.locals_per_item,
            i.images,
            i.descriptions
        )
    })
}

/// Configuration for `serve` after command-line overrides.
pub fn serve_config(args: &ServeArgs) -> Result<ServerConfig> {
    let mut config = match &args.config {
        Some(p) => ServerConfig::load(p)?,
        None => {
            let mut c = ServerConfig::default();
            c.apply_env(|k| std::env::var(k).ok());
            c
        }
    };
    if let Some(bind) = args.bind {
        config.bind = bind;
    }
    if let Some(port) = args.port {
        config.bind.set_port(port);
    }
    config.validate()?;
    Ok(config)
}

pub async fn serve(args: &ServeArgs) -> Result<()> {
    let config = serve_config(args)?;
    let bind = config.bind;
    let state = AppState::from_config(config)?;
    let listener = tokio::net::TcpListener::bind(bind)
        .await
        .with_context(|| format!("binding {bind}"))?;
    crossmodal_server::serve(state, listener, crossmodal_server::shutdown_signal()).await?;
    Ok(())
}

/// Run a non-serving command and return what it prints.
pub fn run_offline(command: &Command) -> Result<String> {
    match command {
        Command::Serve(_) => bail!("serve runs asynchronously"),
        Command::Eval(EvalCommand::Recall(a)) => recall(a),
        Command::Eval(EvalCommand::Latency(a)) => latency(a),
        Command::Eval(EvalCommand::Judgments(a)) => judgments(a),
        Command::Store(StoreCommand::Synth(a)) => synth(a),
        Command::Store(StoreCommand::Info(a)) => info(a),
    }
}
