use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pushresp::cleaning::CleaningConfig;
use pushresp::decomposition::{BootstrapConfig, LocalIndex, RecomputeWeights};
use pushresp::ingest::Venue;
use pushresp::surface::BinGridSpec;
use pushresp::synthetic::{Innovation, SyntheticKind, SyntheticSpec};
use pushresp_cli::config::{parse_lag_arg, validate, InputSource, PipelineConfig};
use pushresp_cli::error::{exit, CliError, Result};
use pushresp_cli::pipeline::run_pipeline;
use pushresp_cli::render::{Artifacts, FigureKind, FigureSpec};
use pushresp_cli::stages::{self, StageCtx};

#[derive(Parser, Debug)]
#[command(
    name = "pushresp",
    version,
    about = "Lag-resolved push-response analysis of mid-price series"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "PUSHRESP_THREADS")]
    threads: Option<usize>,
    /// Reproducible artifacts: no wall-clock fields in manifests.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Consolidate venue quotes (or a pre-consolidated NBBO file) into a mid series.
    Ingest(IngestArgs),
    /// Winsorize increments and remove jumps.
    Clean(CleanArgs),
    /// Accumulate the binned push-response surface.
    Surface(SurfaceArgs),
    /// Mirror-pair decomposition, dominance statistics and bootstrap bands.
    Decompose(DecomposeArgs),
    /// Generate a synthetic mid series.
    Synth(SynthArgs),
    /// Draw one figure from CSV artifacts.
    Render(RenderArgs),
    /// Run every stage from a config file.
    Pipeline(PipelineArgs),
    /// Check a config without touching data.
    Validate(PipelineArgs),
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// Quote CSV file or directory of per-venue CSV files.
    #[arg(long, conflicts_with = "nbbo", required_unless_present = "nbbo")]
    venues: Option<PathBuf>,
    /// Pre-consolidated `timestamp_ns,bid_price,ask_price` file.
    #[arg(long)]
    nbbo: Option<PathBuf>,
    #[arg(long, default_value = "America/New_York")]
    tz: String,
    /// Fail on the first malformed record.
    #[arg(long)]
    strict: bool,
    /// Tie-break order of venues, e.g. NYSE,ARCA,NASDAQ.
    #[arg(long, value_delimiter = ',')]
    priority: Option<Vec<Venue>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CleanArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 1e-5)]
    lower_q: f64,
    #[arg(long, default_value_t = 0.99999)]
    upper_q: f64,
    #[arg(long, default_value_t = 1.5)]
    jump: f64,
    #[arg(long)]
    out: PathBuf,
    /// Cleaning report JSON (default: `<out>.report.json`).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
struct GridArgs {
    /// `default` for [-4, 4) in steps of 0.025.
    #[arg(long, default_value = "default")]
    grid: String,
    #[arg(long, allow_hyphen_values = true)]
    z_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    z_max: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    /// Minimum cell support.
    #[arg(long)]
    nmin: Option<u64>,
}

impl GridArgs {
    fn apply(&self, mut g: BinGridSpec) -> Result<BinGridSpec> {
        if self.grid != "default" {
            return Err(CliError::invalid(format!("unknown grid {:?}", self.grid)));
        }
        g.z_min = self.z_min.unwrap_or(g.z_min);
        g.z_max = self.z_max.unwrap_or(g.z_max);
        g.step = self.step.unwrap_or(g.step);
        g.n_min = self.nmin.unwrap_or(g.n_min);
        Ok(g)
    }
}

#[derive(Args, Debug)]
struct SurfaceArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    /// `short`, `long`, `file:<path>` or a comma-separated list.
    #[arg(long, default_value = "short")]
    lags: String,
    #[arg(long)]
    out: PathBuf,
    /// Moments CSV (default: `<out>.moments.csv`).
    #[arg(long)]
    moments: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
struct BootstrapArgs {
    /// Bootstrap replicates.
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Keep pair weights on drawn pairs.
    #[arg(long)]
    retain_weights: bool,
    #[arg(long)]
    local_index: Option<LocalIndex>,
}

impl BootstrapArgs {
    fn apply(&self, mut b: BootstrapConfig) -> BootstrapConfig {
        b.replicates = self.bootstrap.unwrap_or(b.replicates);
        b.seed = self.seed.unwrap_or(b.seed);
        if self.retain_weights {
            b.recompute = RecomputeWeights::Retain;
        }
        b
    }
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    #[arg(long)]
    surface: PathBuf,
    #[command(flatten)]
    bootstrap: BootstrapArgs,
    #[arg(long)]
    out_heatmap: PathBuf,
    #[arg(long)]
    out_summary: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value = "null_walk")]
    kind: SyntheticKind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    sessions: usize,
    #[arg(long, default_value_t = 50)]
    lag: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    phi: f64,
    #[arg(long, default_value_t = 0.0)]
    asym_gain: f64,
    #[arg(long, default_value_t = 0.01)]
    tick: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use +-tick coin flips instead of Gaussian innovations.
    #[arg(long)]
    coin: bool,
    /// Round prices to the tick.
    #[arg(long)]
    quantize: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[arg(long)]
    figure: FigureKind,
    #[arg(long)]
    surface: Option<PathBuf>,
    #[arg(long)]
    heatmap: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Label for the title, e.g. short or long.
    #[arg(long)]
    lag_family: Option<String>,
    #[arg(long, allow_hyphen_values = true, requires = "color_max")]
    color_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "color_min")]
    color_max: Option<f64>,
    #[arg(long, default_value = "signed")]
    local_index: LocalIndex,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    /// JSON config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use an existing mid-series file as input.
    #[arg(long)]
    prms: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    lags: Option<String>,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    lower_q: Option<f64>,
    #[arg(long)]
    upper_q: Option<f64>,
    #[arg(long)]
    jump: Option<f64>,
    #[command(flatten)]
    bootstrap: BootstrapArgs,
}

impl PipelineArgs {
    fn resolve(&self, threads: Option<usize>, deterministic: bool) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::new(
                InputSource::Prms {
                    path: self.prms.clone().unwrap_or_else(|| PathBuf::from("mids.prms")),
                },
                self.out_dir.clone().unwrap_or_else(|| PathBuf::from("out")),
            ),
        };
        if let Some(p) = &self.prms {
            cfg.input = InputSource::Prms { path: p.clone() };
        }
        if let Some(d) = &self.out_dir {
            cfg.out_dir = d.clone();
        }
        if let Some(l) = &self.lags {
            cfg.lags = parse_lag_arg(l)?;
        }
        cfg.grid = self.grid.apply(cfg.grid)?;
        let c = &mut cfg.cleaning;
        c.lower_q = self.lower_q.unwrap_or(c.lower_q);
        c.upper_q = self.upper_q.unwrap_or(c.upper_q);
        c.jump_threshold = self.jump.unwrap_or(c.jump_threshold);
        cfg.bootstrap = self.bootstrap.apply(cfg.bootstrap);
        if let Some(li) = self.bootstrap.local_index {
            cfg.local_index = li;
        }
        cfg.deterministic |= deterministic;
        if threads.is_some() {
            cfg.threads = threads;
        }
        Ok(cfg)
    }
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn run(cli: Cli) -> Result<()> {
    let ctx = StageCtx {
        deterministic: cli.deterministic,
        resume: false,
        pipeline_config: None,
    };
    match cli.command {
        Command::Ingest(a) => {
            let source = match (a.venues, a.nbbo) {
                (Some(path), _) => InputSource::Quotes {
                    path,
                    tz: a.tz,
                    strict: a.strict,
                    venue_priority: a.priority,
                },
                (None, Some(path)) => InputSource::Nbbo {
                    path,
                    tz: a.tz,
                    strict: a.strict,
                },
                (None, None) => return Err(CliError::invalid("need --venues or --nbbo")),
            };
            stages::ingest(&ctx, &source, &a.out)?;
        }
        Command::Clean(a) => {
            let cfg = CleaningConfig {
                lower_q: a.lower_q,
                upper_q: a.upper_q,
                jump_threshold: a.jump,
            };
            let report = a.report.unwrap_or_else(|| sibling(&a.out, ".report.json"));
            stages::clean_stage(&ctx, &cfg, &a.input, &a.out, &report)?;
        }
        Command::Surface(a) => {
            let grid = a.grid.apply(BinGridSpec::default())?;
            let lags = parse_lag_arg(&a.lags)?;
            let moments = a.moments.unwrap_or_else(|| sibling(&a.out, ".moments.csv"));
            stages::surface_stage(&ctx, &lags, &grid, &a.input, &a.out, &moments)?;
        }
        Command::Decompose(a) => {
            let b = a.bootstrap.apply(BootstrapConfig::default());
            let li = a.bootstrap.local_index.unwrap_or_default();
            stages::decompose_stage(&ctx, &b, li, &a.surface, &a.out_heatmap, &a.out_summary)?;
        }
        Command::Synth(a) => {
            let spec = SyntheticSpec {
                kind: a.kind,
                n_events: a.n,
                n_sessions: a.sessions,
                tick: a.tick,
                inject_lag: a.lag,
                phi: a.phi,
                asym_gain: a.asym_gain,
                seed: a.seed,
                innovation: if a.coin { Innovation::Coin } else { Innovation::Gaussian },
                quantize: a.quantize,
                ..SyntheticSpec::default()
            };
            stages::synth(&ctx, &spec, &a.out)?;
        }
        Command::Render(a) => {
            let spec = FigureSpec {
                kind: a.figure,
                lag_family: a.lag_family,
                color_bounds: a.color_min.zip(a.color_max),
                local_index: a.local_index,
                out: a.out,
            };
            let artifacts = Artifacts {
                surface: a.surface,
                heatmap: a.heatmap,
                summary: a.summary,
            };
            stages::render_stage(&ctx, &spec, &artifacts)?;
        }
        Command::Pipeline(a) => {
            let cfg = a.resolve(cli.threads, cli.deterministic)?;
            let report = run_pipeline(&cfg)?;
            for (stage, outcome) in &report.stages {
                println!("{stage}: {outcome:?}");
            }
        }
        Command::Validate(a) => {
            let cfg = a.resolve(cli.threads, cli.deterministic)?;
            let report = validate(&cfg);
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            report.into_result()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(exit::VALIDATION as u8),
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(exit::VALIDATION as u8);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(exit::STAGE_FAILURE as u8);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
