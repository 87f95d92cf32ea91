//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use vorder::metrics::{BallMode, MetricKind};
use vorder::orderings::{TsneParams, UmapParams};
use vorder::reporting::{MapFormat, ScaleName};
use vorder::{GraphFormat, Method};

use crate::config::{parse_config, MapsConfig, MethodRun, MetricsConfig, Normalize, ReportConfig};
use crate::error::{CliError, CliResult, Stage};
use crate::pipeline::{self, Layout};

#[derive(Debug, Parser)]
#[command(
    name = "vorder",
    version,
    about = "Vertex orderings of street graphs and how local they are"
)]
pub struct Cli {
    /// Worker threads for independent jobs (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load, clean and cache a graph under <OUT>/graph.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        format: GraphFormat,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute orderings of the cached graph.
    Order(OrderArgs),
    /// Evaluate locality measures for ordering CSVs.
    Eval(EvalArgs),
    /// Summarize metric files into a report with boxplots.
    Report(ReportArgs),
    /// Draw metric or rank maps.
    Map(MapArgs),
    /// Run every stage from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct OrderArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub method: Method,
    /// One or more comma-separated values; each gives its own ordering.
    #[arg(long, value_delimiter = ',')]
    pub perplexity: Vec<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// UMAP neighbor count.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub min_dist: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Ordering CSVs; defaults to every CSV in <OUT>/orderings.
    #[arg(long)]
    pub ordering: Vec<PathBuf>,
    /// Metrics to compute; defaults to all four.
    #[arg(long, value_delimiter = ',')]
    pub metric: Vec<MetricKind>,
    #[arg(long, conflicts_with = "window")]
    pub window_frac: Option<f64>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long, default_value_t = vorder::metrics::MetricParams::DEFAULT_RADIUS_M)]
    pub radius_m: f64,
    #[arg(long, default_value = "graph")]
    pub ball: BallMode,
    /// Label for grouping in multi-city reports.
    #[arg(long)]
    pub city: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Metric CSVs; defaults to every CSV in <OUT>/metrics.
    #[arg(long)]
    pub metrics: Vec<PathBuf>,
    #[arg(long, default_value = "none")]
    pub normalize: Normalize,
    #[arg(long)]
    pub log: bool,
    #[arg(long)]
    pub no_outliers: bool,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Ordering CSV to draw.
    #[arg(long)]
    pub ordering: PathBuf,
    /// Metric CSV for that ordering; without it only the rank map is drawn.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub metric: Vec<MetricKind>,
    #[arg(long, default_value = "svg")]
    pub format: MapFormat,
    #[arg(long, default_value = "error")]
    pub scale: ScaleName,
    #[arg(long)]
    pub log: bool,
}

fn csvs_in(dir: &Path, stage: Stage) -> CliResult<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::at(stage, format!("{}: {e}", dir.display())))?;
    let mut out: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            name.ends_with(".csv") && !name.ends_with(".embedding.csv")
        })
        .collect();
    out.sort();
    Ok(out)
}

fn order_runs(a: &OrderArgs) -> CliResult<Vec<MethodRun>> {
    let seed = || {
        a.seed
            .ok_or_else(|| CliError::config(format!("method {} needs --seed", a.method)))
    };
    Ok(match a.method {
        Method::Fiedler => vec![MethodRun::Fiedler],
        Method::Original => vec![MethodRun::Original],
        Method::Random => vec![MethodRun::Random { seed: seed()? }],
        Method::Tsne => {
            let seed = seed()?;
            let perplexities = if a.perplexity.is_empty() {
                vec![TsneParams::default().perplexity]
            } else {
                a.perplexity.clone()
            };
            perplexities
                .into_iter()
                .map(|p| {
                    let mut params = TsneParams::with_perplexity(p, seed);
                    if let Some(it) = a.iterations {
                        params.iterations = it;
                    }
                    MethodRun::Tsne(params)
                })
                .collect()
        }
        Method::Umap => {
            let mut params = UmapParams::with_seed(seed()?);
            if let Some(k) = a.k {
                params.k = k;
            }
            if let Some(d) = a.min_dist {
                params.min_dist = d;
            }
            vec![MethodRun::Umap(params)]
        }
    })
}

pub fn dispatch(cli: &Cli) -> CliResult<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::config("--jobs must be at least 1"));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    pool.install(|| execute(&cli.command))
}

fn execute(command: &Command) -> CliResult<()> {
    match command {
        Command::Ingest { input, format, out } => {
            pipeline::ingest(input, *format, &Layout::new(out))?;
        }
        Command::Order(a) => {
            let runs = order_runs(a)?;
            let layout = Layout::new(&a.out);
            let (g, hash) = pipeline::load_cache(&layout, Stage::Order)?;
            for run in &runs {
                let path = pipeline::order(&g, &hash, run, &layout)?;
                println!("{}", path.display());
            }
        }
        Command::Eval(a) => {
            let cfg = MetricsConfig {
                kinds: if a.metric.is_empty() {
                    MetricKind::ALL.to_vec()
                } else {
                    a.metric.clone()
                },
                window_frac: a.window_frac,
                window: a.window,
                radius_m: a.radius_m,
                ball: a.ball,
            };
            cfg.validate()?;
            let layout = Layout::new(&a.out);
            let (g, hash) = pipeline::load_cache(&layout, Stage::Eval)?;
            let params = cfg.params(g.n())?;
            let orderings = if a.ordering.is_empty() {
                csvs_in(&layout.orderings_dir(), Stage::Eval)?
            } else {
                a.ordering.clone()
            };
            for csv in &orderings {
                let o = pipeline::load_ordering(&g, &hash, csv, Stage::Eval)?;
                let path = pipeline::evaluate(&g, &hash, &o, &cfg.kinds, &params, a.city.as_deref(), &layout)?;
                println!("{}", path.display());
            }
        }
        Command::Report(a) => {
            let layout = Layout::new(&a.out);
            let files = if a.metrics.is_empty() {
                csvs_in(&layout.metrics_dir(), Stage::Export)?
            } else {
                a.metrics.clone()
            };
            let inputs = files
                .iter()
                .map(|f| pipeline::load_metrics(f, Stage::Export))
                .collect::<CliResult<Vec<_>>>()?;
            let cfg = ReportConfig {
                normalize: a.normalize,
                log: a.log,
                outliers: !a.no_outliers,
            };
            let entries = pipeline::report(&inputs, &cfg, &layout)?;
            println!("{} series summarized", entries.len());
        }
        Command::Map(a) => {
            let layout = Layout::new(&a.out);
            let (g, hash) = pipeline::load_cache(&layout, Stage::Export)?;
            let o = pipeline::load_ordering(&g, &hash, &a.ordering, Stage::Export)?;
            let columns = match &a.metrics {
                Some(m) => vorder::artifacts::read_metrics_csv(&g, m).map_err(|source| CliError::Library {
                    stage: Stage::Export,
                    source,
                })?,
                None => Default::default(),
            };
            let cfg = MapsConfig {
                formats: vec![a.format],
                metrics: if a.metric.is_empty() {
                    MetricKind::ALL.to_vec()
                } else {
                    a.metric.clone()
                },
                scale: a.scale,
                ranks: a.metrics.is_none(),
                log: a.log,
            };
            for path in pipeline::maps(&g, &o, &columns, &cfg, &layout)? {
                println!("{}", path.display());
            }
        }
        Command::Run { config } => {
            let c = parse_config(config)?;
            let summary = pipeline::run_in_current_pool(&c)?;
            println!(
                "{} orderings, {} metric files, {} report series, {} maps in {}",
                summary.orderings.len(),
                summary.metrics.len(),
                summary.report.len(),
                summary.maps.len(),
                c.output.display()
            );
        }
    }
    Ok(())
}
