//! Pipeline stages and the on-disk layout they share.
//!
//! ```text
//! <out>/graph/      nodes.csv, edges.csv, graph.json
//! <out>/orderings/  <label>.csv, <label>.json, <label>.embedding.csv
//! <out>/metrics/    <label>.csv, <label>.json
//! <out>/report/     report.csv, report.json, boxplot_<metric>.svg
//! <out>/maps/       <label>_<metric>.svg|geojson, <label>_rank.svg|geojson
//! ```
//!
//! Later stages read only what earlier stages wrote: evaluation loads the
//! graph cache and an ordering CSV and never recomputes an ordering.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use vorder::artifacts::{
    self, graph_hash, read_json, read_metric_table, write_atomic, write_json, MetricSidecar, OrderingSidecar,
};
use vorder::graph::{csv_pair_bytes, load_graph};
use vorder::metrics::{self, MetricKind, MetricParams, OrderingRef};
use vorder::reporting::{self, BoxplotOptions, ColorScale, ReportEntry, SeriesKey};
use vorder::{GraphFormat, Ordering, UcsGraph};

use crate::config::{MapsConfig, MethodRun, Normalize, PipelineConfig, ReportConfig};
use crate::error::{CliError, CliResult, Stage, StageExt};

/// City label used when a metrics sidecar carries none.
pub const DEFAULT_CITY: &str = "city";

#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn graph_dir(&self) -> PathBuf {
        self.root.join("graph")
    }

    pub fn orderings_dir(&self) -> PathBuf {
        self.root.join("orderings")
    }

    pub fn metrics_dir(&self) -> PathBuf {
        self.root.join("metrics")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.root.join("report")
    }

    pub fn maps_dir(&self) -> PathBuf {
        self.root.join("maps")
    }

    pub fn ordering_csv(&self, label: &str) -> PathBuf {
        self.orderings_dir().join(format!("{label}.csv"))
    }

    pub fn metrics_csv(&self, label: &str) -> PathBuf {
        self.metrics_dir().join(format!("{label}.csv"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphInfo {
    pub source: PathBuf,
    pub format: GraphFormat,
    pub vertices: usize,
    pub edges: usize,
    pub graph_hash: String,
}

/// Loads and cleans `input`, then writes the graph cache.
pub fn ingest(input: &Path, format: GraphFormat, layout: &Layout) -> CliResult<(UcsGraph, String)> {
    let g = load_graph(input, format).stage(Stage::Ingest)?;
    let hash = graph_hash(&g);
    let dir = layout.graph_dir();
    let (nodes, edges) = csv_pair_bytes(&g);
    write_atomic(&dir.join("nodes.csv"), &nodes).stage(Stage::Ingest)?;
    write_atomic(&dir.join("edges.csv"), &edges).stage(Stage::Ingest)?;
    let meta = GraphInfo {
        source: input.to_path_buf(),
        format,
        vertices: g.n(),
        edges: g.edge_count(),
        graph_hash: hash.clone(),
    };
    write_json(&meta, &dir.join("graph.json")).stage(Stage::Ingest)?;
    info!(
        "ingested {} vertices, {} edges from {}",
        g.n(),
        g.edge_count(),
        input.display()
    );
    Ok((g, hash))
}

/// Reads the graph cache back and checks it against its recorded hash.
pub fn load_cache(layout: &Layout, stage: Stage) -> CliResult<(UcsGraph, String)> {
    let dir = layout.graph_dir();
    let g = load_graph(&dir, GraphFormat::CsvPair).stage(stage)?;
    let hash = graph_hash(&g);
    let meta: GraphInfo = read_json(&dir.join("graph.json")).stage(stage)?;
    if meta.graph_hash != hash {
        return Err(CliError::at(
            stage,
            format!("graph cache in {} does not match its recorded hash", dir.display()),
        ));
    }
    Ok((g, hash))
}

/// Computes one ordering and writes its CSV, sidecar and embedding.
pub fn order(g: &UcsGraph, hash: &str, run: &MethodRun, layout: &Layout) -> CliResult<PathBuf> {
    let (o, embedding) = run.compute(g).stage(Stage::Order)?;
    let label = o.label();
    let csv = layout.ordering_csv(&label);
    artifacts::write_ordering_csv(g, &o, &csv).stage(Stage::Order)?;
    write_json(&OrderingSidecar::of(&o, hash), &csv.with_extension("json")).stage(Stage::Order)?;
    if let Some(e) = embedding {
        let path = layout.orderings_dir().join(format!("{label}.embedding.csv"));
        artifacts::write_embedding_csv(g, &e, &path).stage(Stage::Order)?;
    }
    info!("ordering {label} written");
    Ok(csv)
}

/// Reads an ordering CSV and its sidecar, refusing orderings computed on a
/// different graph.
pub fn load_ordering(g: &UcsGraph, hash: &str, csv: &Path, stage: Stage) -> CliResult<Ordering> {
    let sidecar: OrderingSidecar = read_json(&csv.with_extension("json")).stage(stage)?;
    if sidecar.graph_hash != hash {
        return Err(CliError::at(
            stage,
            format!("{} was computed on a different graph", csv.display()),
        ));
    }
    let mut o = artifacts::read_ordering_csv(g, csv, sidecar.method).stage(stage)?;
    o.params = sidecar.params;
    Ok(o)
}

/// Evaluates `kinds` for one ordering and writes the metrics CSV and
/// sidecar. Metrics run in parallel; the output does not depend on the
/// thread count.
pub fn evaluate(
    g: &UcsGraph,
    hash: &str,
    o: &Ordering,
    kinds: &[MetricKind],
    params: &MetricParams,
    city: Option<&str>,
    layout: &Layout,
) -> CliResult<PathBuf> {
    let series = kinds
        .par_iter()
        .map(|&k| metrics::evaluate(g, o, k, params))
        .collect::<vorder::Result<Vec<_>>>()
        .stage(Stage::Eval)?;
    let label = o.label();
    let csv = layout.metrics_csv(&label);
    artifacts::write_metrics_csv(g, &series, &csv).stage(Stage::Eval)?;
    let sidecar = MetricSidecar {
        metrics: series.iter().map(|s| (s.metric, s.params.clone())).collect(),
        ordering: OrderingRef::of(o),
        graph_hash: hash.to_string(),
        city: city.map(str::to_string),
    };
    write_json(&sidecar, &csv.with_extension("json")).stage(Stage::Eval)?;
    info!("metrics for {label} written");
    Ok(csv)
}

/// A metrics file and its sidecar, for reporting.
#[derive(Debug, Clone)]
pub struct MetricInput {
    pub city: String,
    pub sidecar: MetricSidecar,
    pub vertex_ids: Vec<String>,
    pub columns: BTreeMap<MetricKind, Vec<f64>>,
}

pub fn load_metrics(csv: &Path, stage: Stage) -> CliResult<MetricInput> {
    let sidecar: MetricSidecar = read_json(&csv.with_extension("json")).stage(stage)?;
    let table = read_metric_table(csv).stage(stage)?;
    Ok(MetricInput {
        city: sidecar.city.clone().unwrap_or_else(|| DEFAULT_CITY.to_string()),
        sidecar,
        vertex_ids: table.vertex_ids,
        columns: table.columns,
    })
}

fn transform(series: BTreeMap<SeriesKey, Vec<f64>>, cfg: &ReportConfig) -> CliResult<BTreeMap<SeriesKey, Vec<f64>>> {
    let series = match cfg.normalize {
        Normalize::None => series,
        Normalize::PerCityMax => reporting::normalize_per_city(&series),
    };
    if !cfg.log {
        return Ok(series);
    }
    series
        .into_iter()
        .map(|(k, v)| Ok((k, reporting::log_scale(&v).stage(Stage::Export)?)))
        .collect()
}

/// Summarizes every (city, ordering, metric) series and writes the report
/// CSV/JSON plus one boxplot per metric.
pub fn report(inputs: &[MetricInput], cfg: &ReportConfig, layout: &Layout) -> CliResult<Vec<ReportEntry>> {
    let mut series = BTreeMap::new();
    let mut params: BTreeMap<SeriesKey, BTreeMap<String, Value>> = BTreeMap::new();
    for input in inputs {
        for (kind, values) in &input.columns {
            let key = SeriesKey {
                city: input.city.clone(),
                method: input.sidecar.ordering.label.clone(),
                metric: kind.as_str().to_string(),
            };
            if series.insert(key.clone(), values.clone()).is_some() {
                return Err(CliError::at(
                    Stage::Export,
                    format!("series {}/{}/{} given twice", key.city, key.method, key.metric),
                ));
            }
            let mut p = input.sidecar.metrics.get(kind).cloned().unwrap_or_default();
            p.insert("method".into(), Value::from(input.sidecar.ordering.method.as_str()));
            if let Some(seed) = input.sidecar.ordering.seed {
                p.insert("seed".into(), Value::from(seed));
            }
            params.insert(key, p);
        }
    }
    let series = transform(series, cfg)?;

    let mut entries = Vec::with_capacity(series.len());
    for (key, values) in &series {
        entries.push(ReportEntry {
            city: key.city.clone(),
            method: key.method.clone(),
            metric: key.metric.clone(),
            stats: reporting::summarize(values).stage(Stage::Export)?,
            params: params.remove(key).unwrap_or_default(),
        });
    }

    let dir = layout.report_dir();
    reporting::export_report(&entries, &dir.join("report.csv"), &dir.join("report.json")).stage(Stage::Export)?;

    let cities: BTreeSet<&str> = entries.iter().map(|e| e.city.as_str()).collect();
    let metrics: BTreeSet<&str> = entries.iter().map(|e| e.metric.as_str()).collect();
    for metric in metrics {
        let groups: Vec<(String, reporting::BoxplotStats)> = entries
            .iter()
            .filter(|e| e.metric == metric)
            .map(|e| {
                let name = if cities.len() > 1 {
                    format!("{}/{}", e.city, e.method)
                } else {
                    e.method.clone()
                };
                (name, e.stats.clone())
            })
            .collect();
        let opts = BoxplotOptions {
            with_outliers: cfg.outliers,
            title: metric.to_string(),
            y_label: if cfg.log {
                format!("log10 {metric}")
            } else {
                metric.to_string()
            },
        };
        reporting::export_boxplot_svg(&groups, &opts, &dir.join(format!("boxplot_{metric}.svg")))
            .stage(Stage::Export)?;
    }
    info!("report with {} series written", entries.len());
    Ok(entries)
}

/// Writes metric maps (and optionally a rank map) for one ordering.
pub fn maps(
    g: &UcsGraph,
    o: &Ordering,
    columns: &BTreeMap<MetricKind, Vec<f64>>,
    cfg: &MapsConfig,
    layout: &Layout,
) -> CliResult<Vec<PathBuf>> {
    let label = o.label();
    let dir = layout.maps_dir();
    let mut written = Vec::new();
    for &format in &cfg.formats {
        let ext = format.extension();
        for kind in &cfg.metrics {
            let Some(values) = columns.get(kind) else { continue };
            let values = if cfg.log {
                reporting::log_scale(values).stage(Stage::Export)?
            } else {
                values.clone()
            };
            let out = dir.join(format!("{label}_{}.{ext}", kind.as_str()));
            reporting::export_map(g, &values, Some(o), &ColorScale::by_name(cfg.scale), format, &out)
                .stage(Stage::Export)?;
            written.push(out);
        }
        if cfg.ranks {
            let ranks: Vec<f64> = o.ranks().iter().map(|&r| (r + 1) as f64).collect();
            let out = dir.join(format!("{label}_rank.{ext}"));
            reporting::export_map(g, &ranks, Some(o), &ColorScale::order(), format, &out).stage(Stage::Export)?;
            written.push(out);
        }
    }
    Ok(written)
}

/// What a full run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub graph_hash: String,
    pub orderings: Vec<PathBuf>,
    pub metrics: Vec<PathBuf>,
    pub report: Vec<ReportEntry>,
    pub maps: Vec<PathBuf>,
}

fn pool(jobs: Option<usize>) -> CliResult<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(CliError::config("--jobs must be at least 1"));
        }
        b = b.num_threads(j);
    }
    b.build().map_err(|e| CliError::config(format!("thread pool: {e}")))
}

/// Runs every stage of `config`, with at most `jobs` worker threads.
pub fn run_pipeline(config: &PipelineConfig, jobs: Option<usize>) -> CliResult<RunSummary> {
    pool(jobs)?.install(|| run_in_current_pool(config))
}

/// [`run_pipeline`] on whatever rayon pool is current.
pub fn run_in_current_pool(config: &PipelineConfig) -> CliResult<RunSummary> {
    config.validate()?;
    let layout = Layout::new(&config.output);
    let runs = config.runs()?;

    ingest(&config.graph.path, config.graph.format, &layout)?;
    let (g, hash) = load_cache(&layout, Stage::Order)?;

    // Labels become file names, so two runs must never share one.
    let mut labels = BTreeSet::new();
    for run in &runs {
        let label = probe_label(run);
        if !labels.insert(label.clone()) {
            return Err(CliError::config(format!("two methods produce the ordering {label}")));
        }
    }

    let orderings = runs
        .par_iter()
        .map(|run| order(&g, &hash, run, &layout))
        .collect::<CliResult<Vec<_>>>()?;

    let params = config.metrics.params(g.n())?;
    let city = config.graph.city();
    let metrics = orderings
        .par_iter()
        .map(|csv| {
            let o = load_ordering(&g, &hash, csv, Stage::Eval)?;
            evaluate(&g, &hash, &o, &config.metrics.kinds, &params, Some(&city), &layout)
        })
        .collect::<CliResult<Vec<_>>>()?;

    let inputs = metrics
        .iter()
        .map(|csv| load_metrics(csv, Stage::Export))
        .collect::<CliResult<Vec<_>>>()?;
    let report = report(&inputs, &config.report, &layout)?;

    let maps = if config.maps.formats.is_empty() {
        Vec::new()
    } else {
        orderings
            .par_iter()
            .zip(metrics.par_iter())
            .map(|(ocsv, mcsv)| {
                let o = load_ordering(&g, &hash, ocsv, Stage::Export)?;
                let columns = artifacts::read_metrics_csv(&g, mcsv).stage(Stage::Export)?;
                maps(&g, &o, &columns, &config.maps, &layout)
            })
            .collect::<CliResult<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect()
    };

    Ok(RunSummary {
        graph_hash: hash,
        orderings,
        metrics,
        report,
        maps,
    })
}

/// The label an ordering from `run` will carry, without computing it.
fn probe_label(run: &MethodRun) -> String {
    use vorder::Method;
    let probe = |m: Method, params: &[(&str, Value)]| {
        let mut o = Ordering::from_ranks(vec![0], m).expect("single vertex");
        for (k, v) in params {
            o = o.with_param(k, v.clone());
        }
        o.label()
    };
    match run {
        MethodRun::Fiedler => probe(Method::Fiedler, &[]),
        MethodRun::Original => probe(Method::Original, &[]),
        MethodRun::Random { seed } => probe(Method::Random, &[("seed", Value::from(*seed))]),
        MethodRun::Tsne(p) => probe(
            Method::Tsne,
            &[("perplexity", Value::from(p.perplexity)), ("seed", Value::from(p.seed))],
        ),
        MethodRun::Umap(p) => probe(
            Method::Umap,
            &[
                ("k", Value::from(p.k)),
                ("min_dist", Value::from(p.min_dist)),
                ("seed", Value::from(p.seed)),
            ],
        ),
    }
}
