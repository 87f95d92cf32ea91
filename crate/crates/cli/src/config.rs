//! Pipeline configuration files.
//!
//! A config is a JSON object; unknown keys anywhere are rejected. Relative
//! paths are resolved against the directory holding the config file.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use vorder::metrics::{BallMode, MetricKind, MetricParams};
use vorder::orderings::{self, TsneParams, UmapParams};
use vorder::reporting::{MapFormat, ScaleName};
use vorder::{Embedding1D, GraphFormat, Ordering, UcsGraph};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub graph: GraphSource,
    pub methods: Vec<MethodSpec>,
    #[serde(default)]
    pub metrics: MetricsConfig,
    pub output: PathBuf,
    #[serde(default)]
    pub report: ReportConfig,
    #[serde(default)]
    pub maps: MapsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSource {
    pub path: PathBuf,
    pub format: GraphFormat,
    /// Report label; defaults to the input file stem.
    #[serde(default)]
    pub city: Option<String>,
}

impl GraphSource {
    pub fn city(&self) -> String {
        self.city.clone().unwrap_or_else(|| {
            self.path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "city".into())
        })
    }
}

/// A single number or a list to sweep over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sweep {
    One(f64),
    Many(Vec<f64>),
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Sweep::One(x) => vec![*x],
            Sweep::Many(xs) => xs.clone(),
        }
    }
}

fn default_perplexity() -> Sweep {
    Sweep::One(TsneParams::default().perplexity)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase", deny_unknown_fields)]
pub enum MethodSpec {
    Fiedler,
    Original,
    Random {
        seed: Option<u64>,
    },
    Tsne {
        #[serde(default = "default_perplexity")]
        perplexity: Sweep,
        seed: Option<u64>,
        iterations: Option<usize>,
        learning_rate: Option<f64>,
    },
    Umap {
        seed: Option<u64>,
        k: Option<usize>,
        min_dist: Option<f64>,
        epochs: Option<usize>,
    },
}

/// One fully specified ordering computation.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodRun {
    Fiedler,
    Original,
    Random { seed: u64 },
    Tsne(TsneParams),
    Umap(UmapParams),
}

impl MethodRun {
    pub fn compute(&self, g: &UcsGraph) -> vorder::Result<(Ordering, Option<Embedding1D>)> {
        Ok(match self {
            MethodRun::Fiedler => {
                let (o, e) = orderings::fiedler_order(g)?;
                (o, Some(e))
            }
            MethodRun::Original => (orderings::original_order(g), None),
            MethodRun::Random { seed } => (orderings::random_order(g, *seed), None),
            MethodRun::Tsne(p) => {
                let (o, e) = orderings::tsne_order(g, p)?;
                (o, Some(e))
            }
            MethodRun::Umap(p) => {
                let (o, e) = orderings::umap_order(g, p)?;
                (o, Some(e))
            }
        })
    }
}

fn need_seed(method: &str, seed: Option<u64>) -> CliResult<u64> {
    seed.ok_or_else(|| CliError::config(format!("method {method} needs an explicit seed")))
}

impl MethodSpec {
    /// Expands sweeps and checks seeds.
    pub fn runs(&self) -> CliResult<Vec<MethodRun>> {
        Ok(match self {
            MethodSpec::Fiedler => vec![MethodRun::Fiedler],
            MethodSpec::Original => vec![MethodRun::Original],
            MethodSpec::Random { seed } => vec![MethodRun::Random {
                seed: need_seed("random", *seed)?,
            }],
            MethodSpec::Tsne {
                perplexity,
                seed,
                iterations,
                learning_rate,
            } => {
                let seed = need_seed("tsne", *seed)?;
                let values = perplexity.values();
                if values.is_empty() {
                    return Err(CliError::config("tsne perplexity list is empty"));
                }
                values
                    .into_iter()
                    .map(|p| {
                        let mut params = TsneParams::with_perplexity(p, seed);
                        if let Some(it) = iterations {
                            params.iterations = *it;
                        }
                        params.learning_rate = *learning_rate;
                        MethodRun::Tsne(params)
                    })
                    .collect()
            }
            MethodSpec::Umap {
                seed,
                k,
                min_dist,
                epochs,
            } => {
                let mut params = UmapParams::with_seed(need_seed("umap", *seed)?);
                if let Some(k) = k {
                    params.k = *k;
                }
                if let Some(d) = min_dist {
                    params.min_dist = *d;
                }
                if let Some(e) = epochs {
                    params.epochs = *e;
                }
                vec![MethodRun::Umap(params)]
            }
        })
    }
}

fn all_metrics() -> Vec<MetricKind> {
    MetricKind::ALL.to_vec()
}

fn default_radius() -> f64 {
    MetricParams::DEFAULT_RADIUS_M
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    #[serde(default = "all_metrics")]
    pub kinds: Vec<MetricKind>,
    /// Window size as a fraction of `n`; 0.01 when neither this nor
    /// `window` is given.
    #[serde(default)]
    pub window_frac: Option<f64>,
    /// Absolute window size; excludes `window_frac`.
    #[serde(default)]
    pub window: Option<usize>,
    #[serde(default = "default_radius")]
    pub radius_m: f64,
    #[serde(default)]
    pub ball: BallMode,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            kinds: all_metrics(),
            window_frac: None,
            window: None,
            radius_m: default_radius(),
            ball: BallMode::Graph,
        }
    }
}

impl MetricsConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.kinds.is_empty() {
            return Err(CliError::config("metric list is empty"));
        }
        match (self.window_frac, self.window) {
            (Some(_), Some(_)) => return Err(CliError::config("give either window or window_frac, not both")),
            (Some(f), None) if !(f > 0.0 && f <= 1.0) => {
                return Err(CliError::config(format!("window_frac {f} outside (0, 1]")))
            }
            (None, Some(0)) => return Err(CliError::config("window must be at least 1")),
            _ => {}
        }
        if !(self.radius_m > 0.0 && self.radius_m.is_finite()) {
            return Err(CliError::config(format!("radius_m {} must be positive", self.radius_m)));
        }
        Ok(())
    }

    /// Concrete parameters for a graph of `n` vertices.
    pub fn params(&self, n: usize) -> CliResult<MetricParams> {
        self.validate()?;
        let window = match self.window {
            Some(m) => m.min(n),
            None => vorder::metrics::window_from_fraction(
                n,
                self.window_frac.unwrap_or(MetricParams::DEFAULT_WINDOW_FRACTION),
            )
            .map_err(|e| CliError::config(e.to_string()))?,
        };
        Ok(MetricParams {
            window,
            radius_m: self.radius_m,
            ball: self.ball,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalize {
    #[default]
    None,
    PerCityMax,
}

impl FromStr for Normalize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(Normalize::None),
            "per-city-max" => Ok(Normalize::PerCityMax),
            other => Err(format!("unknown normalization {other:?}")),
        }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    #[serde(default)]
    pub normalize: Normalize,
    /// Summarize `log10` values instead of raw ones.
    #[serde(default)]
    pub log: bool,
    #[serde(default = "yes")]
    pub outliers: bool,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            normalize: Normalize::None,
            log: false,
            outliers: true,
        }
    }
}

fn svg_only() -> Vec<MapFormat> {
    vec![MapFormat::Svg]
}

fn error_scale() -> ScaleName {
    ScaleName::Error
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapsConfig {
    /// Output formats; an empty list disables maps.
    #[serde(default = "svg_only")]
    pub formats: Vec<MapFormat>,
    #[serde(default = "all_metrics")]
    pub metrics: Vec<MetricKind>,
    /// Palette for metric maps. Rank maps always use the order palette.
    #[serde(default = "error_scale")]
    pub scale: ScaleName,
    /// Also draw each ordering's ranks.
    #[serde(default = "yes")]
    pub ranks: bool,
    #[serde(default)]
    pub log: bool,
}

impl Default for MapsConfig {
    fn default() -> Self {
        MapsConfig {
            formats: svg_only(),
            metrics: all_metrics(),
            scale: error_scale(),
            ranks: true,
            log: false,
        }
    }
}

impl PipelineConfig {
    /// Parses and validates; relative paths are taken from `base`.
    pub fn from_json(text: &str, base: &Path) -> CliResult<Self> {
        let mut c: PipelineConfig = serde_json::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        for p in [&mut c.graph.path, &mut c.output] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.methods.is_empty() {
            return Err(CliError::config("no methods configured"));
        }
        self.runs()?;
        self.metrics.validate()
    }

    /// Every ordering to compute, in config order.
    pub fn runs(&self) -> CliResult<Vec<MethodRun>> {
        let mut out = Vec::new();
        for m in &self.methods {
            out.extend(m.runs()?);
        }
        Ok(out)
    }
}

pub fn parse_config(path: &Path) -> CliResult<PipelineConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    PipelineConfig::from_json(&text, base)
}
