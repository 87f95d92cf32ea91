//! Local ordering-quality measures, one value per vertex.
//!
//! | measure | direction | value at `v` |
//! |---|---|---|
//! | geometric forward | ordering → space | bbox diagonal of the rank window over bbox diagonal of the `m` nearest points |
//! | geometric inverse | space → ordering | rank range inside the radius-`r` ball over the ball size |
//! | topological forward | ordering → graph | largest hop count to the `m_v` rank neighbors |
//! | topological inverse | graph → ordering | largest rank gap to a graph neighbor over the degree |
//!
//! Smaller is better for all four.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::graph::{is_connected, BfsScratch, DijkstraScratch, UcsGraph};
use crate::ordering::{Method, Ordering};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    GeoFwd,
    GeoInv,
    TopoFwd,
    TopoInv,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [
        MetricKind::GeoFwd,
        MetricKind::GeoInv,
        MetricKind::TopoFwd,
        MetricKind::TopoInv,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::GeoFwd => "geo_fwd",
            MetricKind::GeoInv => "geo_inv",
            MetricKind::TopoFwd => "topo_fwd",
            MetricKind::TopoInv => "topo_inv",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricKind::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown metric {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Anchoring {
    /// Slide the window back inside `0..n`, keeping its cardinality.
    ShiftToFit,
    /// Clip the window at the ends of the ordering.
    Truncate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub m: usize,
    pub anchoring: Anchoring,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BallMode {
    #[default]
    Graph,
    Euclidean,
}

impl BallMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BallMode::Graph => "graph",
            BallMode::Euclidean => "euclidean",
        }
    }
}

impl FromStr for BallMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "graph" => Ok(BallMode::Graph),
            "euclidean" => Ok(BallMode::Euclidean),
            _ => Err(Error::InvalidParameter(format!("unknown ball mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl BoundingBox {
    /// `None` for an empty point set.
    pub fn of(points: impl IntoIterator<Item = [f64; 2]>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut b = BoundingBox { min: first, max: first };
        for p in it {
            b.min = [b.min[0].min(p[0]), b.min[1].min(p[1])];
            b.max = [b.max[0].max(p[0]), b.max[1].max(p[1])];
        }
        Some(b)
    }

    pub fn diagonal(&self) -> f64 {
        (self.max[0] - self.min[0]).hypot(self.max[1] - self.min[1])
    }
}

/// Where a series came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingRef {
    pub method: Method,
    pub label: String,
    pub seed: Option<u64>,
}

impl OrderingRef {
    pub fn of(o: &Ordering) -> Self {
        OrderingRef {
            method: o.method,
            label: o.label(),
            seed: o.seed(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub metric: MetricKind,
    pub values: Vec<f64>,
    pub params: BTreeMap<String, Value>,
    pub ordering_ref: OrderingRef,
}

/// `|N(v)|` rounded up to the next even number.
pub fn adaptive_window_size(g: &UcsGraph, v: usize) -> usize {
    let d = g.degree(v);
    d + d % 2
}

/// Inclusive rank range `[k − ⌊m/2⌋, k + ⌈m/2⌉ − 1]` around rank `k`,
/// anchored inside `0..n`.
pub fn window_rank_range(n: usize, k: usize, spec: WindowSpec) -> (usize, usize) {
    let m = spec.m.max(1);
    let before = m / 2;
    let after = m.div_ceil(2) - 1;
    match spec.anchoring {
        Anchoring::Truncate => (k.saturating_sub(before), (k + after).min(n - 1)),
        Anchoring::ShiftToFit => {
            let m = m.min(n);
            let lo = k.saturating_sub(before).min(n - m);
            (lo, lo + m - 1)
        }
    }
}

/// Vertices whose ranks fall in the window around `v`, in rank order.
/// Includes `v`.
pub fn ordering_window(o: &Ordering, v: usize, spec: WindowSpec) -> Result<Vec<usize>> {
    let n = o.n();
    if v >= n {
        return Err(Error::VertexOutOfRange { index: v, n });
    }
    if spec.m == 0 || spec.m > n {
        return Err(Error::InvalidParameter(format!(
            "window size {} outside 1..={n}",
            spec.m
        )));
    }
    let (lo, hi) = window_rank_range(n, o.rank(v), spec);
    Ok((lo..=hi).map(|r| o.vertex_at(r)).collect())
}

fn check_ordering(g: &UcsGraph, o: &Ordering) -> Result<()> {
    if o.n() != g.n() {
        return Err(Error::InvalidParameter(format!(
            "ordering covers {} vertices, graph has {}",
            o.n(),
            g.n()
        )));
    }
    Ok(())
}

fn series(metric: MetricKind, values: Vec<f64>, o: &Ordering, params: BTreeMap<String, Value>) -> MetricSeries {
    MetricSeries {
        metric,
        values,
        params,
        ordering_ref: OrderingRef::of(o),
    }
}

/// Bounding-box diagonal of the rank window (shift-to-fit, `m` vertices)
/// divided by that of the `m` spatially nearest vertices, the latter
/// floored at 1 m.
pub fn geometric_forward(g: &UcsGraph, o: &Ordering, m: usize) -> Result<MetricSeries> {
    check_ordering(g, o)?;
    let n = g.n();
    if m < 2 || m > n {
        return Err(Error::InvalidParameter(format!(
            "geometric forward window {m} outside 2..={n}"
        )));
    }
    let coords = g.coords();
    let spec = WindowSpec {
        m,
        anchoring: Anchoring::ShiftToFit,
    };
    let values = (0..n)
        .into_par_iter()
        .map(|v| {
            let (lo, hi) = window_rank_range(n, o.rank(v), spec);
            let raw = BoundingBox::of((lo..=hi).map(|r| coords[o.vertex_at(r)]))
                .expect("window is nonempty")
                .diagonal();
            let opt = BoundingBox::of(g.knn_unchecked(v, m).into_iter().map(|u| coords[u]))
                .expect("k-NN set is nonempty")
                .diagonal();
            raw / opt.max(1.0)
        })
        .collect();
    let mut params = BTreeMap::new();
    params.insert("m".into(), Value::from(m as u64));
    params.insert("anchoring".into(), Value::from("shift-to-fit"));
    Ok(series(MetricKind::GeoFwd, values, o, params))
}

/// `(max rank − min rank) / |ball|` over the ball of radius `r` meters.
pub fn geometric_inverse(g: &UcsGraph, o: &Ordering, r: f64, mode: BallMode) -> Result<MetricSeries> {
    check_ordering(g, o)?;
    if !r.is_finite() || r < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "radius must be finite and >= 0, got {r}"
        )));
    }
    let n = g.n();
    let ranks = o.ranks();
    let value = |ball: &[usize]| {
        let (lo, hi) = ball
            .iter()
            .fold((usize::MAX, 0), |(lo, hi), &u| (lo.min(ranks[u]), hi.max(ranks[u])));
        (hi - lo) as f64 / ball.len() as f64
    };
    let values: Vec<f64> = match mode {
        BallMode::Graph => (0..n)
            .into_par_iter()
            .map_init(|| DijkstraScratch::new(n), |scratch, v| value(&scratch.ball(g, v, r)))
            .collect(),
        BallMode::Euclidean => (0..n)
            .into_par_iter()
            .map(|v| value(&g.euclidean_ball_unchecked(v, r)))
            .collect(),
    };
    let mut params = BTreeMap::new();
    params.insert("radius_m".into(), Value::from(r));
    params.insert("ball".into(), Value::from(mode.as_str()));
    Ok(series(MetricKind::GeoInv, values, o, params))
}

/// Largest hop count from `v` to the `m_v` vertices around it in the
/// ordering, `m_v / 2` on each side, clipped at the ends.
pub fn topological_forward(g: &UcsGraph, o: &Ordering) -> Result<MetricSeries> {
    check_ordering(g, o)?;
    if !is_connected(g.adjacency()) {
        return Err(Error::Disconnected);
    }
    let n = g.n();
    let values = (0..n)
        .into_par_iter()
        .map_init(
            || BfsScratch::new(n),
            |scratch, v| {
                // m_v is even, so a window of m_v + 1 ranks is centered on v
                let spec = WindowSpec {
                    m: adaptive_window_size(g, v) + 1,
                    anchoring: Anchoring::Truncate,
                };
                let (lo, hi) = window_rank_range(n, o.rank(v), spec);
                let targets: Vec<usize> = (lo..=hi).map(|r| o.vertex_at(r)).filter(|&u| u != v).collect();
                if targets.is_empty() {
                    return 0.0;
                }
                scratch.hops(g, v, &targets).into_iter().max().unwrap_or(0) as f64
            },
        )
        .collect();
    let mut params = BTreeMap::new();
    params.insert("window".into(), Value::from("degree-adaptive"));
    params.insert("anchoring".into(), Value::from("truncate"));
    Ok(series(MetricKind::TopoFwd, values, o, params))
}

/// Largest rank gap between `v` and a graph neighbor, divided by the degree.
pub fn topological_inverse(g: &UcsGraph, o: &Ordering) -> Result<MetricSeries> {
    check_ordering(g, o)?;
    let ranks = o.ranks();
    let values = (0..g.n())
        .into_par_iter()
        .map(|v| {
            let nbrs = g.neighbors(v);
            if nbrs.is_empty() {
                return 0.0;
            }
            let gap = nbrs
                .iter()
                .map(|&(u, _)| ranks[u].abs_diff(ranks[v]))
                .max()
                .unwrap_or(0);
            gap as f64 / nbrs.len() as f64
        })
        .collect();
    Ok(series(MetricKind::TopoInv, values, o, BTreeMap::new()))
}

/// Window size for geometric forward given as a fraction of `n`:
/// `max(2, round(fraction · n))`, capped at `n`.
pub fn window_from_fraction(n: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "window fraction {fraction} outside (0, 1]"
        )));
    }
    Ok(((fraction * n as f64).round() as usize).max(2).min(n))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricParams {
    pub window: usize,
    pub radius_m: f64,
    pub ball: BallMode,
}

impl MetricParams {
    pub const DEFAULT_WINDOW_FRACTION: f64 = 0.01;
    pub const DEFAULT_RADIUS_M: f64 = 500.0;

    /// Defaults for a graph of `n` vertices: a window of 1% of `n` and a
    /// 500 m graph-distance ball.
    pub fn defaults_for(n: usize) -> Self {
        MetricParams {
            window: ((Self::DEFAULT_WINDOW_FRACTION * n as f64).round() as usize)
                .max(2)
                .min(n),
            radius_m: Self::DEFAULT_RADIUS_M,
            ball: BallMode::Graph,
        }
    }
}

pub fn evaluate(g: &UcsGraph, o: &Ordering, kind: MetricKind, p: &MetricParams) -> Result<MetricSeries> {
    match kind {
        MetricKind::GeoFwd => geometric_forward(g, o, p.window),
        MetricKind::GeoInv => geometric_inverse(g, o, p.radius_m, p.ball),
        MetricKind::TopoFwd => topological_forward(g, o),
        MetricKind::TopoInv => topological_inverse(g, o),
    }
}
