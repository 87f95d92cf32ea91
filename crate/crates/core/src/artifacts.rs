//! On-disk pipeline artifacts: ordering, embedding and metric CSVs plus
//! their JSON sidecars.
//!
//! All writers go through a `.partial` file that is renamed into place, so a
//! failed stage never leaves a truncated file under the final name.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{csv_pair_bytes, UcsGraph};
use crate::metrics::{MetricKind, MetricSeries, OrderingRef};
use crate::ordering::{Embedding1D, Method, Ordering};

pub use crate::reporting::write_atomic;

/// SHA-256 over the canonical csv-pair serialization of `g`.
pub fn graph_hash(g: &UcsGraph) -> String {
    let (nodes, edges) = csv_pair_bytes(g);
    let mut h = Sha256::new();
    h.update(b"nodes.csv\n");
    h.update(&nodes);
    h.update(b"edges.csv\n");
    h.update(&edges);
    hex::encode(h.finalize())
}

fn artifact_err(path: &Path, message: impl ToString) -> Error {
    Error::Artifact {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

fn finish_csv(w: csv::Writer<Vec<u8>>, path: &Path) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| artifact_err(path, e))
}

/// `vertex_id,rank` with 1-based ranks, rows in vertex storage order.
pub fn write_ordering_csv(g: &UcsGraph, o: &Ordering, path: &Path) -> Result<()> {
    if o.n() != g.n() {
        return Err(artifact_err(path, "ordering size does not match graph"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["vertex_id", "rank"])
        .map_err(|e| artifact_err(path, e))?;
    for v in 0..g.n() {
        w.write_record([g.vertex_id(v), &(o.rank(v) + 1).to_string()])
            .map_err(|e| artifact_err(path, e))?;
    }
    write_atomic(path, &finish_csv(w, path)?)
}

#[derive(Deserialize)]
struct RankRow {
    vertex_id: String,
    rank: usize,
}

/// Reads an ordering CSV back against `g`. Every vertex must appear once
/// with a rank in `1..=n`.
pub fn read_ordering_csv(g: &UcsGraph, path: &Path, method: Method) -> Result<Ordering> {
    let mut r = csv::Reader::from_path(path).map_err(|e| artifact_err(path, e))?;
    let mut ranks = vec![usize::MAX; g.n()];
    for row in r.deserialize::<RankRow>() {
        let row = row.map_err(|e| artifact_err(path, e))?;
        let v = g
            .index_of(&row.vertex_id)
            .ok_or_else(|| artifact_err(path, format!("unknown vertex {:?}", row.vertex_id)))?;
        if row.rank == 0 || ranks[v] != usize::MAX {
            return Err(artifact_err(
                path,
                format!("bad or repeated row for {:?}", row.vertex_id),
            ));
        }
        ranks[v] = row.rank - 1;
    }
    if ranks.contains(&usize::MAX) {
        return Err(artifact_err(path, "ordering does not cover every vertex"));
    }
    Ordering::from_ranks(ranks, method).map_err(|e| artifact_err(path, e))
}

/// `vertex_id,value`, rows in vertex storage order.
pub fn write_embedding_csv(g: &UcsGraph, e: &Embedding1D, path: &Path) -> Result<()> {
    if e.values.len() != g.n() {
        return Err(artifact_err(path, "embedding size does not match graph"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["vertex_id", "value"])
        .map_err(|e| artifact_err(path, e))?;
    for (v, x) in e.values.iter().enumerate() {
        w.write_record([g.vertex_id(v), &x.to_string()])
            .map_err(|e| artifact_err(path, e))?;
    }
    write_atomic(path, &finish_csv(w, path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderingSidecar {
    pub method: Method,
    pub params: BTreeMap<String, Value>,
    pub seed: Option<u64>,
    pub graph_hash: String,
}

impl OrderingSidecar {
    pub fn of(o: &Ordering, graph_hash: &str) -> Self {
        OrderingSidecar {
            method: o.method,
            params: o.params.clone(),
            seed: o.seed(),
            graph_hash: graph_hash.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSidecar {
    pub metrics: BTreeMap<MetricKind, BTreeMap<String, Value>>,
    pub ordering: OrderingRef,
    pub graph_hash: String,
    /// Grouping label for multi-city reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub city: Option<String>,
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| artifact_err(path, e))?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&s).map_err(|e| artifact_err(path, e))
}

/// `vertex_id,<metric>...` with one column per series, in the canonical
/// metric order.
pub fn write_metrics_csv(g: &UcsGraph, series: &[MetricSeries], path: &Path) -> Result<()> {
    let mut cols: Vec<&MetricSeries> = series.iter().collect();
    cols.sort_by_key(|s| s.metric);
    if cols.windows(2).any(|w| w[0].metric == w[1].metric) {
        return Err(artifact_err(path, "duplicate metric column"));
    }
    if cols.iter().any(|s| s.values.len() != g.n()) {
        return Err(artifact_err(path, "metric series size does not match graph"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["vertex_id"];
    header.extend(cols.iter().map(|s| s.metric.as_str()));
    w.write_record(&header).map_err(|e| artifact_err(path, e))?;
    for v in 0..g.n() {
        let mut rec = vec![g.vertex_id(v).to_string()];
        rec.extend(cols.iter().map(|s| s.values[v].to_string()));
        w.write_record(&rec).map_err(|e| artifact_err(path, e))?;
    }
    write_atomic(path, &finish_csv(w, path)?)
}

/// Contents of a metrics CSV in file row order.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTable {
    pub vertex_ids: Vec<String>,
    pub columns: BTreeMap<MetricKind, Vec<f64>>,
}

/// Reads a metrics CSV without a graph at hand.
pub fn read_metric_table(path: &Path) -> Result<MetricTable> {
    let mut r = csv::Reader::from_path(path).map_err(|e| artifact_err(path, e))?;
    let header = r.headers().map_err(|e| artifact_err(path, e))?.clone();
    if header.get(0) != Some("vertex_id") {
        return Err(artifact_err(path, "first column must be vertex_id"));
    }
    let kinds: Vec<MetricKind> = header
        .iter()
        .skip(1)
        .map(|h| h.parse().map_err(|e| artifact_err(path, e)))
        .collect::<Result<_>>()?;
    let mut table = MetricTable {
        vertex_ids: Vec::new(),
        columns: kinds.iter().map(|&k| (k, Vec::new())).collect(),
    };
    if table.columns.len() != kinds.len() {
        return Err(artifact_err(path, "duplicate metric column"));
    }
    for rec in r.records() {
        let rec = rec.map_err(|e| artifact_err(path, e))?;
        table.vertex_ids.push(rec.get(0).unwrap_or_default().to_string());
        for (k, field) in kinds.iter().zip(rec.iter().skip(1)) {
            let x: f64 = field
                .parse()
                .map_err(|_| artifact_err(path, format!("bad number {field:?}")))?;
            table.columns.get_mut(k).expect("column present").push(x);
        }
    }
    Ok(table)
}

/// Metric columns of a metrics CSV, values in vertex storage order of `g`.
pub fn read_metrics_csv(g: &UcsGraph, path: &Path) -> Result<BTreeMap<MetricKind, Vec<f64>>> {
    let table = read_metric_table(path)?;
    let mut index = vec![usize::MAX; g.n()];
    for (row, id) in table.vertex_ids.iter().enumerate() {
        let v = g
            .index_of(id)
            .ok_or_else(|| artifact_err(path, format!("unknown vertex {id:?}")))?;
        if index[v] != usize::MAX {
            return Err(artifact_err(path, format!("repeated vertex {id:?}")));
        }
        index[v] = row;
    }
    if index.contains(&usize::MAX) {
        return Err(artifact_err(path, "metrics do not cover every vertex"));
    }
    Ok(table
        .columns
        .into_iter()
        .map(|(k, col)| (k, index.iter().map(|&row| col[row]).collect()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    #[test]
    fn ordering_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = synthetic::grid(3, 3, 10.0).unwrap();
        let o = crate::orderings::random_order(&g, 4);
        let p = dir.path().join("o.csv");
        write_ordering_csv(&g, &o, &p).unwrap();
        let back = read_ordering_csv(&g, &p, Method::Random).unwrap();
        assert_eq!(back.ranks(), o.ranks());
        assert!(!dir.path().join("o.csv.partial").exists());
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("vertex_id,rank\n"));
        assert!(text.lines().skip(1).all(|l| !l.ends_with(",0")));
    }

    #[test]
    fn metrics_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = synthetic::path(6, 1.0).unwrap();
        let o = crate::orderings::original_order(&g);
        let a = crate::metrics::topological_inverse(&g, &o).unwrap();
        let b = crate::metrics::geometric_forward(&g, &o, 2).unwrap();
        let p = dir.path().join("m.csv");
        write_metrics_csv(&g, &[a.clone(), b.clone()], &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("vertex_id,geo_fwd,topo_inv\n"));
        let back = read_metrics_csv(&g, &p).unwrap();
        assert_eq!(back[&MetricKind::TopoInv], a.values);
        assert_eq!(back[&MetricKind::GeoFwd], b.values);
    }

    #[test]
    fn hash_tracks_content() {
        let a = synthetic::grid(3, 3, 10.0).unwrap();
        let b = synthetic::grid(3, 3, 11.0).unwrap();
        assert_eq!(graph_hash(&a), graph_hash(&a.clone()));
        assert_ne!(graph_hash(&a), graph_hash(&b));
        assert_eq!(graph_hash(&a).len(), 64);
    }
}
