//! Undirected connected spatial (UCS) graphs.
//!
//! A [`UcsGraph`] stores vertices with planar coordinates in meters and
//! undirected weighted edges whose weights are street-segment lengths in
//! meters. Graphs are built through [`GraphBuilder`], which cleans the raw
//! input (self-loops, duplicate edges), keeps the largest connected
//! component and projects geographic coordinates onto a local plane.
//!
//! Vertex storage order is the order in which nodes appeared in the source
//! (file position), which is what [`crate::orderings::original_order`]
//! reports.

mod io;
mod laplacian;
mod query;

use std::collections::HashMap;

use rstar::primitives::GeomWithData;
use rstar::RTree;

use crate::error::{Error, Result};

pub use io::{csv_pair_bytes, load_graph, write_csv_pair, GraphFormat};
pub use laplacian::{build_laplacian, laplacian_from_weights, CsrMatrix};
pub(crate) use query::dist2;
pub use query::{BfsScratch, DijkstraScratch};

/// Mean Earth radius in meters (IUGG).
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Great-circle distance in meters between two `(lat, lon)` points given in
/// degrees.
pub fn haversine_m(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (lat1, lon1) = (a[0].to_radians(), a[1].to_radians());
    let (lat2, lon2) = (b[0].to_radians(), b[1].to_radians());
    let dlat = lat2 - lat1;
    let dlon = lon2 - lon1;
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Local equirectangular projection about a reference point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalProjection {
    pub lat0: f64,
    pub lon0: f64,
}

impl LocalProjection {
    pub fn project(&self, lat_lon: [f64; 2]) -> [f64; 2] {
        let cos0 = self.lat0.to_radians().cos();
        [
            EARTH_RADIUS_M * (lat_lon[1] - self.lon0).to_radians() * cos0,
            EARTH_RADIUS_M * (lat_lon[0] - self.lat0).to_radians(),
        ]
    }

    pub fn unproject(&self, xy: [f64; 2]) -> [f64; 2] {
        let cos0 = self.lat0.to_radians().cos();
        [
            self.lat0 + (xy[1] / EARTH_RADIUS_M).to_degrees(),
            self.lon0 + (xy[0] / (EARTH_RADIUS_M * cos0)).to_degrees(),
        ]
    }
}

pub(crate) type IndexedPoint = GeomWithData<[f64; 2], usize>;

/// An undirected connected spatial graph.
///
/// Immutable after construction. All queries take `&self`.
#[derive(Debug, Clone)]
pub struct UcsGraph {
    vertex_ids: Vec<String>,
    coords: Vec<[f64; 2]>,
    raw_coords: Vec<[f64; 2]>,
    adjacency: Vec<Vec<(usize, f64)>>,
    projection: LocalProjection,
    index: RTree<IndexedPoint>,
}

impl UcsGraph {
    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn vertex_ids(&self) -> &[String] {
        &self.vertex_ids
    }

    pub fn vertex_id(&self, v: usize) -> &str {
        &self.vertex_ids[v]
    }

    /// Planar coordinates in meters.
    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    /// Ingested `(lat, lon)` in degrees.
    pub fn raw_coords(&self) -> &[[f64; 2]] {
        &self.raw_coords
    }

    pub fn projection(&self) -> LocalProjection {
        self.projection
    }

    /// Neighbors of `v` with edge lengths in meters, sorted by neighbor index.
    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    pub fn adjacency(&self) -> &[Vec<(usize, f64)>] {
        &self.adjacency
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// Each undirected edge once, as `(u, v, length)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, nbrs)| nbrs.iter().filter(move |&&(v, _)| u < v).map(move |&(v, l)| (u, v, l)))
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.vertex_ids.iter().position(|x| x == id)
    }

    pub(crate) fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.n() {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange { index: v, n: self.n() })
        }
    }

    /// Returns a copy of the graph with every edge length multiplied by
    /// `factor`.
    pub fn with_scaled_lengths(&self, factor: f64) -> UcsGraph {
        let mut g = self.clone();
        for nbrs in &mut g.adjacency {
            for (_, l) in nbrs.iter_mut() {
                *l *= factor;
            }
        }
        g
    }

    /// Returns a copy with planar coordinates mapped by `f`. Edge lengths
    /// and raw coordinates are left untouched.
    pub fn with_mapped_coords(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> UcsGraph {
        let coords: Vec<[f64; 2]> = self.coords.iter().map(|&c| f(c)).collect();
        let index = build_index(&coords);
        UcsGraph {
            coords,
            index,
            ..self.clone()
        }
    }

    /// Relabels storage: new vertex `i` is old vertex `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<UcsGraph> {
        let n = self.n();
        if perm.len() != n {
            return Err(Error::InvalidParameter(format!(
                "permutation has length {} for n = {n}",
                perm.len()
            )));
        }
        let mut new_of_old = vec![usize::MAX; n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= n || new_of_old[old] != usize::MAX {
                return Err(Error::InvalidParameter("not a permutation".into()));
            }
            new_of_old[old] = new;
        }
        let adjacency = perm
            .iter()
            .map(|&old| {
                let mut nbrs: Vec<(usize, f64)> =
                    self.adjacency[old].iter().map(|&(w, l)| (new_of_old[w], l)).collect();
                nbrs.sort_by_key(|&(w, _)| w);
                nbrs
            })
            .collect();
        let coords: Vec<[f64; 2]> = perm.iter().map(|&o| self.coords[o]).collect();
        let index = build_index(&coords);
        Ok(UcsGraph {
            vertex_ids: perm.iter().map(|&o| self.vertex_ids[o].clone()).collect(),
            raw_coords: perm.iter().map(|&o| self.raw_coords[o]).collect(),
            coords,
            adjacency,
            projection: self.projection,
            index,
        })
    }
}

fn build_index(coords: &[[f64; 2]]) -> RTree<IndexedPoint> {
    RTree::bulk_load(
        coords
            .iter()
            .enumerate()
            .map(|(i, &c)| GeomWithData::new(c, i))
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum NodeCoords {
    Geographic,
    Planar,
}

/// Collects raw nodes and edges and produces a cleaned [`UcsGraph`].
///
/// Cleaning: self-loops are dropped, parallel edges collapse to the shortest
/// length, and only the largest connected component is kept (ties go to the
/// component holding the earliest node). Missing edge lengths are filled
/// with the haversine distance for geographic nodes and the Euclidean
/// distance for planar nodes.
#[derive(Debug)]
pub struct GraphBuilder {
    kind: NodeCoords,
    ids: Vec<String>,
    positions: Vec<[f64; 2]>,
    lookup: HashMap<String, usize>,
    edges: Vec<(usize, usize, Option<f64>)>,
}

impl GraphBuilder {
    /// Nodes are given as `(lat, lon)` in degrees.
    pub fn geographic() -> Self {
        Self::new(NodeCoords::Geographic)
    }

    /// Nodes are given as planar `(x, y)` in meters. Raw coordinates are
    /// synthesized by inverse projection about `(0°, 0°)`.
    pub fn planar() -> Self {
        Self::new(NodeCoords::Planar)
    }

    fn new(kind: NodeCoords) -> Self {
        GraphBuilder {
            kind,
            ids: Vec::new(),
            positions: Vec::new(),
            lookup: HashMap::new(),
            edges: Vec::new(),
        }
    }

    /// Adds a node and returns its builder index. A repeated id keeps the
    /// first position.
    pub fn add_node(&mut self, id: impl Into<String>, position: [f64; 2]) -> Result<usize> {
        let id = id.into();
        if !position.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFiniteCoordinate { id });
        }
        if let Some(&i) = self.lookup.get(&id) {
            return Ok(i);
        }
        let i = self.ids.len();
        self.lookup.insert(id.clone(), i);
        self.ids.push(id);
        self.positions.push(position);
        Ok(i)
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn add_edge(&mut self, u: usize, v: usize, length: Option<f64>) -> Result<()> {
        let n = self.ids.len();
        for x in [u, v] {
            if x >= n {
                return Err(Error::VertexOutOfRange { index: x, n });
            }
        }
        self.edges.push((u, v, length));
        Ok(())
    }

    pub fn add_edge_by_id(&mut self, u: &str, v: &str, length: Option<f64>) -> Result<()> {
        let missing = |id: &str| Error::InvalidParameter(format!("edge references unknown node {id}"));
        let ui = self.node_index(u).ok_or_else(|| missing(u))?;
        let vi = self.node_index(v).ok_or_else(|| missing(v))?;
        self.add_edge(ui, vi, length)
    }

    pub fn build(self) -> Result<UcsGraph> {
        let n = self.ids.len();
        if n == 0 {
            return Err(Error::EmptyGraph);
        }

        let mut best: HashMap<(usize, usize), f64> = HashMap::new();
        for &(u, v, length) in &self.edges {
            if u == v {
                continue;
            }
            let l = match length {
                Some(l) => l,
                None => match self.kind {
                    NodeCoords::Geographic => haversine_m(self.positions[u], self.positions[v]),
                    NodeCoords::Planar => {
                        let (a, b) = (self.positions[u], self.positions[v]);
                        (a[0] - b[0]).hypot(a[1] - b[1])
                    }
                },
            };
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidEdgeLength {
                    u: self.ids[u].clone(),
                    v: self.ids[v].clone(),
                    length: l,
                });
            }
            let key = (u.min(v), u.max(v));
            best.entry(key).and_modify(|cur| *cur = cur.min(l)).or_insert(l);
        }

        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (&(u, v), &l) in &best {
            adjacency[u].push((v, l));
            adjacency[v].push((u, l));
        }

        let keep = largest_component(&adjacency);
        let mut new_of_old = vec![usize::MAX; n];
        for (new, &old) in keep.iter().enumerate() {
            new_of_old[old] = new;
        }

        let vertex_ids: Vec<String> = keep.iter().map(|&o| self.ids[o].clone()).collect();
        let kept_adj: Vec<Vec<(usize, f64)>> = keep
            .iter()
            .map(|&o| {
                let mut nbrs: Vec<(usize, f64)> = adjacency[o].iter().map(|&(w, l)| (new_of_old[w], l)).collect();
                nbrs.sort_by_key(|&(w, _)| w);
                nbrs
            })
            .collect();

        let (projection, raw_coords, coords) = match self.kind {
            NodeCoords::Geographic => {
                let raw: Vec<[f64; 2]> = keep.iter().map(|&o| self.positions[o]).collect();
                let m = raw.len() as f64;
                let projection = LocalProjection {
                    lat0: raw.iter().map(|p| p[0]).sum::<f64>() / m,
                    lon0: raw.iter().map(|p| p[1]).sum::<f64>() / m,
                };
                let coords = raw.iter().map(|&p| projection.project(p)).collect();
                (projection, raw, coords)
            }
            NodeCoords::Planar => {
                let projection = LocalProjection { lat0: 0.0, lon0: 0.0 };
                let coords: Vec<[f64; 2]> = keep.iter().map(|&o| self.positions[o]).collect();
                let raw = coords.iter().map(|&c| projection.unproject(c)).collect();
                (projection, raw, coords)
            }
        };

        let index = build_index(&coords);
        Ok(UcsGraph {
            vertex_ids,
            coords,
            raw_coords,
            adjacency: kept_adj,
            projection,
            index,
        })
    }
}

/// Vertices of the largest connected component in ascending index order.
fn largest_component(adjacency: &[Vec<(usize, f64)>]) -> Vec<usize> {
    let n = adjacency.len();
    let mut comp = vec![usize::MAX; n];
    let mut best: (usize, usize) = (0, 0); // (size, label)
    let mut label = 0;
    let mut stack = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let mut size = 0;
        comp[s] = label;
        stack.push(s);
        while let Some(u) = stack.pop() {
            size += 1;
            for &(w, _) in &adjacency[u] {
                if comp[w] == usize::MAX {
                    comp[w] = label;
                    stack.push(w);
                }
            }
        }
        if size > best.0 {
            best = (size, label);
        }
        label += 1;
    }
    (0..n).filter(|&v| comp[v] == best.1).collect()
}

/// Whether every vertex is reachable from vertex 0 in a symmetric adjacency
/// structure.
pub(crate) fn is_connected<T>(adjacency: &[Vec<(usize, T)>]) -> bool {
    let n = adjacency.len();
    if n == 0 {
        return false;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for (w, _) in &adjacency[u] {
            if !seen[*w] {
                seen[*w] = true;
                count += 1;
                stack.push(*w);
            }
        }
    }
    count == n
}
