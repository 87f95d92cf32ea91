use std::cmp::Ordering as CmpOrdering;
use std::collections::{BinaryHeap, VecDeque};

use super::UcsGraph;
use crate::error::{Error, Result};

/// Reusable breadth-first search state. Visit marks are stamped with an
/// epoch so repeated searches do not clear an `n`-sized array.
#[derive(Debug, Clone)]
pub struct BfsScratch {
    stamp: Vec<u32>,
    hops: Vec<u32>,
    epoch: u32,
    queue: VecDeque<usize>,
}

impl BfsScratch {
    pub fn new(n: usize) -> Self {
        BfsScratch {
            stamp: vec![0; n],
            hops: vec![0; n],
            epoch: 0,
            queue: VecDeque::new(),
        }
    }

    fn next_epoch(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
    }

    /// Hop counts from `source` to each of `targets`, in target order.
    /// Stops as soon as every target has been reached.
    pub fn hops(&mut self, g: &UcsGraph, source: usize, targets: &[usize]) -> Vec<u32> {
        self.next_epoch();
        let epoch = self.epoch;
        let mut pending: Vec<usize> = targets.to_vec();
        pending.sort_unstable();
        pending.dedup();
        let mut remaining = pending.len();
        let is_target = |v: usize| pending.binary_search(&v).is_ok();

        self.queue.clear();
        self.stamp[source] = epoch;
        self.hops[source] = 0;
        if is_target(source) {
            remaining -= 1;
        }
        self.queue.push_back(source);
        while remaining > 0 {
            let Some(u) = self.queue.pop_front() else {
                break;
            };
            let next = self.hops[u] + 1;
            for &(w, _) in g.neighbors(u) {
                if self.stamp[w] != epoch {
                    self.stamp[w] = epoch;
                    self.hops[w] = next;
                    if is_target(w) {
                        remaining -= 1;
                    }
                    self.queue.push_back(w);
                }
            }
        }
        targets
            .iter()
            .map(|&t| {
                debug_assert_eq!(self.stamp[t], epoch, "target unreachable");
                self.hops[t]
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct HeapEntry {
    dist: f64,
    vertex: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == CmpOrdering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<CmpOrdering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> CmpOrdering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

/// Reusable Dijkstra state for radius-bounded searches.
#[derive(Debug, Clone)]
pub struct DijkstraScratch {
    stamp: Vec<u32>,
    dist: Vec<f64>,
    epoch: u32,
    heap: BinaryHeap<HeapEntry>,
}

impl DijkstraScratch {
    pub fn new(n: usize) -> Self {
        DijkstraScratch {
            stamp: vec![0; n],
            dist: vec![f64::INFINITY; n],
            epoch: 0,
            heap: BinaryHeap::new(),
        }
    }

    /// Vertices whose length-weighted distance from `center` is at most
    /// `radius`, sorted by index.
    pub fn ball(&mut self, g: &UcsGraph, center: usize, radius: f64) -> Vec<usize> {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        let epoch = self.epoch;
        self.heap.clear();
        self.stamp[center] = epoch;
        self.dist[center] = 0.0;
        self.heap.push(HeapEntry {
            dist: 0.0,
            vertex: center,
        });
        let mut out = Vec::new();
        while let Some(HeapEntry { dist, vertex }) = self.heap.pop() {
            if dist > self.dist[vertex] {
                continue;
            }
            out.push(vertex);
            for &(w, l) in g.neighbors(vertex) {
                let nd = dist + l;
                if nd > radius {
                    continue;
                }
                if self.stamp[w] != epoch || nd < self.dist[w] {
                    self.stamp[w] = epoch;
                    self.dist[w] = nd;
                    self.heap.push(HeapEntry { dist: nd, vertex: w });
                }
            }
        }
        out.sort_unstable();
        out
    }
}

#[inline]
pub(crate) fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

impl UcsGraph {
    /// Unweighted shortest-path edge counts from `source` to each target.
    pub fn shortest_hops(&self, source: usize, targets: &[usize]) -> Result<Vec<u32>> {
        self.check_vertex(source)?;
        for &t in targets {
            self.check_vertex(t)?;
        }
        Ok(BfsScratch::new(self.n()).hops(self, source, targets))
    }

    /// Vertices within length-weighted graph distance `radius` (meters) of
    /// `center`, sorted by index. Always contains `center`.
    pub fn graph_ball(&self, center: usize, radius: f64) -> Result<Vec<usize>> {
        self.check_vertex(center)?;
        check_radius(radius)?;
        Ok(DijkstraScratch::new(self.n()).ball(self, center, radius))
    }

    /// Vertices within planar Euclidean distance `radius` (meters) of
    /// `center`, sorted by index.
    pub fn euclidean_ball(&self, center: usize, radius: f64) -> Result<Vec<usize>> {
        self.check_vertex(center)?;
        check_radius(radius)?;
        Ok(self.euclidean_ball_unchecked(center, radius))
    }

    pub(crate) fn euclidean_ball_unchecked(&self, center: usize, radius: f64) -> Vec<usize> {
        let c = self.coords[center];
        // The tree query uses squared distances; widen it slightly and apply
        // the exact test below.
        let query = radius * radius * (1.0 + 1e-9) + f64::MIN_POSITIVE;
        let mut out: Vec<usize> = self
            .index
            .locate_within_distance(c, query)
            .map(|p| p.data)
            .filter(|&v| dist2(self.coords[v], c).sqrt() <= radius)
            .collect();
        if !out.contains(&center) {
            out.push(center);
        }
        out.sort_unstable();
        out
    }

    /// The `m` vertices nearest to `center` in the plane, `center` first,
    /// then by ascending (distance, index).
    pub fn knn_spatial(&self, center: usize, m: usize) -> Result<Vec<usize>> {
        self.check_vertex(center)?;
        if m == 0 || m > self.n() {
            return Err(Error::InvalidParameter(format!(
                "k-NN count {m} outside 1..={}",
                self.n()
            )));
        }
        Ok(self.knn_unchecked(center, m))
    }

    pub(crate) fn knn_unchecked(&self, center: usize, m: usize) -> Vec<usize> {
        let c = self.coords[center];
        let mut cands: Vec<(f64, usize)> = Vec::with_capacity(m + 4);
        let mut cutoff = f64::INFINITY;
        for (p, _) in self.index.nearest_neighbor_iter_with_distance_2(c) {
            let v = p.data;
            if v == center {
                continue;
            }
            let d = dist2(self.coords[v], c);
            if cands.len() >= m - 1 {
                if cutoff == f64::INFINITY {
                    cutoff = cands.iter().map(|x| x.0).fold(f64::NEG_INFINITY, f64::max);
                }
                if d > cutoff {
                    break;
                }
            }
            cands.push((d, v));
        }
        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        cands.truncate(m - 1);
        let mut out = Vec::with_capacity(m);
        out.push(center);
        out.extend(cands.into_iter().map(|(_, v)| v));
        out
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if radius >= 0.0 && !radius.is_nan() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("negative radius {radius}")))
    }
}

#[cfg(test)]
mod tests {
    use crate::graph::GraphBuilder;

    use super::*;

    fn path(n: usize, spacing: f64) -> UcsGraph {
        let mut b = GraphBuilder::planar();
        for i in 0..n {
            b.add_node(format!("p{i}"), [i as f64 * spacing, 0.0]).unwrap();
        }
        for i in 1..n {
            b.add_edge(i - 1, i, None).unwrap();
        }
        b.build().unwrap()
    }

    fn grid(side: usize, spacing: f64) -> UcsGraph {
        let mut b = GraphBuilder::planar();
        for r in 0..side {
            for c in 0..side {
                b.add_node(format!("{r}_{c}"), [c as f64 * spacing, r as f64 * spacing])
                    .unwrap();
            }
        }
        for r in 0..side {
            for c in 0..side {
                let v = r * side + c;
                if c + 1 < side {
                    b.add_edge(v, v + 1, None).unwrap();
                }
                if r + 1 < side {
                    b.add_edge(v, v + side, None).unwrap();
                }
            }
        }
        b.build().unwrap()
    }

    #[test]
    fn hops_on_path_and_grid() {
        let p = path(3, 1.0);
        assert_eq!(p.shortest_hops(0, &[2]).unwrap(), vec![2]);
        assert_eq!(p.shortest_hops(1, &[1]).unwrap(), vec![0]);
        let g = grid(4, 1.0);
        assert_eq!(g.shortest_hops(0, &[15, 0, 5]).unwrap(), vec![6, 0, 2]);
    }

    #[test]
    fn graph_ball_radius_cases() {
        let p = path(11, 100.0);
        assert_eq!(p.graph_ball(5, 0.0).unwrap(), vec![5]);
        assert_eq!(p.graph_ball(5, 250.0).unwrap(), vec![3, 4, 5, 6, 7]);
        assert_eq!(p.graph_ball(0, 1000.0).unwrap().len(), 11);
        assert!(p.graph_ball(0, -1.0).is_err());
    }

    #[test]
    fn euclidean_ball_unit_square() {
        let mut b = GraphBuilder::planar();
        for (i, c) in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]].iter().enumerate() {
            b.add_node(i.to_string(), *c).unwrap();
        }
        for (u, v) in [(0, 1), (1, 3), (3, 2), (2, 0)] {
            b.add_edge(u, v, None).unwrap();
        }
        let g = b.build().unwrap();
        assert_eq!(g.euclidean_ball(0, 0.0).unwrap(), vec![0]);
        assert_eq!(g.euclidean_ball(0, 1.0).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn knn_edges_of_range() {
        let g = grid(3, 1.0);
        assert_eq!(g.knn_spatial(4, 1).unwrap(), vec![4]);
        let mut all = g.knn_spatial(4, 9).unwrap();
        all.sort_unstable();
        assert_eq!(all, (0..9).collect::<Vec<_>>());
        // four tied at distance 1, ascending index
        assert_eq!(g.knn_spatial(4, 3).unwrap(), vec![4, 1, 3]);
        assert!(g.knn_spatial(4, 0).is_err());
        assert!(g.knn_spatial(4, 10).is_err());
    }
}
