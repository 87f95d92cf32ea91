//! Brute-force reference implementations for testing `vorder`.
//!
//! Everything here works on plain vectors and deliberately avoids spatial
//! indexes, pruning, priority queues and the library itself, so that
//! agreement with the library is evidence rather than tautology.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Planar graph as plain data: coordinates in meters, undirected edges
/// `(u, v, length)` with `u < v`.
#[derive(Debug, Clone)]
pub struct PlainGraph {
    pub coords: Vec<[f64; 2]>,
    pub edges: Vec<(usize, usize, f64)>,
}

impl PlainGraph {
    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn neighbor_lists(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n()];
        for &(u, v, _) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }
}

/// Connected random planar graph: points uniform in a `side`-meter square,
/// a random spanning tree joining each vertex to one of its nearer
/// predecessors, then `extra` additional distinct edges. Lengths are
/// Euclidean distances.
pub fn random_connected_graph(n: usize, extra: usize, side: f64, seed: u64) -> PlainGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.random_range(0.0..side), rng.random_range(0.0..side)])
        .collect();
    let dist = |a: usize, b: usize| {
        let dx = coords[a][0] - coords[b][0];
        let dy = coords[a][1] - coords[b][1];
        (dx * dx + dy * dy).sqrt()
    };
    let mut pairs = std::collections::BTreeSet::new();
    for v in 1..n {
        // pick among the three closest earlier vertices to stay street-like
        let mut earlier: Vec<usize> = (0..v).collect();
        earlier.sort_by(|&a, &b| dist(v, a).total_cmp(&dist(v, b)).then(a.cmp(&b)));
        let u = earlier[rng.random_range(0..earlier.len().min(3))];
        pairs.insert((u.min(v), u.max(v)));
    }
    let mut attempts = 0;
    while pairs.len() < n - 1 + extra && attempts < 100 * (extra + 1) && n > 2 {
        attempts += 1;
        let a = rng.random_range(0..n);
        let mut near: Vec<usize> = (0..n).filter(|&b| b != a).collect();
        near.sort_by(|&x, &y| dist(a, x).total_cmp(&dist(a, y)).then(x.cmp(&y)));
        let b = near[rng.random_range(0..near.len().min(6))];
        pairs.insert((a.min(b), a.max(b)));
    }
    let edges = pairs.into_iter().map(|(u, v)| (u, v, dist(u, v))).collect();
    PlainGraph { coords, edges }
}

/// All-pairs hop counts by repeated relaxation (Bellman–Ford style);
/// `u32::MAX` marks unreachable pairs.
pub fn hop_matrix(g: &PlainGraph) -> Vec<Vec<u32>> {
    let n = g.n();
    let mut d = vec![vec![u32::MAX; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for row in d.iter_mut() {
        loop {
            let mut changed = false;
            for &(u, v, _) in &g.edges {
                for (a, b) in [(u, v), (v, u)] {
                    if row[a] != u32::MAX && row[a] + 1 < row[b] {
                        row[b] = row[a] + 1;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }
    d
}

/// All-pairs shortest path lengths by Floyd–Warshall.
pub fn distance_matrix(g: &PlainGraph) -> Vec<Vec<f64>> {
    let n = g.n();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(u, v, l) in &g.edges {
        d[u][v] = d[u][v].min(l);
        d[v][u] = d[v][u].min(l);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Ranks of a window of nominal size `m` around rank `k`: `⌊m/2⌋` before
/// and `⌈m/2⌉ − 1` after, either slid back inside `0..n` (`shift = true`)
/// or clipped.
pub fn window_ranks(n: usize, k: usize, m: usize, shift: bool) -> Vec<usize> {
    let mut start = k as i64 - (m / 2) as i64;
    let mut end = k as i64 + m.div_ceil(2) as i64 - 1;
    if shift {
        if start < 0 {
            end -= start;
            start = 0;
        }
        if end > n as i64 - 1 {
            start -= end - (n as i64 - 1);
            end = n as i64 - 1;
        }
        start = start.max(0);
    }
    (start..=end)
        .filter(|&r| r >= 0 && r < n as i64)
        .map(|r| r as usize)
        .collect()
}

fn sq(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// The `m` points nearest to `center`: `center` first, then the others by
/// full sort on (squared distance, index).
pub fn knn(coords: &[[f64; 2]], center: usize, m: usize) -> Vec<usize> {
    let mut others: Vec<usize> = (0..coords.len()).filter(|&v| v != center).collect();
    others.sort_by(|&a, &b| {
        sq(coords[a], coords[center])
            .total_cmp(&sq(coords[b], coords[center]))
            .then(a.cmp(&b))
    });
    let mut out = vec![center];
    out.extend(others.into_iter().take(m - 1));
    out
}

pub fn bbox_diagonal(points: &[[f64; 2]]) -> f64 {
    let xs = points.iter().map(|p| p[0]);
    let ys = points.iter().map(|p| p[1]);
    let w = xs.clone().fold(f64::NEG_INFINITY, f64::max) - xs.fold(f64::INFINITY, f64::min);
    let h = ys.clone().fold(f64::NEG_INFINITY, f64::max) - ys.fold(f64::INFINITY, f64::min);
    (w * w + h * h).sqrt()
}

/// `sequence[k]` = vertex at rank `k`.
pub fn sequence_of(ranks: &[usize]) -> Vec<usize> {
    let mut seq = vec![0; ranks.len()];
    for (v, &r) in ranks.iter().enumerate() {
        seq[r] = v;
    }
    seq
}

pub fn geometric_forward(g: &PlainGraph, ranks: &[usize], m: usize) -> Vec<f64> {
    let seq = sequence_of(ranks);
    (0..g.n())
        .map(|v| {
            let window: Vec<[f64; 2]> = window_ranks(g.n(), ranks[v], m, true)
                .into_iter()
                .map(|r| g.coords[seq[r]])
                .collect();
            let near: Vec<[f64; 2]> = knn(&g.coords, v, m).into_iter().map(|u| g.coords[u]).collect();
            bbox_diagonal(&window) / bbox_diagonal(&near).max(1.0)
        })
        .collect()
}

/// Balls from the all-pairs matrix (`graph = true`) or from plain
/// Euclidean distance.
pub fn geometric_inverse(g: &PlainGraph, ranks: &[usize], r: f64, graph: bool) -> Vec<f64> {
    let d = if graph { Some(distance_matrix(g)) } else { None };
    (0..g.n())
        .map(|v| {
            let ball: Vec<usize> = (0..g.n())
                .filter(|&u| match &d {
                    Some(d) => d[v][u] <= r,
                    None => sq(g.coords[u], g.coords[v]).sqrt() <= r,
                })
                .collect();
            let lo = ball.iter().map(|&u| ranks[u]).min().unwrap();
            let hi = ball.iter().map(|&u| ranks[u]).max().unwrap();
            (hi - lo) as f64 / ball.len() as f64
        })
        .collect()
}

/// Degree rounded up to even; `deg/2` rank neighbors on each side,
/// clipped at the ends.
pub fn topological_forward(g: &PlainGraph, ranks: &[usize]) -> Vec<f64> {
    let hops = hop_matrix(g);
    let adj = g.neighbor_lists();
    let seq = sequence_of(ranks);
    let n = g.n() as i64;
    (0..g.n())
        .map(|v| {
            let deg = adj[v].len();
            let half = (deg.div_ceil(2)) as i64;
            let k = ranks[v] as i64;
            let mut best = 0;
            for r in (k - half)..=(k + half) {
                if r >= 0 && r < n && r != k {
                    best = best.max(hops[v][seq[r as usize]]);
                }
            }
            best as f64
        })
        .collect()
}

pub fn topological_inverse(g: &PlainGraph, ranks: &[usize]) -> Vec<f64> {
    let adj = g.neighbor_lists();
    (0..g.n())
        .map(|v| {
            if adj[v].is_empty() {
                return 0.0;
            }
            let gap = adj[v]
                .iter()
                .map(|&u| (ranks[u] as i64 - ranks[v] as i64).abs())
                .max()
                .unwrap();
            gap as f64 / adj[v].len() as f64
        })
        .collect()
}

/// Hyndman–Fan type 7 sample quantile, 1-based formulation:
/// `h = (n − 1)p + 1`, `Q = x₍⌊h⌋₎ + (h − ⌊h⌋)(x₍⌊h⌋+1₎ − x₍⌊h⌋₎)`.
pub fn quantile_type7(values: &[f64], p: f64) -> f64 {
    let mut x = values.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len();
    let h = (n as f64 - 1.0) * p + 1.0;
    let fl = h.floor() as usize;
    if fl >= n {
        return x[n - 1];
    }
    x[fl - 1] + (h - fl as f64) * (x[fl] - x[fl - 1])
}

/// Uniform random ranks via sort-by-random-key.
pub fn random_ranks(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keys: Vec<u64> = (0..n).map(|_| rng.random()).collect();
    let mut seq: Vec<usize> = (0..n).collect();
    seq.sort_by_key(|&v| (keys[v], v));
    let mut ranks = vec![0; n];
    for (r, &v) in seq.iter().enumerate() {
        ranks[v] = r;
    }
    ranks
}
