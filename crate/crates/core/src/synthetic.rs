//! Deterministic planar test graphs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::graph::{GraphBuilder, UcsGraph};

use crate::orderings::random_permutation;

/// Path `0 – 1 – … – n−1` along the x axis.
pub fn path(n: usize, spacing_m: f64) -> Result<UcsGraph> {
    let mut b = GraphBuilder::planar();
    for i in 0..n {
        b.add_node(i.to_string(), [i as f64 * spacing_m, 0.0])?;
    }
    for i in 1..n {
        b.add_edge(i - 1, i, Some(spacing_m))?;
    }
    b.build()
}

/// `rows × cols` lattice, vertices stored row-major with ids `0..rows·cols`.
pub fn grid(rows: usize, cols: usize, spacing_m: f64) -> Result<UcsGraph> {
    let mut b = GraphBuilder::planar();
    for r in 0..rows {
        for c in 0..cols {
            b.add_node((r * cols + c).to_string(), [c as f64 * spacing_m, r as f64 * spacing_m])?;
        }
    }
    for (u, v) in lattice_edges(rows, cols) {
        b.add_edge(u, v, Some(spacing_m))?;
    }
    b.build()
}

fn lattice_edges(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                e.push((v, v + 1));
            }
            if r + 1 < rows {
                e.push((v, v + cols));
            }
        }
    }
    e
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Street-like network: a jittered lattice (about 100 m blocks) thinned to a
/// random spanning tree plus `keep_fraction` of the remaining streets, with
/// vertices stored in a shuffled order. Edge lengths are Euclidean.
pub fn street_like(rows: usize, cols: usize, keep_fraction: f64, seed: u64) -> Result<UcsGraph> {
    let spacing = 100.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rows * cols;
    let pos: Vec<[f64; 2]> = (0..n)
        .map(|v| {
            let (r, c) = (v / cols, v % cols);
            [
                c as f64 * spacing + rng.random_range(-25.0..25.0),
                r as f64 * spacing + rng.random_range(-25.0..25.0),
            ]
        })
        .collect();

    let edges = lattice_edges(rows, cols);
    let shuffled = random_permutation(edges.len(), rng.random()).sequence().to_vec();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut chosen = vec![false; edges.len()];
    for &e in &shuffled {
        let (u, v) = edges[e];
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            parent[ru] = rv;
            chosen[e] = true;
        }
    }
    for c in chosen.iter_mut() {
        if !*c && rng.random::<f64>() < keep_fraction {
            *c = true;
        }
    }

    // file order is unrelated to geometry, as in real extracts
    let order = random_permutation(n, rng.random()).sequence().to_vec();
    let mut slot = vec![0; n];
    let mut b = GraphBuilder::planar();
    for (i, &v) in order.iter().enumerate() {
        slot[v] = i;
        b.add_node(format!("s{v}"), pos[v])?;
    }
    for (e, &(u, v)) in edges.iter().enumerate() {
        if chosen[e] {
            b.add_edge(slot[u], slot[v], None)?;
        }
    }
    b.build()
}
