#![allow(dead_code)]

use vorder::{GraphBuilder, UcsGraph};
use vorder_testkit::PlainGraph;

/// Library graph with the same vertex order, ids `"0".."n-1"`, and lengths.
pub fn to_ucs(p: &PlainGraph) -> UcsGraph {
    let mut b = GraphBuilder::planar();
    for (i, c) in p.coords.iter().enumerate() {
        b.add_node(i.to_string(), *c).unwrap();
    }
    for &(u, v, l) in &p.edges {
        b.add_edge(u, v, Some(l)).unwrap();
    }
    let g = b.build().unwrap();
    assert_eq!(g.n(), p.n(), "fixture must be connected");
    g
}

/// Dense Laplacian assembled straight from the edge list.
pub fn dense_laplacian(p: &PlainGraph) -> nalgebra::DMatrix<f64> {
    let n = p.n();
    let mut l = nalgebra::DMatrix::zeros(n, n);
    for &(u, v, len) in &p.edges {
        let w = 1.0 / len;
        l[(u, v)] -= w;
        l[(v, u)] -= w;
        l[(u, u)] += w;
        l[(v, v)] += w;
    }
    l
}
