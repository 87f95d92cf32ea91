use crate::eigen::{smallest_nonconstant_eigenpair, EigenOptions, EigenPair, Solver};
use crate::error::{Error, Result};
use crate::graph::{build_laplacian, is_connected, CsrMatrix, UcsGraph};
use crate::ordering::{Embedding1D, Method, Ordering};

#[derive(Debug, Clone)]
pub struct FiedlerResult {
    pub ordering: Ordering,
    pub embedding: Embedding1D,
    pub eigenvalue: f64,
    pub residual: f64,
    pub laplacian_inf_norm: f64,
    pub solver: Solver,
}

/// Spectral ordering: vertices sorted by their entry in the Fiedler vector
/// of the length-weighted Laplacian.
pub fn fiedler_order(g: &UcsGraph) -> Result<(Ordering, Embedding1D)> {
    let r = fiedler_order_with(g, &EigenOptions::default())?;
    Ok((r.ordering, r.embedding))
}

pub fn fiedler_order_with(g: &UcsGraph, opts: &EigenOptions) -> Result<FiedlerResult> {
    if g.n() < 2 {
        return Err(Error::InvalidParameter(format!(
            "Fiedler ordering needs n >= 2, got {}",
            g.n()
        )));
    }
    if !is_connected(g.adjacency()) {
        return Err(Error::Disconnected);
    }
    let lap = build_laplacian(g);
    let pair = oriented_fiedler(&lap, opts)?;
    let embedding = Embedding1D::new(pair.vector)?;
    Ok(FiedlerResult {
        ordering: embedding.ordering(Method::Fiedler),
        embedding,
        eigenvalue: pair.value,
        residual: pair.residual,
        laplacian_inf_norm: lap.inf_norm(),
        solver: pair.solver,
    })
}

/// Fiedler pair of a connected Laplacian with a deterministic sign: the
/// first entry (by index) that is not numerically zero is negative.
pub fn oriented_fiedler(lap: &CsrMatrix, opts: &EigenOptions) -> Result<EigenPair> {
    let mut pair = smallest_nonconstant_eigenpair(lap, opts)?;
    let bound = opts.accept * lap.inf_norm();
    if pair.residual.is_nan() || pair.residual > bound {
        return Err(Error::EigenNonConvergence {
            residual: pair.residual,
            matvecs: pair.matvecs,
        });
    }
    let scale = pair.vector.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(&first) = pair.vector.iter().find(|v| v.abs() > 1e-10 * scale) {
        if first > 0.0 {
            for v in pair.vector.iter_mut() {
                *v = -*v;
            }
        }
    }
    Ok(pair)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;

    fn path(n: usize, length: f64) -> UcsGraph {
        let mut b = GraphBuilder::planar();
        for i in 0..n {
            b.add_node(format!("{i}"), [i as f64 * length, 0.0]).unwrap();
        }
        for i in 1..n {
            b.add_edge(i - 1, i, Some(length)).unwrap();
        }
        b.build().unwrap()
    }

    fn is_path_order(o: &Ordering) -> bool {
        let fwd = (0..o.n()).all(|v| o.rank(v) == v);
        let rev = (0..o.n()).all(|v| o.rank(v) == o.n() - 1 - v);
        fwd || rev
    }

    #[test]
    fn p3_vector_and_value() {
        let r = fiedler_order_with(&path(3, 1.0), &EigenOptions::default()).unwrap();
        assert!((r.eigenvalue - 1.0).abs() < 1e-12);
        let s = 1.0 / 2f64.sqrt();
        // sign convention: first nonzero entry negative
        for (got, want) in r.embedding.values.iter().zip([-s, 0.0, s]) {
            assert!((got - want).abs() < 1e-10, "{:?}", r.embedding.values);
        }
        assert_eq!(r.ordering.ranks(), &[0, 1, 2]);
    }

    #[test]
    fn p50_monotone() {
        let (o, _) = fiedler_order(&path(50, 1.0)).unwrap();
        assert!(is_path_order(&o));
    }

    #[test]
    fn uniform_length_scaling_keeps_ranks() {
        let mut b = GraphBuilder::planar();
        let pts = [[0.0, 0.0], [3.0, 1.0], [5.0, 4.0], [1.0, 6.0], [7.0, 7.0], [2.0, 9.0]];
        for (i, p) in pts.iter().enumerate() {
            b.add_node(i.to_string(), *p).unwrap();
        }
        for (u, v) in [(0, 1), (1, 2), (2, 4), (1, 3), (3, 5), (4, 5), (0, 3)] {
            b.add_edge(u, v, None).unwrap();
        }
        let g = b.build().unwrap();
        let (a, _) = fiedler_order(&g).unwrap();
        let (c, _) = fiedler_order(&g.with_scaled_lengths(1000.0)).unwrap();
        assert_eq!(a.ranks(), c.ranks());
        let (t, _) = fiedler_order(&g.with_mapped_coords(|p| [3.0 * p[0] + 10.0, 3.0 * p[1] - 4.0])).unwrap();
        assert_eq!(a.ranks(), t.ranks());
    }

    #[test]
    fn rejects_single_vertex() {
        assert!(fiedler_order(&path(1, 1.0)).is_err());
    }
}
