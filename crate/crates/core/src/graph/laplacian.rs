use nalgebra::DMatrix;

use super::UcsGraph;

/// Compressed sparse row matrix, square. Column indices within a row are
/// strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(column, value)` lists. Rows are sorted by
    /// column; duplicate columns are not allowed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            for (c, v) in row {
                debug_assert!(c < n);
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[span.clone()].binary_search(&j) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }
}

/// Weighted graph Laplacian with `L_ij = -1/l_ij` for adjacent vertices and
/// `L_ii = sum_j |L_ij|`. Lengths are taken in meters.
pub fn build_laplacian(g: &UcsGraph) -> CsrMatrix {
    debug_assert!(g.adjacency().iter().flatten().all(|&(_, l)| l > 0.0 && l.is_finite()));
    laplacian_from_weights(
        g.adjacency()
            .iter()
            .map(|nbrs| nbrs.iter().map(|&(j, l)| (j, 1.0 / l)).collect())
            .collect(),
    )
}

/// Laplacian of a symmetric affinity structure: `L_ij = -w_ij`,
/// `L_ii = sum_j w_ij`.
pub fn laplacian_from_weights(weights: Vec<Vec<(usize, f64)>>) -> CsrMatrix {
    let rows = weights
        .into_iter()
        .enumerate()
        .map(|(i, nbrs)| {
            let diag: f64 = nbrs.iter().map(|&(_, w)| w.abs()).sum();
            let mut row: Vec<(usize, f64)> = nbrs
                .into_iter()
                .filter(|&(j, _)| j != i)
                .map(|(j, w)| (j, -w))
                .collect();
            row.push((i, diag));
            row
        })
        .collect();
    CsrMatrix::from_rows(rows)
}
