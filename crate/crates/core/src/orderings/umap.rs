//! One-dimensional UMAP over projected vertex coordinates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::eigen::EigenOptions;
use crate::error::{Error, Result};
use crate::graph::{dist2, is_connected, laplacian_from_weights, UcsGraph};
use crate::ordering::{Embedding1D, Method, Ordering};

use super::fiedler::oriented_fiedler;
use super::uniform_below;

const SIGMA_ITERATIONS: usize = 64;
const SIGMA_TOL: f64 = 1e-5;
/// Lower bound on σ relative to the mean neighbor distance.
const MIN_SIGMA_SCALE: f64 = 1e-3;
const GRAD_CLIP: f64 = 4.0;
const INIT_EXTENT: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UmapParams {
    /// Nearest neighbors per vertex, not counting the vertex itself.
    pub k: usize,
    pub min_dist: f64,
    pub spread: f64,
    pub epochs: usize,
    pub negative_sample_rate: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for UmapParams {
    fn default() -> Self {
        UmapParams {
            k: 15,
            min_dist: 0.1,
            spread: 1.0,
            epochs: 200,
            negative_sample_rate: 5,
            learning_rate: 1.0,
            seed: 0,
        }
    }
}

impl UmapParams {
    pub fn with_seed(seed: u64) -> Self {
        UmapParams {
            seed,
            ..UmapParams::default()
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.k < 2 || self.k >= n {
            return Err(Error::InvalidParameter(format!(
                "UMAP needs 2 <= k < n, got k = {} with n = {n}",
                self.k
            )));
        }
        if !(self.min_dist >= 0.0 && self.spread > 0.0 && self.min_dist.is_finite() && self.spread.is_finite()) {
            return Err(Error::InvalidParameter("min_dist must be >= 0 and spread > 0".into()));
        }
        if self.epochs == 0 || self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidParameter(
                "epochs and learning rate must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Local connectivity of one vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothKnn {
    /// Distance to the nearest neighbor at positive distance.
    pub rho: f64,
    pub sigma: f64,
    /// `Σ_j exp(−max(0, d_j − ρ)/σ)` at the chosen σ.
    pub membership_sum: f64,
}

fn membership_sum(dists: &[f64], rho: f64, sigma: f64) -> f64 {
    dists.iter().map(|&d| (-(d - rho).max(0.0) / sigma).exp()).sum()
}

/// Finds σ by bisection so that the membership sum over `dists` (the
/// neighbor distances, ascending, self excluded) equals `target`.
///
/// When several neighbors tie at `ρ` the sum cannot drop below their count;
/// σ then bottoms out at `1e-3` times the mean neighbor distance.
pub fn smooth_knn_row(dists: &[f64], target: f64) -> SmoothKnn {
    let rho = dists.iter().copied().find(|&d| d > 0.0).unwrap_or(0.0);
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    let mut mid = 1.0;
    // keep the search scale-free
    let scale = dists.iter().sum::<f64>() / dists.len().max(1) as f64;
    let unit = if scale > 0.0 { scale } else { 1.0 };
    for _ in 0..SIGMA_ITERATIONS {
        let s = membership_sum(dists, rho, mid * unit);
        if (s - target).abs() < SIGMA_TOL {
            break;
        }
        if s > target {
            hi = mid;
            mid = 0.5 * (lo + hi);
        } else {
            lo = mid;
            mid = if hi.is_finite() { 0.5 * (lo + hi) } else { mid * 2.0 };
        }
    }
    let sigma = (mid * unit).max(MIN_SIGMA_SCALE * unit);
    SmoothKnn {
        rho,
        sigma,
        membership_sum: membership_sum(dists, rho, sigma),
    }
}

/// Symmetric fuzzy neighbor graph; rows sorted by neighbor index.
#[derive(Debug, Clone)]
pub struct FuzzyGraph {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub local: Vec<SmoothKnn>,
}

impl FuzzyGraph {
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&j, |e| e.0)
            .map_or(0.0, |p| self.rows[i][p].1)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |&(j, w)| (i, j, w)))
    }
}

/// Directed memberships `exp(−max(0, d − ρ_i)/σ_i)` on the exact `k`-NN
/// graph, merged with the probabilistic t-conorm `a + b − ab`.
pub fn fuzzy_graph(g: &UcsGraph, k: usize) -> Result<FuzzyGraph> {
    let n = g.n();
    if k < 2 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "UMAP needs 2 <= k < n, got k = {k} with n = {n}"
        )));
    }
    let target = (k as f64).log2();
    let coords = g.coords();
    let mut directed: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    let mut local = Vec::with_capacity(n);
    for i in 0..n {
        let nbrs = &g.knn_unchecked(i, k + 1)[1..];
        let dists: Vec<f64> = nbrs.iter().map(|&j| dist2(coords[i], coords[j]).sqrt()).collect();
        let sk = smooth_knn_row(&dists, target);
        let mut row: Vec<(usize, f64)> = nbrs
            .iter()
            .zip(&dists)
            .map(|(&j, &d)| (j, (-(d - sk.rho).max(0.0) / sk.sigma).exp()))
            .collect();
        row.sort_by_key(|e| e.0);
        directed.push(row);
        local.push(sk);
    }

    let lookup = |i: usize, j: usize| {
        directed[i]
            .binary_search_by_key(&j, |e| e.0)
            .map_or(0.0, |p| directed[i][p].1)
    };
    let mut pairs: Vec<(usize, usize)> = directed
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.iter().map(move |&(j, _)| (i.min(j), i.max(j))))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (lo, hi) in pairs {
        let a = lookup(lo, hi);
        let b = lookup(hi, lo);
        let w = a + b - a * b;
        if w > 0.0 {
            rows[lo].push((hi, w));
            rows[hi].push((lo, w));
        }
    }
    for r in &mut rows {
        r.sort_by_key(|e| e.0);
    }
    Ok(FuzzyGraph { rows, local })
}

/// Fits `1/(1 + a·x^{2b})` to the offset exponential
/// `1` for `x < min_dist`, `exp(−(x − min_dist)/spread)` otherwise, by
/// Levenberg–Marquardt least squares on 300 equispaced points of
/// `[0, 3·spread]`, starting from `a = b = 1`.
pub fn fit_curve_params(min_dist: f64, spread: f64) -> Result<(f64, f64)> {
    let m = 300;
    let xs: Vec<f64> = (0..m).map(|i| 3.0 * spread * i as f64 / (m - 1) as f64).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| {
            if x < min_dist {
                1.0
            } else {
                (-(x - min_dist) / spread).exp()
            }
        })
        .collect();

    let cost = |a: f64, b: f64| -> f64 {
        xs.iter()
            .zip(&ys)
            .map(|(&x, &y)| (1.0 / (1.0 + a * x.powf(2.0 * b)) - y).powi(2))
            .sum()
    };

    let (mut a, mut b) = (1.0f64, 1.0f64);
    let mut lambda = 1e-3;
    let mut c = cost(a, b);
    for _ in 0..500 {
        // normal equations JᵀJ δ = −Jᵀr
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&x, &y) in xs.iter().zip(&ys) {
            let u = if x > 0.0 { x.powf(2.0 * b) } else { 0.0 };
            let g = 1.0 / (1.0 + a * u);
            let r = g - y;
            let da = -u * g * g;
            let db = if x > 0.0 { -a * u * 2.0 * x.ln() * g * g } else { 0.0 };
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        let mut improved = false;
        for _ in 0..50 {
            let maa = jaa * (1.0 + lambda);
            let mbb = jbb * (1.0 + lambda);
            let det = maa * mbb - jab * jab;
            if det == 0.0 || !det.is_finite() {
                lambda *= 10.0;
                continue;
            }
            let step_a = -(mbb * ga - jab * gb) / det;
            let step_b = -(maa * gb - jab * ga) / det;
            let (na, nb) = (a + step_a, b + step_b);
            let nc = if na > 0.0 && nb > 0.0 {
                cost(na, nb)
            } else {
                f64::INFINITY
            };
            if nc <= c {
                let rel = (step_a.abs() / a.abs().max(1e-12)).max(step_b.abs() / b.abs().max(1e-12));
                a = na;
                b = nb;
                let dc = c - nc;
                c = nc;
                lambda = (lambda / 10.0).max(1e-15);
                improved = true;
                if rel < 1e-14 || dc <= 1e-18 * c.max(1e-300) {
                    return Ok((a, b));
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    if a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0 {
        Ok((a, b))
    } else {
        Err(Error::NonFinite("UMAP curve fit"))
    }
}

#[derive(Debug, Clone)]
pub struct UmapResult {
    pub ordering: Ordering,
    pub embedding: Embedding1D,
    pub graph: FuzzyGraph,
    pub a: f64,
    pub b: f64,
    /// Whether the layout started from the spectral initialization.
    pub spectral_init: bool,
}

pub fn umap_order(g: &UcsGraph, params: &UmapParams) -> Result<(Ordering, Embedding1D)> {
    let r = umap_embed(g, params)?;
    Ok((r.ordering, r.embedding))
}

fn clip(x: f64) -> f64 {
    x.clamp(-GRAD_CLIP, GRAD_CLIP)
}

fn initial_layout(graph: &FuzzyGraph, rng: &mut ChaCha8Rng) -> (Vec<f64>, bool) {
    let n = graph.rows.len();
    if is_connected(&graph.rows) {
        let lap = laplacian_from_weights(graph.rows.clone());
        if let Ok(pair) = oriented_fiedler(&lap, &EigenOptions::default()) {
            let max = pair.vector.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if max > 0.0 {
                let noise = Normal::new(0.0, 1e-4).expect("valid normal");
                let y = pair
                    .vector
                    .iter()
                    .map(|v| v * INIT_EXTENT / max + noise.sample(rng))
                    .collect();
                return (y, true);
            }
        }
    }
    log::debug!("UMAP spectral initialization unavailable; using random start");
    let y = (0..n).map(|_| rng.random_range(-INIT_EXTENT..INIT_EXTENT)).collect();
    (y, false)
}

/// Min–max rescale onto `[0, 10]` before optimization.
fn rescale(y: &mut [f64]) {
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        for v in y.iter_mut() {
            *v = INIT_EXTENT * (*v - lo) / (hi - lo);
        }
    }
}

pub fn umap_embed(g: &UcsGraph, params: &UmapParams) -> Result<UmapResult> {
    let n = g.n();
    params.validate(n)?;
    let graph = fuzzy_graph(g, params.k)?;
    let (a, b) = fit_curve_params(params.min_dist, params.spread)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (mut y, spectral_init) = initial_layout(&graph, &mut rng);
    rescale(&mut y);

    // Every stored direction of the symmetric graph is a sample; weak
    // edges that would never be sampled are dropped.
    let max_w = graph.edges().map(|e| e.2).fold(0.0, f64::max);
    let floor = max_w / params.epochs as f64;
    let edges: Vec<(usize, usize, f64)> = graph.edges().filter(|e| e.2 >= floor).collect();
    let eps: Vec<f64> = edges.iter().map(|e| max_w / e.2).collect();
    let neg_rate = params.negative_sample_rate as f64;
    let epns: Vec<f64> = eps.iter().map(|e| e / neg_rate.max(f64::MIN_POSITIVE)).collect();
    let mut next_sample = eps.clone();
    let mut next_negative = epns.clone();

    for epoch in 0..params.epochs {
        let alpha = params.learning_rate * (1.0 - epoch as f64 / params.epochs as f64);
        let t = epoch as f64;
        for (e, &(j, k, _)) in edges.iter().enumerate() {
            if next_sample[e] > t {
                continue;
            }
            let d = y[j] - y[k];
            let d2 = d * d;
            let coeff = if d2 > 0.0 {
                -2.0 * a * b * d2.powf(b - 1.0) / (a * d2.powf(b) + 1.0)
            } else {
                0.0
            };
            let step = clip(coeff * d);
            y[j] += step * alpha;
            y[k] -= step * alpha;
            next_sample[e] += eps[e];

            if params.negative_sample_rate == 0 {
                continue;
            }
            let n_neg = ((t - next_negative[e]) / epns[e]).floor().max(0.0) as usize;
            for _ in 0..n_neg {
                let other = uniform_below(&mut rng, n as u64) as usize;
                if other == j {
                    continue;
                }
                let d = y[j] - y[other];
                let d2 = d * d;
                let step = if d2 > 0.0 {
                    clip(2.0 * b / ((0.001 + d2) * (a * d2.powf(b) + 1.0)) * d)
                } else {
                    0.0
                };
                y[j] += step * alpha;
            }
            next_negative[e] += n_neg as f64 * epns[e];
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("UMAP layout"));
        }
    }

    let embedding = Embedding1D::new(y)?;
    let ordering = embedding
        .ordering(Method::Umap)
        .with_param("k", params.k as u64)
        .with_param("min_dist", params.min_dist)
        .with_param("spread", params.spread)
        .with_param("epochs", params.epochs as u64)
        .with_param("negative_sample_rate", params.negative_sample_rate as u64)
        .with_param("learning_rate", params.learning_rate)
        .with_param("seed", params.seed);
    Ok(UmapResult {
        ordering,
        embedding,
        graph,
        a,
        b,
        spectral_init,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;

    fn line(n: usize) -> UcsGraph {
        let mut b = GraphBuilder::planar();
        for i in 0..n {
            b.add_node(i.to_string(), [i as f64 * 10.0, ((i * 7) % 3) as f64])
                .unwrap();
        }
        for i in 1..n {
            b.add_edge(i - 1, i, None).unwrap();
        }
        b.build().unwrap()
    }

    #[test]
    fn nearest_neighbor_has_unit_membership() {
        let sk = smooth_knn_row(&[1.0, 2.0, 3.5, 4.0], 2.0);
        assert_eq!(sk.rho, 1.0);
        assert_eq!((-(1.0f64 - sk.rho).max(0.0) / sk.sigma).exp(), 1.0);
        assert!((sk.membership_sum - 2.0).abs() < 1e-4);
    }

    #[test]
    fn tied_neighbors_floor_sigma() {
        let sk = smooth_knn_row(&[1.0, 1.0, 1.0, 1.0, 2.0], 2.0);
        assert!(sk.sigma > 0.0);
        assert!(sk.membership_sum >= 4.0);
    }

    #[test]
    fn union_of_halves() {
        let (x, y) = (0.5f64, 0.5f64);
        assert_eq!(x + y - x * y, 0.75);
    }

    #[test]
    fn fuzzy_graph_is_symmetric_in_unit_interval() {
        let g = line(30);
        let fg = fuzzy_graph(&g, 5).unwrap();
        for (i, j, w) in fg.edges() {
            assert!(w > 0.0 && w <= 1.0);
            assert_eq!(w.to_bits(), fg.weight(j, i).to_bits());
        }
    }

    #[test]
    fn curve_fit_defaults() {
        // reference values from an independent least-squares fit
        let (a, b) = fit_curve_params(0.1, 1.0).unwrap();
        assert!((a - 1.5769434602697652).abs() < 1e-4 * 1.577, "a = {a}");
        assert!((b - 0.8950608778515733).abs() < 1e-4 * 0.895, "b = {b}");
    }

    #[test]
    fn rejects_bad_k() {
        let g = line(10);
        assert!(umap_order(
            &g,
            &UmapParams {
                k: 1,
                ..UmapParams::default()
            }
        )
        .is_err());
        assert!(umap_order(
            &g,
            &UmapParams {
                k: 10,
                ..UmapParams::default()
            }
        )
        .is_err());
    }

    #[test]
    fn seeded_runs_repeat_and_ignore_translation() {
        let g = line(60);
        let p = UmapParams {
            k: 6,
            ..UmapParams::with_seed(3)
        };
        let a = umap_embed(&g, &p).unwrap();
        assert!(a.spectral_init);
        let b = umap_embed(&g, &p).unwrap();
        assert_eq!(a.embedding, b.embedding);
        // dyadic shift keeps every coordinate difference exact
        let moved = g.with_mapped_coords(|q| [q[0] + 4096.0, q[1] - 1024.0]);
        let c = umap_embed(&moved, &p).unwrap();
        assert_eq!(a.ordering.ranks(), c.ordering.ranks());
    }
}
