//! Exact one-dimensional t-SNE over projected vertex coordinates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::UcsGraph;
use crate::ordering::{Embedding1D, Method, Ordering};

/// Perplexity search tolerance (absolute).
const PERPLEXITY_TOL: f64 = 1e-4;
const PERPLEXITY_STOP: f64 = 1e-6;
const MAX_BISECTION_STEPS: usize = 64;
const MAX_BRACKET_STEPS: usize = 256;
/// Conditional probabilities below this are not stored.
const P_FLOOR: f64 = 1e-20;
const JITTER_M: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TsneParams {
    pub perplexity: f64,
    pub iterations: usize,
    /// `None` picks `min(200, n / early_exaggeration)`.
    #[serde(default)]
    pub learning_rate: Option<f64>,
    pub early_exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch: usize,
    pub seed: u64,
}

impl Default for TsneParams {
    fn default() -> Self {
        TsneParams {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: None,
            early_exaggeration: 12.0,
            exaggeration_iterations: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch: 250,
            seed: 0,
        }
    }
}

impl TsneParams {
    /// Step size actually used for `n` points.
    pub fn effective_learning_rate(&self, n: usize) -> f64 {
        self.learning_rate
            .unwrap_or_else(|| (n as f64 / self.early_exaggeration).min(200.0))
    }

    pub fn with_perplexity(perplexity: f64, seed: u64) -> Self {
        TsneParams {
            perplexity,
            seed,
            ..TsneParams::default()
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if n < 4 {
            return Err(Error::InvalidParameter(format!("t-SNE needs n >= 4, got {n}")));
        }
        if !(self.perplexity > 1.0 && self.perplexity < n as f64) {
            return Err(Error::InvalidParameter(format!(
                "perplexity {} outside (1, {n})",
                self.perplexity
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("t-SNE needs at least one iteration".into()));
        }
        if !(self.learning_rate.is_none_or(|lr| lr > 0.0) && self.early_exaggeration > 0.0) {
            return Err(Error::InvalidParameter(
                "learning rate and exaggeration must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One row of conditional probabilities `p_{j|i}`.
#[derive(Debug, Clone)]
pub struct ConditionalRow {
    /// Dense row; entry `i` itself is zero.
    pub probabilities: Vec<f64>,
    /// `2^{H(P_i)}` at the chosen precision.
    pub perplexity: f64,
    /// `1 / (2σ_i²)`.
    pub beta: f64,
}

fn row_entropy(sq: &[f64], skip: usize, dmin: f64, beta: f64, out: &mut [f64]) -> f64 {
    let mut z = 0.0;
    let mut weighted = 0.0;
    for (j, (&d, p)) in sq.iter().zip(out.iter_mut()).enumerate() {
        if j == skip {
            *p = 0.0;
            continue;
        }
        let shifted = d - dmin;
        let e = (-beta * shifted).exp();
        *p = e;
        z += e;
        weighted += e * shifted;
    }
    for p in out.iter_mut() {
        *p /= z;
    }
    // natural-log entropy; perplexity = exp(H_nats) = 2^{H_bits}
    z.ln() + beta * weighted / z
}

/// Gaussian conditional row for the point at `skip`, with `σ_i` chosen by
/// bisection on the precision so that the perplexity matches `target`.
/// Returns `None` when the target cannot be met within tolerance.
pub fn conditional_row(sq_dists: &[f64], skip: usize, target: f64) -> Option<ConditionalRow> {
    let n = sq_dists.len();
    let mut p = vec![0.0; n];
    let others = sq_dists.iter().enumerate().filter(|&(j, _)| j != skip).map(|(_, &d)| d);
    let dmin = others.clone().fold(f64::INFINITY, f64::min);
    let spread = others.map(|d| d - dmin).sum::<f64>() / (n - 1) as f64;

    let perplexity_at = |beta: f64, p: &mut [f64]| row_entropy(sq_dists, skip, dmin, beta, p).exp();

    if spread == 0.0 {
        let perp = perplexity_at(0.0, &mut p);
        return ((perp - target).abs() <= PERPLEXITY_TOL).then_some(ConditionalRow {
            probabilities: p,
            perplexity: perp,
            beta: 0.0,
        });
    }

    // Perplexity decreases monotonically in beta: double until bracketed,
    // then bisect.
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    let mut beta = 1.0 / spread;
    let mut doublings = 0;
    let mut bisections = 0;
    let mut perp;
    loop {
        perp = perplexity_at(beta, &mut p);
        if (perp - target).abs() <= PERPLEXITY_STOP {
            break;
        }
        if perp > target {
            lo = beta;
        } else {
            hi = beta;
        }
        if hi.is_finite() {
            bisections += 1;
            if bisections > MAX_BISECTION_STEPS {
                break;
            }
            beta = 0.5 * (lo + hi);
        } else {
            doublings += 1;
            beta *= 2.0;
            if doublings > MAX_BRACKET_STEPS || !beta.is_finite() {
                break;
            }
        }
    }
    ((perp - target).abs() <= PERPLEXITY_TOL && p.iter().all(|x| x.is_finite())).then_some(ConditionalRow {
        probabilities: p,
        perplexity: perp,
        beta,
    })
}

/// Symmetrized affinities `p_ij = (p_{j|i} + p_{i|j}) / 2n`, stored sparsely
/// per row (entries below 1e-20 are dropped).
#[derive(Debug, Clone)]
pub struct JointProbabilities {
    pub rows: Vec<Vec<(usize, f64)>>,
    /// Achieved perplexity per vertex.
    pub perplexities: Vec<f64>,
    /// Sum of each conditional row as stored.
    pub conditional_row_sums: Vec<f64>,
    /// Whether the coordinates had to be jittered to meet the perplexity.
    pub jittered: bool,
}

impl JointProbabilities {
    pub fn total(&self) -> f64 {
        self.rows.iter().flatten().map(|&(_, p)| p).sum()
    }
}

/// A calibrated sparse row with its achieved perplexity and raw sum, or the
/// failing vertex with the perplexity it reached.
type RowOutcome = std::result::Result<(Vec<(usize, f64)>, f64, f64), (usize, f64)>;

fn try_joint(coords: &[[f64; 2]], perplexity: f64) -> std::result::Result<JointProbabilities, (usize, f64)> {
    let n = coords.len();
    let rows: Vec<RowOutcome> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ci = coords[i];
            let sq: Vec<f64> = coords
                .iter()
                .map(|c| {
                    let dx = c[0] - ci[0];
                    let dy = c[1] - ci[1];
                    dx * dx + dy * dy
                })
                .collect();
            match conditional_row(&sq, i, perplexity) {
                Some(row) => {
                    let kept: Vec<(usize, f64)> = row
                        .probabilities
                        .iter()
                        .enumerate()
                        .filter(|&(j, &p)| j != i && p >= P_FLOOR)
                        .map(|(j, &p)| (j, p))
                        .collect();
                    let sum = kept.iter().map(|x| x.1).sum();
                    Ok((kept, row.perplexity, sum))
                }
                None => Err((i, f64::NAN)),
            }
        })
        .collect();

    let mut cond = Vec::with_capacity(n);
    let mut perplexities = Vec::with_capacity(n);
    let mut sums = Vec::with_capacity(n);
    for r in rows {
        let (row, perp, sum) = r?;
        cond.push(row);
        perplexities.push(perp);
        sums.push(sum);
    }

    let mut merged: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, row) in cond.iter().enumerate() {
        for &(j, p) in row {
            merged[i].push((j, p));
            merged[j].push((i, p));
        }
    }
    let scale = 1.0 / (2.0 * n as f64);
    let rows = merged
        .into_par_iter()
        .map(|mut row| {
            row.sort_by_key(|&(j, _)| j);
            let mut out: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (j, p) in row {
                match out.last_mut() {
                    Some(last) if last.0 == j => last.1 += p,
                    _ => out.push((j, p)),
                }
            }
            for e in &mut out {
                e.1 *= scale;
            }
            out
        })
        .collect();
    Ok(JointProbabilities {
        rows,
        perplexities,
        conditional_row_sums: sums,
        jittered: false,
    })
}

/// Joint affinities for planar points. If some row cannot reach the target
/// perplexity (typically coincident or exactly tied points), the points are
/// jittered by at most 1e-9 m with a fixed seed and the search is retried
/// once.
pub fn joint_probabilities(coords: &[[f64; 2]], perplexity: f64) -> Result<JointProbabilities> {
    match try_joint(coords, perplexity) {
        Ok(p) => Ok(p),
        Err(_) => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x6a17_7e55);
            let jittered: Vec<[f64; 2]> = coords
                .iter()
                .map(|c| {
                    [
                        c[0] + JITTER_M * (2.0 * rng.random::<f64>() - 1.0),
                        c[1] + JITTER_M * (2.0 * rng.random::<f64>() - 1.0),
                    ]
                })
                .collect();
            match try_joint(&jittered, perplexity) {
                Ok(mut p) => {
                    p.jittered = true;
                    Ok(p)
                }
                Err((vertex, _)) => {
                    let ci = coords[vertex];
                    let sq: Vec<f64> = coords
                        .iter()
                        .map(|c| (c[0] - ci[0]).powi(2) + (c[1] - ci[1]).powi(2))
                        .collect();
                    let mut scratch = vec![0.0; sq.len()];
                    let dmin = sq
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != vertex)
                        .fold(f64::INFINITY, |m, (_, &d)| m.min(d));
                    let achieved = row_entropy(&sq, vertex, dmin, 1e300, &mut scratch).exp();
                    Err(Error::PerplexitySearch {
                        vertex,
                        achieved,
                        target: perplexity,
                    })
                }
            }
        }
    }
}

/// `KL(P ‖ Q)` for a 1-D layout, with Student-t `Q`. Brute force over all
/// pairs; meant for diagnostics and tests.
pub fn kl_divergence(joint: &JointProbabilities, y: &[f64]) -> f64 {
    let n = y.len();
    let mut z = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                z += 1.0 / (1.0 + (y[i] - y[j]).powi(2));
            }
        }
    }
    let mut kl = 0.0;
    for (i, row) in joint.rows.iter().enumerate() {
        for &(j, p) in row {
            let q = 1.0 / (1.0 + (y[i] - y[j]).powi(2)) / z;
            kl += p * (p / q).ln();
        }
    }
    kl
}

#[derive(Debug, Clone)]
pub struct TsneResult {
    pub ordering: Ordering,
    pub embedding: Embedding1D,
    /// `kl[t]` is the divergence after `t` updates; length `iterations + 1`.
    pub kl: Vec<f64>,
    pub joint: JointProbabilities,
}

struct Accum {
    attract: f64,
    repulse: f64,
    wsum: f64,
    plogw: f64,
}

fn gradient_terms(joint: &JointProbabilities, y: &[f64]) -> Vec<Accum> {
    (0..y.len())
        .into_par_iter()
        .map(|i| {
            let yi = y[i];
            let mut attract = 0.0;
            let mut plogw = 0.0;
            for &(j, p) in &joint.rows[i] {
                let d = yi - y[j];
                let w = 1.0 / (1.0 + d * d);
                attract += p * w * d;
                plogw += p * w.ln();
            }
            let mut repulse = 0.0;
            let mut wsum = 0.0;
            for (j, &yj) in y.iter().enumerate() {
                if j == i {
                    continue;
                }
                let d = yi - yj;
                let w = 1.0 / (1.0 + d * d);
                wsum += w;
                repulse += w * w * d;
            }
            Accum {
                attract,
                repulse,
                wsum,
                plogw,
            }
        })
        .collect()
}

/// Runs t-SNE on the planar coordinates of `g` and ranks vertices by the
/// final 1-D coordinate.
pub fn tsne_order(g: &UcsGraph, params: &TsneParams) -> Result<(Ordering, Embedding1D)> {
    let r = tsne_embed(g.coords(), params)?;
    Ok((r.ordering, r.embedding))
}

pub fn tsne_embed(coords: &[[f64; 2]], params: &TsneParams) -> Result<TsneResult> {
    let n = coords.len();
    params.validate(n)?;
    let joint = joint_probabilities(coords, params.perplexity)?;
    let p_log_p: f64 = joint.rows.iter().flatten().map(|&(_, p)| p * p.ln()).sum();
    let p_total = joint.total();

    let learning_rate = params.effective_learning_rate(n);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let normal = Normal::new(0.0, 1e-4).expect("valid normal");
    let mut y: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
    let mut update = vec![0.0; n];
    let mut gains = vec![1.0; n];
    let mut kl = Vec::with_capacity(params.iterations + 1);

    for iter in 0..=params.iterations {
        let terms = gradient_terms(&joint, &y);
        let z: f64 = terms.iter().map(|t| t.wsum).sum();
        let plogw: f64 = terms.iter().map(|t| t.plogw).sum();
        kl.push(p_log_p - plogw + p_total * z.ln());
        if iter == params.iterations {
            break;
        }

        let exaggeration = if iter < params.exaggeration_iterations {
            params.early_exaggeration
        } else {
            1.0
        };
        let momentum = if iter < params.momentum_switch {
            params.initial_momentum
        } else {
            params.final_momentum
        };
        for i in 0..n {
            let grad = 4.0 * (exaggeration * terms[i].attract - terms[i].repulse / z);
            if !grad.is_finite() {
                return Err(Error::NonFinite("t-SNE gradient"));
            }
            gains[i] = if (grad > 0.0) != (update[i] > 0.0) {
                gains[i] + 0.2
            } else {
                (gains[i] * 0.8f64).max(0.01)
            };
            update[i] = momentum * update[i] - learning_rate * gains[i] * grad;
            y[i] += update[i];
        }
        let mean = y.iter().sum::<f64>() / n as f64;
        for v in &mut y {
            *v -= mean;
        }
    }

    let embedding = Embedding1D::new(y)?;
    let ordering = embedding
        .ordering(Method::Tsne)
        .with_param("perplexity", params.perplexity)
        .with_param("iterations", params.iterations as u64)
        .with_param("learning_rate", learning_rate)
        .with_param("early_exaggeration", params.early_exaggeration)
        .with_param("exaggeration_iterations", params.exaggeration_iterations as u64)
        .with_param("seed", params.seed);
    Ok(TsneResult {
        ordering,
        embedding,
        kl,
        joint,
    })
}
