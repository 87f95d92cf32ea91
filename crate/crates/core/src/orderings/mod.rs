//! Vertex ordering methods.
//!
//! Every method returns an [`Ordering`] whose ranks form a bijection onto
//! `0..n`. Methods that go through a one-dimensional embedding also return
//! the [`Embedding1D`] they ranked, with ties broken by ascending vertex
//! index.

mod fiedler;
mod tsne;
mod umap;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::UcsGraph;
use crate::ordering::{Method, Ordering};

pub use fiedler::{fiedler_order, fiedler_order_with, oriented_fiedler, FiedlerResult};
pub use tsne::{
    conditional_row, joint_probabilities, kl_divergence, tsne_embed, tsne_order, ConditionalRow, JointProbabilities,
    TsneParams, TsneResult,
};
pub use umap::{
    fit_curve_params, fuzzy_graph, smooth_knn_row, umap_embed, umap_order, FuzzyGraph, SmoothKnn, UmapParams,
    UmapResult,
};

/// Ranks in order of appearance in the source file, which is vertex storage
/// order.
pub fn original_order(g: &UcsGraph) -> Ordering {
    Ordering::from_sequence((0..g.n()).collect(), Method::Original).expect("identity permutation")
}

/// Seeded uniform permutation.
///
/// The generator is ChaCha8 (`rand_chacha`) seeded through
/// `seed_from_u64(seed)`. Starting from the identity sequence, the
/// Fisher–Yates pass runs `i = n−1 … 1` and swaps position `i` with
/// `j = uniform_below(i + 1)`, where `uniform_below(b)` draws `next_u64()`
/// values, rejects those below `(2⁶⁴ − b) mod b` and returns the accepted
/// value `mod b`. Output therefore depends only on `(n, seed)`.
pub fn random_order(g: &UcsGraph, seed: u64) -> Ordering {
    random_permutation(g.n(), seed)
}

pub(crate) fn random_permutation(n: usize, seed: u64) -> Ordering {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seq: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = uniform_below(&mut rng, i as u64 + 1) as usize;
        seq.swap(i, j);
    }
    Ordering::from_sequence(seq, Method::Random)
        .expect("shuffle of a permutation")
        .with_param("seed", seed)
}

pub(crate) fn uniform_below(rng: &mut impl RngCore, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    let threshold = bound.wrapping_neg() % bound;
    loop {
        let r = rng.next_u64();
        if r >= threshold {
            return r % bound;
        }
    }
}
