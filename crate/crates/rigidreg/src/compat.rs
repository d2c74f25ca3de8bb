//! Spatial compatibility between correspondences, and the sampling order it
//! induces.
//!
//! A rigid motion preserves pairwise distances, so two correct
//! correspondences `i, j` must satisfy `|‖y_i − y_j‖ − ‖x_i − x_j‖| ≤ 2ξ`
//! when each residual is within `ξ`. The dense boolean matrix of this test
//! is cheap to store bit-packed and gives two useful per-index statistics:
//! a score (how many others an index is compatible with) and a priority
//! (the score-weighted version). Sorting by priority concentrates true
//! inliers at the front, which is what the guided stages sample from.

use crate::config::SamplingStrategy;
use crate::error::RegError;
use crate::geom::CorrespondenceSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Hard cap on the number of correspondences: the matrix is dense, so the
/// bit-packed storage for `N` rows costs `N²/8` bytes (50 MB at the cap).
pub const MAX_CORRESPONDENCES: usize = 20_000;

/// Bit-packed symmetric compatibility matrix with a true diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffinityMatrix {
    n: usize,
    stride: usize,
    bits: Vec<u64>,
}

impl AffinityMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Whether `i` and `j` are spatially compatible.
    pub fn get(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.n && j < self.n);
        let word = self.bits[i * self.stride + j / 64];
        word >> (j % 64) & 1 == 1
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.stride..(i + 1) * self.stride]
    }
}

/// Builds the compatibility matrix: `bits(i, j)` exactly when
/// `|‖y_i − y_j‖ − ‖x_i − x_j‖| ≤ 2ξ` (closed), with a true diagonal.
///
/// Rejects sets larger than [`MAX_CORRESPONDENCES`].
pub fn build_affinity(set: &CorrespondenceSet, xi: f64) -> Result<AffinityMatrix, RegError> {
    let n = set.len();
    if n > MAX_CORRESPONDENCES {
        return Err(RegError::TooManyCorrespondences {
            n,
            max: MAX_CORRESPONDENCES,
        });
    }
    let stride = n.div_ceil(64);
    let mut bits = vec![0u64; n * stride];
    let items = set.as_slice();
    let bound = 2.0 * xi;
    // Each row is filled independently; the test is evaluated in the same
    // operand order for (i, j) and (j, i), so the matrix comes out symmetric
    // without synchronization.
    bits.par_chunks_mut(stride).enumerate().for_each(|(i, row)| {
        let ci = &items[i];
        for j in 0..n {
            let cj = &items[j];
            let dx = (ci.x - cj.x).norm();
            let dy = (ci.y - cj.y).norm();
            if (dy - dx).abs() <= bound {
                row[j / 64] |= 1 << (j % 64);
            }
        }
    });
    Ok(AffinityMatrix { n, stride, bits })
}

/// Per-index compatibility statistics.
///
/// `score(i)` counts the indices compatible with `i`, including `i` itself;
/// `priority(i)` sums the scores of those indices, so an index surrounded by
/// well-connected neighbors ranks above one surrounded by loners.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriorityTable {
    score: Vec<u32>,
    priority: Vec<u64>,
}

impl PriorityTable {
    pub fn len(&self) -> usize {
        self.score.len()
    }

    pub fn is_empty(&self) -> bool {
        self.score.is_empty()
    }

    pub fn score(&self, i: usize) -> u32 {
        self.score[i]
    }

    pub fn priority(&self, i: usize) -> u64 {
        self.priority[i]
    }
}

/// Computes scores and priorities from the compatibility matrix.
pub fn compute_priorities(w: &AffinityMatrix) -> PriorityTable {
    let n = w.n;
    let score: Vec<u32> = (0..n)
        .into_par_iter()
        .map(|i| w.row(i).iter().map(|word| word.count_ones()).sum())
        .collect();
    let priority: Vec<u64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut sum = 0u64;
            for (wi, &word) in w.row(i).iter().enumerate() {
                let mut bitset = word;
                while bitset != 0 {
                    let j = wi * 64 + bitset.trailing_zeros() as usize;
                    sum += u64::from(score[j]);
                    bitset &= bitset - 1;
                }
            }
            sum
        })
        .collect();
    PriorityTable { score, priority }
}

/// The `k` indices of highest priority, ties broken by ascending index.
/// With `restrict`, only those indices compete. Returns fewer than `k` when
/// not enough indices are available.
pub fn sample_top(table: &PriorityTable, k: usize, restrict: Option<&[usize]>) -> Vec<usize> {
    top_by_key(table, k, restrict, |t, i| t.priority(i))
}

/// Like [`sample_top`] but ranked by raw score; the ablation mode between
/// priority-guided and random sampling.
pub fn sample_top_by_score(table: &PriorityTable, k: usize, restrict: Option<&[usize]>) -> Vec<usize> {
    top_by_key(table, k, restrict, |t, i| u64::from(t.score(i)))
}

fn top_by_key(
    table: &PriorityTable,
    k: usize,
    restrict: Option<&[usize]>,
    key: impl Fn(&PriorityTable, usize) -> u64,
) -> Vec<usize> {
    let mut indices: Vec<usize> = match restrict {
        Some(r) => r.to_vec(),
        None => (0..table.len()).collect(),
    };
    indices.sort_by(|&a, &b| key(table, b).cmp(&key(table, a)).then(a.cmp(&b)));
    indices.truncate(k);
    indices
}

/// `k` distinct indices drawn uniformly from `0..n`, reproducible from the
/// seed. Asking for `k ≥ n` returns a full permutation of `0..n`.
pub fn sample_random(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    let take = k.min(n);
    for i in 0..take {
        let j = rng.gen_range(i..n);
        indices.swap(i, j);
    }
    indices.truncate(take);
    indices
}

/// Keeps the candidates compatible with `sample`, in their original order,
/// never including `sample` itself.
pub fn verify_against_sample(w: &AffinityMatrix, sample: usize, candidates: &[usize]) -> Vec<usize> {
    candidates
        .iter()
        .copied()
        .filter(|&c| c != sample && w.get(sample, c))
        .collect()
}

/// Dispatches sample selection to the configured strategy. `restrict`
/// limits the pool to the given indices (used by later stages that sample
/// within an earlier consensus).
pub(crate) fn select_samples(
    table: &PriorityTable,
    strategy: SamplingStrategy,
    k: usize,
    restrict: Option<&[usize]>,
    seed: u64,
) -> Vec<usize> {
    match strategy {
        SamplingStrategy::Valid => sample_top(table, k, restrict),
        SamplingStrategy::ScoreOnly => sample_top_by_score(table, k, restrict),
        SamplingStrategy::Random => match restrict {
            None => sample_random(table.len(), k, seed),
            Some(pool) => sample_random(pool.len(), k, seed)
                .into_iter()
                .map(|p| pool[p])
                .collect(),
        },
    }
}
