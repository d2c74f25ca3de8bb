//! Accuracy metrics and a plain RANSAC baseline to benchmark against.

use crate::error::RegError;
use crate::geom::{acos_clamped, consensus, ConsensusSet, CorrespondenceSet, RigidTransform};
use crate::refine::fit_rigid;
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Geodesic distance between two rotations, in degrees: the angle of the
/// relative rotation `R̂ᵀ R*`.
pub fn rotation_error(estimate: &Matrix3<f64>, truth: &Matrix3<f64>) -> f64 {
    let relative = estimate.transpose() * truth;
    acos_clamped((relative.trace() - 1.0) / 2.0).to_degrees()
}

/// Euclidean distance between two translations.
pub fn translation_error(estimate: &Vector3<f64>, truth: &Vector3<f64>) -> f64 {
    (estimate - truth).norm()
}

/// Precision, recall, and their harmonic mean for a kept-index set against
/// the ground-truth inlier mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InlierMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Scores the kept indices against the mask. Keeping nothing counts as
/// perfect precision when there was nothing to find, and zero otherwise;
/// recall of an instance without true inliers is one by convention.
pub fn inlier_metrics(kept: &[usize], truth_mask: &[bool]) -> InlierMetrics {
    let total_true = truth_mask.iter().filter(|&&m| m).count();
    let kept_true = kept.iter().filter(|&&i| truth_mask[i]).count();
    let precision = if kept.is_empty() {
        if total_true == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        kept_true as f64 / kept.len() as f64
    };
    let recall = if total_true == 0 {
        1.0
    } else {
        kept_true as f64 / total_true as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    InlierMetrics {
        precision,
        recall,
        f1,
    }
}

/// Strict success test: both errors must be below their thresholds.
pub fn success(rot_err_deg: f64, trans_err: f64, max_rot_deg: f64, max_trans: f64) -> bool {
    rot_err_deg < max_rot_deg && trans_err < max_trans
}

/// Plain RANSAC over minimal (three-point) samples: the baseline the staged
/// search is compared against. Fits each sampled triple, keeps the
/// transform of maximal consensus (first maximum wins), then refits on the
/// winning consensus and recounts. Deterministic in the seed.
pub fn ransac_baseline(
    set: &CorrespondenceSet,
    xi: f64,
    iterations: usize,
    seed: u64,
) -> Result<(RigidTransform, ConsensusSet), RegError> {
    let n = set.len();
    if n < 3 {
        return Err(RegError::TooFewCorrespondences(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(RigidTransform, ConsensusSet)> = None;
    for _ in 0..iterations {
        let mut triple = [0usize; 3];
        triple[0] = rng.gen_range(0..n);
        loop {
            triple[1] = rng.gen_range(0..n);
            if triple[1] != triple[0] {
                break;
            }
        }
        loop {
            triple[2] = rng.gen_range(0..n);
            if triple[2] != triple[0] && triple[2] != triple[1] {
                break;
            }
        }
        // Degenerate triples (collinear points) simply cost an iteration,
        // as they do in any minimal-sample loop.
        let Ok(tf) = fit_rigid(set, &triple) else {
            continue;
        };
        let members = consensus(&tf, set, xi);
        if best.as_ref().map_or(true, |(_, b)| members.len() > b.len()) {
            best = Some((tf, members));
        }
    }
    let Some((tf, members)) = best else {
        return Err(RegError::DegenerateFit);
    };
    match fit_rigid(set, members.as_slice()) {
        Ok(refit) => {
            let recount = consensus(&refit, set, xi);
            Ok((refit, recount))
        }
        Err(_) => Ok((tf, members)),
    }
}
