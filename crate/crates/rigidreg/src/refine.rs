//! Least-squares refinement of a staged estimate.
//!
//! The staged search returns a decomposed transform built from sampled
//! geometry; refinement recounts its consensus under the full residual,
//! fits the least-squares rigid motion to that consensus, and repeats the
//! recount-fit step once more, keeping whichever roundtrip ends with the
//! larger consensus.

use crate::error::RegError;
use crate::geom::{consensus, kabsch_rotation, rotation_about, ConsensusSet, CorrespondenceSet, RigidTransform};
use nalgebra::{Matrix3, Vector3};

/// Relative floor on the second singular value of the cross-covariance:
/// below it the points are (numerically) collinear and the rotation about
/// that line is unconstrained.
const DEGENERACY_RATIO: f64 = 1e-12;

/// The least-squares rigid motion taking the sources onto the targets of
/// the given members: centroid-aligned cross-covariance, SVD, proper
/// rotation, then the translation that matches the centroids.
pub fn fit_rigid(set: &CorrespondenceSet, indices: &[usize]) -> Result<RigidTransform, RegError> {
    if indices.len() < 3 {
        return Err(RegError::TooFewInliers(indices.len()));
    }
    let inv = 1.0 / indices.len() as f64;
    let mut x_bar = Vector3::zeros();
    let mut y_bar = Vector3::zeros();
    for &i in indices {
        let c = set.get(i);
        x_bar += c.x;
        y_bar += c.y;
    }
    x_bar *= inv;
    y_bar *= inv;

    let mut h = Matrix3::zeros();
    for &i in indices {
        let c = set.get(i);
        h += (c.x - x_bar) * (c.y - y_bar).transpose();
    }
    let singular = h.svd(false, false).singular_values;
    if singular[0] == 0.0 || singular[1] < DEGENERACY_RATIO * singular[0] {
        return Err(RegError::DegenerateFit);
    }
    let rotation = kabsch_rotation(&h);
    Ok(RigidTransform::new(rotation, y_bar - rotation * x_bar))
}

/// Polishes a decomposed estimate `(axis, theta, t)`.
///
/// Recounts the full-residual consensus of the staged transform, fits the
/// least-squares motion to it, recounts, fits once more, and returns the
/// roundtrip with the larger consensus. A first fit with too few members
/// returns the staged transform and its consensus unchanged; a degenerate
/// first fit propagates [`RegError::DegenerateFit`] for the caller to
/// handle. Failures of the second fit keep the first fit's answer.
pub fn finalize(
    set: &CorrespondenceSet,
    axis: &Vector3<f64>,
    theta: f64,
    t: &Vector3<f64>,
    xi: f64,
) -> Result<(RigidTransform, ConsensusSet), RegError> {
    let staged = RigidTransform::new(rotation_about(axis, theta), *t);
    let c0 = consensus(&staged, set, xi);

    let first = match fit_rigid(set, c0.as_slice()) {
        Ok(tf) => tf,
        Err(RegError::TooFewInliers(_)) => return Ok((staged, c0)),
        Err(e) => return Err(e),
    };
    let c1 = consensus(&first, set, xi);

    let Ok(second) = fit_rigid(set, c1.as_slice()) else {
        return Ok((first, c1));
    };
    let c2 = consensus(&second, set, xi);

    if c2.len() >= c1.len() {
        Ok((second, c2))
    } else {
        Ok((first, c1))
    }
}
