//! Stage III: rotation angle search.
//!
//! With the translation `t` and unit axis `r` fixed, split each source
//! point into components along and across the axis. Rotation by `θ` keeps
//! the axial component and turns the planar one, so the squared residual
//! of a pair is `K − 2P cos(θ − θ₀)` with `P = ‖a⊥‖·‖x⊥‖` for the moved
//! target `a = y − t`. The tolerance turns into a single closed window of
//! angles per pair, and one circular stabbing pass finds the best angle.

use crate::error::RegError;
use crate::geom::{acos_clamped, wrap_angle, ConsensusSet, Correspondence, CorrespondenceSet, Stage};
use crate::stabbing::{interior_stabber, stab_circular, CircularArc};
use nalgebra::Vector3;

/// The set of angles bringing one pair within tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleWindow {
    /// No angle brings the pair within the tolerance.
    Empty,
    /// Every angle does: the pair sits (numerically) on the axis.
    Full,
    /// Angles within `halfwidth` of `center`, both in radians.
    Arc { center: f64, halfwidth: f64 },
}

/// Residual geometry of one pair about an axis.
struct AngleGeom {
    /// Squared residual offset: `‖a∥ − x∥‖² + ‖a⊥‖² + ‖x⊥‖²`.
    k: f64,
    /// Cosine amplitude `‖a⊥‖·‖x⊥‖`.
    p: f64,
    /// Angle of maximal agreement.
    center: f64,
}

fn angle_geom(c: &Correspondence, t: &Vector3<f64>, axis: &Vector3<f64>) -> AngleGeom {
    let a = c.y - t;
    let x_axial = axis * axis.dot(&c.x);
    let x_perp = c.x - x_axial;
    let a_axial = axis * axis.dot(&a);
    let a_perp = a - a_axial;
    let k = (a_axial - x_axial).norm_squared() + a_perp.norm_squared() + x_perp.norm_squared();
    let cosine = a_perp.dot(&x_perp);
    let sine = a_perp.dot(&axis.cross(&x_perp));
    AngleGeom {
        k,
        p: (cosine * cosine + sine * sine).sqrt(),
        center: sine.atan2(cosine),
    }
}

/// The window of rotation angles about `axis` for which the pair's full
/// residual `‖y − (R(θ)x + t)‖` stays within `xi`.
pub fn angle_interval(
    c: &Correspondence,
    t: &Vector3<f64>,
    axis: &Vector3<f64>,
    xi: f64,
) -> AngleWindow {
    let g = angle_geom(c, t, axis);
    if g.p == 0.0 {
        return if g.k <= xi * xi {
            AngleWindow::Full
        } else {
            AngleWindow::Empty
        };
    }
    // ‖residual‖² = K − 2P cos(θ − θ₀) ≤ ξ².
    let c0 = (g.k - xi * xi) / (2.0 * g.p);
    if c0 > 1.0 {
        AngleWindow::Empty
    } else if c0 <= -1.0 {
        AngleWindow::Full
    } else {
        AngleWindow::Arc {
            center: g.center,
            halfwidth: acos_clamped(c0),
        }
    }
}

/// The angle maximizing the summed cosine agreement `Σ Pᵢ cos(θ − θ₀ᵢ)`
/// over the given indices: the least-squares angle. Used when no single
/// angle satisfies any window outright.
pub fn fallback_angle(
    set: &CorrespondenceSet,
    t: &Vector3<f64>,
    axis: &Vector3<f64>,
    indices: &[usize],
) -> f64 {
    let mut sin_sum = 0.0;
    let mut cos_sum = 0.0;
    for &i in indices {
        let g = angle_geom(set.get(i), t, axis);
        sin_sum += g.p * g.center.sin();
        cos_sum += g.p * g.center.cos();
    }
    if sin_sum == 0.0 && cos_sum == 0.0 {
        return 0.0;
    }
    wrap_angle(sin_sum.atan2(cos_sum))
}

/// Runs the angle stage over the axis-stage survivors: build each member's
/// angle window, stab, and return the angle moved to the midpoint of the
/// stabbed windows' intersection together with the stabbed members.
///
/// Errors with [`RegError::NoAngle`] when every window is empty, i.e. the
/// incoming axis cannot bring any member within tolerance.
pub fn solve_stage3(
    set: &CorrespondenceSet,
    t: &Vector3<f64>,
    axis: &Vector3<f64>,
    i2: &ConsensusSet,
    xi: f64,
) -> Result<(f64, ConsensusSet), RegError> {
    let mut arcs = Vec::with_capacity(i2.len());
    for &i in i2.iter() {
        match angle_interval(set.get(i), t, axis, xi) {
            AngleWindow::Empty => {}
            AngleWindow::Full => arcs.push(CircularArc::full(i)),
            AngleWindow::Arc { center, halfwidth } => {
                arcs.push(CircularArc::new(center - halfwidth, center + halfwidth, i));
            }
        }
    }
    if arcs.is_empty() {
        return Err(RegError::NoAngle);
    }
    let stab = stab_circular(&arcs);
    let theta = interior_stabber(&arcs, &stab.stabbed, stab.stabber);
    Ok((theta, ConsensusSet::new(stab.stabbed, Stage::Angle)))
}
