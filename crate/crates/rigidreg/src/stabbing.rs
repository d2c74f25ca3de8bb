//! Interval stabbing: find a point contained in the largest number of closed
//! intervals, on the line or on the circle.
//!
//! Both variants sweep sorted endpoints once. Intervals carry an `owner`
//! (a correspondence index); a stabber counts each owner at most once, so an
//! owner whose arc was split into several pieces still contributes one.

use crate::geom::{acos_clamped, wrap_angle};
use std::f64::consts::TAU;

/// A closed interval `[lo, hi]` on the line, owned by a correspondence.
/// Zero-width intervals (`lo == hi`) are legal and stabbed only at the point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub owner: usize,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, owner: usize) -> Self {
        debug_assert!(lo.is_finite() && hi.is_finite() && lo <= hi);
        Self { lo, hi, owner }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// A closed arc on the unit circle, angles in `[0, 2π)`.
///
/// `start <= end` covers `[start, end]`; `start > end` wraps through zero.
/// The full circle is encoded as `[0, 2π]` (see [`CircularArc::full`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircularArc {
    pub start: f64,
    pub end: f64,
    pub owner: usize,
}

impl CircularArc {
    /// Normalizes both endpoints into `[0, 2π)`. A span of `2π` or more
    /// (before normalization) becomes the full circle.
    pub fn new(start: f64, end: f64, owner: usize) -> Self {
        debug_assert!(start.is_finite() && end.is_finite());
        if end - start >= TAU {
            return Self::full(owner);
        }
        Self {
            start: wrap_angle(start),
            end: wrap_angle(end),
            owner,
        }
    }

    /// The arc covering the whole circle.
    pub fn full(owner: usize) -> Self {
        Self {
            start: 0.0,
            end: TAU,
            owner,
        }
    }

    pub fn is_full(&self) -> bool {
        self.end - self.start >= TAU
    }

    /// Closed membership of an angle in `[0, 2π)`.
    pub fn contains(&self, theta: f64) -> bool {
        if self.is_full() {
            return true;
        }
        if self.start <= self.end {
            self.start <= theta && theta <= self.end
        } else {
            theta >= self.start || theta <= self.end
        }
    }
}

/// Appends the arcs where `cos(angle − center)` lies in `[c_lo, c_hi]`.
///
/// This is the common solution shape of the per-candidate constraints: a
/// band on a cosine. Empty when the band misses `[−1, 1]`, the full circle
/// when it covers it, one arc when it touches one end, two arcs symmetric
/// about `center` otherwise.
pub(crate) fn cos_band_arcs(center: f64, c_lo: f64, c_hi: f64, owner: usize, out: &mut Vec<CircularArc>) {
    if c_lo > 1.0 || c_hi < -1.0 {
        return;
    }
    if c_lo <= -1.0 && c_hi >= 1.0 {
        out.push(CircularArc::full(owner));
        return;
    }
    if c_hi >= 1.0 {
        // One arc through `center`.
        let b = acos_clamped(c_lo);
        out.push(CircularArc::new(center - b, center + b, owner));
    } else if c_lo <= -1.0 {
        // One arc through the antipode of `center`.
        let a = acos_clamped(c_hi);
        out.push(CircularArc::new(center + a, center + TAU - a, owner));
    } else {
        let a = acos_clamped(c_hi);
        let b = acos_clamped(c_lo);
        out.push(CircularArc::new(center + a, center + b, owner));
        out.push(CircularArc::new(center - b, center - a, owner));
    }
}

/// Moves a stabber from the arc boundary the sweep reports (a left
/// endpoint) to the midpoint of the stabbed arcs' common intersection.
/// Membership of every stabbed owner is preserved; the point just stops
/// being boundary-exact, so downstream recounts of the same constraints
/// are not at the mercy of 1-ulp rounding. `stabbed` must be sorted.
pub(crate) fn interior_stabber(arcs: &[CircularArc], stabbed: &[usize], stabber: f64) -> f64 {
    let mut min_back = f64::INFINITY;
    let mut min_fwd = f64::INFINITY;
    let mut constrained = false;
    // An owner may have several arcs; only the ones holding the stabber
    // constrain the move.
    for arc in arcs {
        if arc.is_full() || stabbed.binary_search(&arc.owner).is_err() || !arc.contains(stabber) {
            continue;
        }
        let span = (arc.end - arc.start).rem_euclid(TAU);
        let pos = (stabber - arc.start).rem_euclid(TAU).min(span);
        min_back = min_back.min(pos);
        min_fwd = min_fwd.min(span - pos);
        constrained = true;
    }
    if !constrained {
        return stabber;
    }
    wrap_angle(stabber + 0.5 * (min_fwd - min_back))
}

/// Result of a stabbing query. `count == stabbed.len()` and every owner in
/// `stabbed` (sorted, deduplicated) contains `stabber`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabResult {
    pub stabber: f64,
    pub count: usize,
    pub stabbed: Vec<usize>,
}

impl StabResult {
    fn empty() -> Self {
        Self {
            stabber: 0.0,
            count: 0,
            stabbed: Vec::new(),
        }
    }
}

/// Maximizes the number of distinct owners whose closed interval contains a
/// single point.
///
/// The returned stabber is the smallest-coordinate left endpoint that
/// achieves the maximum, which makes the result deterministic.
pub fn stab_linear(intervals: &[Interval]) -> StabResult {
    if intervals.is_empty() {
        return StabResult::empty();
    }

    // Dense owner ids so the sweep can track per-owner active counts in a
    // flat vector.
    let mut owners: Vec<usize> = intervals.iter().map(|iv| iv.owner).collect();
    owners.sort_unstable();
    owners.dedup();

    // Events: left endpoints sort before right endpoints at equal
    // coordinates, so touching closed intervals count as overlapping.
    let mut events: Vec<(f64, u8, u32)> = Vec::with_capacity(intervals.len() * 2);
    for iv in intervals {
        debug_assert!(iv.lo.is_finite() && iv.hi.is_finite() && iv.lo <= iv.hi);
        let id = owners.binary_search(&iv.owner).unwrap() as u32;
        events.push((iv.lo, 0, id));
        events.push((iv.hi, 1, id));
    }
    events.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut active = vec![0u32; owners.len()];
    let mut distinct = 0usize;
    let mut best = 0usize;
    let mut stabber = 0.0f64;
    for &(coord, kind, id) in &events {
        let a = &mut active[id as usize];
        if kind == 0 {
            *a += 1;
            if *a == 1 {
                distinct += 1;
                if distinct > best {
                    best = distinct;
                    stabber = coord;
                }
            }
        } else {
            *a -= 1;
            if *a == 0 {
                distinct -= 1;
            }
        }
    }

    let mut stabbed: Vec<usize> = intervals
        .iter()
        .filter(|iv| iv.contains(stabber))
        .map(|iv| iv.owner)
        .collect();
    stabbed.sort_unstable();
    stabbed.dedup();
    debug_assert_eq!(stabbed.len(), best);

    StabResult {
        stabber,
        count: best,
        stabbed,
    }
}

/// Circular stabbing over arcs in `[0, 2π)`.
///
/// Wrapping arcs are split at zero into two linear pieces with the same
/// owner; the owner-level counting of [`stab_linear`] keeps split arcs from
/// counting twice. The stabber is reported in `[0, 2π)`.
pub fn stab_circular(arcs: &[CircularArc]) -> StabResult {
    if arcs.is_empty() {
        return StabResult::empty();
    }
    let mut pieces: Vec<Interval> = Vec::with_capacity(arcs.len() + 4);
    for a in arcs {
        debug_assert!(
            (0.0..TAU).contains(&a.start) && (0.0..=TAU).contains(&a.end),
            "arcs must be normalized via CircularArc::new or ::full"
        );
        if a.is_full() {
            pieces.push(Interval::new(0.0, TAU, a.owner));
        } else if a.start <= a.end {
            pieces.push(Interval::new(a.start, a.end, a.owner));
        } else {
            pieces.push(Interval::new(a.start, TAU, a.owner));
            pieces.push(Interval::new(0.0, a.end, a.owner));
        }
    }
    let mut res = stab_linear(&pieces);
    res.stabber = wrap_angle(res.stabber);
    res
}
