//! Error type shared by the registration pipeline.

use thiserror::Error;

/// Everything that can go wrong while registering a correspondence set.
///
/// The `Signal*` prefixes in the messages are stable tokens: callers (and the
/// CLI) match on them when reporting failures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegError {
    /// Registration needs at least three correspondences.
    #[error("SignalTooFewCorrespondences: need at least 3 correspondences, got {0}")]
    TooFewCorrespondences(usize),

    /// The compatibility matrix is dense and bit-packed; very large inputs
    /// are rejected instead of silently allocating gigabytes.
    #[error("SignalTooManyCorrespondences: {n} correspondences exceed the supported maximum of {max}")]
    TooManyCorrespondences { n: usize, max: usize },

    /// The translation stage had no usable sample to seed the search.
    #[error("SignalNoSamples: no usable sample for the translation stage")]
    NoSamples,

    /// Every axis-stage sample had near-zero displacement, so no axis
    /// constraint could be formed.
    #[error("SignalDegenerateAxis: every axis sample has near-zero displacement")]
    DegenerateAxis,

    /// Every angle interval came back empty.
    #[error("SignalNoAngle: every angle interval is empty")]
    NoAngle,

    /// A rigid fit was requested on fewer than three points.
    #[error("SignalTooFewInliers: rigid fit needs at least 3 correspondences, got {0}")]
    TooFewInliers(usize),

    /// The points handed to the rigid fit are collinear or coincident, so
    /// the rotation is not determined.
    #[error("SignalDegenerateFit: fit points are collinear or coincident")]
    DegenerateFit,

    /// A pipeline parameter is out of range.
    #[error("SignalInvalidConfig: {0}")]
    InvalidConfig(String),
}
