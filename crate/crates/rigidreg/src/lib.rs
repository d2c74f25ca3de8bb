//! Robust rigid 3D registration from putative point correspondences.
//!
//! Given pairs `(x_i, y_i)` that are supposed to satisfy `y_i = R x_i + t`
//! up to bounded noise, but where most pairs may be wrong, this crate finds
//! the rigid transform with the largest consensus set: the set of pairs whose
//! residual `‖y_i − (R x_i + t)‖` stays within an inlier threshold `ξ`.
//!
//! Instead of searching all six degrees of freedom at once, the search is
//! decomposed into three guided stages, each solved with interval stabbing:
//!
//! 1. **Translation** (3 DoF): a relaxed constraint that only compares
//!    distances, `|‖y_i − t‖ − ‖x_i‖| ≤ ξ`, confines `t` to a spherical
//!    shell around a sampled pair. The shell is discretized into spheres and
//!    each sphere is searched by a 1-D branch-and-bound over height with
//!    circular interval stabbing in the remaining angle.
//! 2. **Rotation axis** (2 DoF): with `t` fixed, inlier displacements are
//!    orthogonal to the axis up to a scaled tolerance. The feasible band on
//!    the unit sphere is sliced into circles and stabbed in closed form.
//! 3. **Rotation angle** (1 DoF): with `t` and the axis fixed, each pair
//!    constrains the angle to one arc; a single stabbing pass maximizes the
//!    consensus.
//!
//! Sampling is guided by a spatial-compatibility graph (rigidity preserves
//! pairwise distances), which keeps the stages effective even when fewer
//! than one pair in fifty is correct. A final SVD refinement polishes the
//! transform on the recovered consensus.
//!
//! The [`pipeline::register`] entry point runs the whole pipeline and is
//! deterministic for a fixed seed. [`synth`] generates benchmark instances
//! and [`eval`] provides error metrics plus a plain RANSAC baseline.

pub mod compat;
pub mod config;
pub mod error;
pub mod eval;
pub mod geom;
pub mod pipeline;
pub mod refine;
pub mod stabbing;
pub mod stage1;
pub mod stage2;
pub mod stage3;
pub mod synth;

pub use config::{PipelineConfig, SamplingStrategy};
pub use error::RegError;
pub use geom::{
    consensus, AxisAngle, ConsensusSet, Correspondence, CorrespondenceSet, RigidTransform, Stage,
};
pub use pipeline::{register, RegistrationReport};

