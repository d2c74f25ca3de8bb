//! The full registration pipeline: compatibility analysis, the three
//! guided stages, and least-squares refinement.

use crate::compat::{build_affinity, compute_priorities};
use crate::config::PipelineConfig;
use crate::error::RegError;
use crate::geom::{consensus, rotation_about, ConsensusSet, CorrespondenceSet, RigidTransform, Stage};
use crate::refine::finalize;
use crate::stage1::solve_stage1;
use crate::stage2::solve_stage2;
use crate::stage3::{fallback_angle, solve_stage3};
use std::time::{Duration, Instant};

/// Everything a registration run reports back.
#[derive(Debug, Clone)]
pub struct RegistrationReport {
    /// The refined rigid motion.
    pub transform: RigidTransform,
    /// Members within tolerance of `transform` over the whole input.
    pub consensus: ConsensusSet,
    /// Consensus sizes after the translation, axis, and angle stages.
    /// Non-increasing: each stage filters the previous stage's survivors.
    pub stage_sizes: [usize; 3],
    /// Wall-clock duration of each stage.
    pub stage_times: [Duration; 3],
    /// The configuration the run used.
    pub config: PipelineConfig,
}

/// Registers the correspondence set: finds the rigid motion of maximal
/// consensus at tolerance `cfg.xi` and the least-squares polish of it.
///
/// Apart from the wall-clock entries of
/// [`stage_times`](RegistrationReport::stage_times), the report is a
/// deterministic function of the input set and the configuration.
pub fn register(set: &CorrespondenceSet, cfg: &PipelineConfig) -> Result<RegistrationReport, RegError> {
    cfg.validate()?;
    if set.len() < 3 {
        return Err(RegError::TooFewCorrespondences(set.len()));
    }
    let w = build_affinity(set, cfg.xi)?;
    let table = compute_priorities(&w);

    let started = Instant::now();
    let (t, i1) = solve_stage1(set, &w, &table, cfg)?;
    let time1 = started.elapsed();

    let started = Instant::now();
    let (axis, i2) = solve_stage2(set, &w, &table, &t, &i1, cfg);
    let time2 = started.elapsed();

    let started = Instant::now();
    let (theta, i3) = match solve_stage3(set, &t, &axis, &i2, cfg.xi) {
        Ok(found) => found,
        // No single angle satisfies any member: fall back to the
        // least-squares angle over the axis-stage survivors and let the
        // final recount sort out who is actually within tolerance.
        Err(RegError::NoAngle) => (
            fallback_angle(set, &t, &axis, i2.as_slice()),
            i2.retag(Stage::Angle),
        ),
        Err(other) => return Err(other),
    };
    let time3 = started.elapsed();

    let (transform, consensus_set) = match finalize(set, &axis, theta, &t, cfg.xi) {
        Ok(polished) => polished,
        // A degenerate fit means the staged consensus lies on a line or a
        // point; keep the staged transform and its recount.
        Err(RegError::DegenerateFit) => {
            let staged = RigidTransform::new(rotation_about(&axis, theta), t);
            let staged_consensus = consensus(&staged, set, cfg.xi);
            (staged, staged_consensus)
        }
        Err(other) => return Err(other),
    };

    Ok(RegistrationReport {
        transform,
        consensus: consensus_set,
        stage_sizes: [i1.len(), i2.len(), i3.len()],
        stage_times: [time1, time2, time3],
        config: *cfg,
    })
}
