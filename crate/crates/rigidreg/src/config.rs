//! Pipeline configuration.

use crate::error::RegError;

/// How the translation and axis stages pick their guiding samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingStrategy {
    /// Rank by compatibility priority (score-weighted degree). The default.
    #[default]
    Valid,
    /// Uniform random samples; ablation baseline.
    Random,
    /// Rank by raw compatibility score; ablation between the two above.
    ScoreOnly,
}

/// Parameters of the registration pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    /// Inlier threshold ξ on the residual; must be positive.
    pub xi: f64,
    /// Samples drawn for the translation stage.
    pub k_t: usize,
    /// Spheres each translation shell is discretized into.
    pub m: usize,
    /// Samples drawn for the axis stage.
    pub k_r: usize,
    /// Circles each axis band is discretized into.
    pub n: usize,
    /// Minimal branch width of the translation branch-and-bound.
    pub psi: f64,
    /// Seed for every randomized choice; fixing it makes runs reproducible.
    pub seed: u64,
    /// Filter stabbing candidates through the compatibility graph.
    pub use_verification: bool,
    /// Sample selection mode for the guided stages.
    pub sampling: SamplingStrategy,
}

impl PipelineConfig {
    /// The default hyperparameters with the given inlier threshold.
    pub fn new(xi: f64) -> Self {
        Self {
            xi,
            k_t: 15,
            m: 2,
            k_r: 8,
            n: 2,
            psi: 1e-3,
            seed: 0,
            use_verification: true,
            sampling: SamplingStrategy::Valid,
        }
    }

    /// Checks every parameter range.
    pub fn validate(&self) -> Result<(), RegError> {
        if !(self.xi.is_finite() && self.xi > 0.0) {
            return Err(RegError::InvalidConfig(format!(
                "xi must be positive and finite, got {}",
                self.xi
            )));
        }
        if self.k_t < 1 {
            return Err(RegError::InvalidConfig("k_t must be at least 1".into()));
        }
        if self.m < 1 {
            return Err(RegError::InvalidConfig("m must be at least 1".into()));
        }
        if self.k_r < 1 {
            return Err(RegError::InvalidConfig("k_r must be at least 1".into()));
        }
        if self.n < 1 {
            return Err(RegError::InvalidConfig("n must be at least 1".into()));
        }
        if !(self.psi.is_finite() && self.psi > 0.0) {
            return Err(RegError::InvalidConfig(format!(
                "psi must be positive and finite, got {}",
                self.psi
            )));
        }
        Ok(())
    }
}
