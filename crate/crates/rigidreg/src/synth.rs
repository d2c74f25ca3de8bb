//! Synthetic registration instances for tests and benchmarks.
//!
//! The protocol: draw a source cloud uniformly in the unit cube, move it by
//! a uniformly random rigid motion (rotation uniform over SO(3), translation
//! uniform in a ball of radius `t_max`), perturb inlier targets inside a
//! noise ball, and replace an outlier fraction `ρ` of the targets with
//! points uniform in a large ball around the origin.

use crate::error::RegError;
use crate::geom::{CorrespondenceSet, RigidTransform};
use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

/// Parameters of one synthetic instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    /// Number of correspondences.
    pub n: usize,
    /// Outlier ratio in `[0, 1)`; `⌈ρn⌉` targets are replaced.
    pub rho: f64,
    /// Inlier targets are perturbed uniformly inside this ball.
    pub noise_radius: f64,
    /// Outlier targets are drawn uniformly inside this origin-centered ball.
    pub outlier_radius: f64,
    /// The true translation is drawn uniformly inside this ball.
    pub t_max: f64,
    pub seed: u64,
}

impl SynthConfig {
    /// The benchmark protocol defaults: noise 0.02, outlier ball 5, ‖t‖ ≤ 1.
    pub fn new(n: usize, rho: f64, seed: u64) -> Self {
        Self {
            n,
            rho,
            noise_radius: 0.02,
            outlier_radius: 5.0,
            t_max: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), RegError> {
        if self.n == 0 {
            return Err(RegError::InvalidConfig("synth needs n >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(RegError::InvalidConfig(format!(
                "outlier ratio must lie in [0, 1), got {}",
                self.rho
            )));
        }
        for (name, v) in [
            ("noise_radius", self.noise_radius),
            ("outlier_radius", self.outlier_radius),
            ("t_max", self.t_max),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(RegError::InvalidConfig(format!(
                    "{name} must be nonnegative and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// A generated instance: the correspondences, the motion that produced them,
/// and which indices were generated as inliers.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthInstance {
    pub set: CorrespondenceSet,
    pub truth: RigidTransform,
    pub inlier_mask: Vec<bool>,
}

impl SynthInstance {
    pub fn true_inliers(&self) -> usize {
        self.inlier_mask.iter().filter(|&&m| m).count()
    }
}

/// A rotation matrix distributed uniformly over SO(3), via a uniform unit
/// quaternion built from three uniform variates.
pub fn random_rotation(rng: &mut impl Rng) -> Matrix3<f64> {
    let u1: f64 = rng.gen();
    let u2: f64 = rng.gen();
    let u3: f64 = rng.gen();
    let a = (1.0 - u1).sqrt();
    let b = u1.sqrt();
    let q = Quaternion::new(
        b * (TAU * u3).cos(),
        a * (TAU * u2).sin(),
        a * (TAU * u2).cos(),
        b * (TAU * u3).sin(),
    );
    UnitQuaternion::from_quaternion(q)
        .to_rotation_matrix()
        .into_inner()
}

/// A point uniform in the closed ball of the given radius, by rejection
/// from the bounding cube.
pub fn sample_in_ball(rng: &mut impl Rng, radius: f64) -> Vector3<f64> {
    if radius == 0.0 {
        return Vector3::zeros();
    }
    loop {
        let v = Vector3::new(
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
        );
        if v.norm_squared() <= 1.0 {
            return v * radius;
        }
    }
}

/// Generates one instance; fully determined by `cfg` (including the seed).
///
/// Panics on an invalid configuration; call [`SynthConfig::validate`] first
/// when the parameters come from user input.
pub fn generate(cfg: &SynthConfig) -> SynthInstance {
    cfg.validate().expect("invalid synth configuration");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let truth = RigidTransform::new(random_rotation(&mut rng), sample_in_ball(&mut rng, cfg.t_max));

    let xs: Vec<Vector3<f64>> = (0..cfg.n)
        .map(|_| Vector3::new(rng.gen(), rng.gen(), rng.gen()))
        .collect();

    corrupt(cfg, &mut rng, truth, xs)
}

/// Like [`generate`], but moves a caller-supplied source cloud (for example
/// a real scan) instead of drawing unit-cube points; `cfg.n` is ignored in
/// favor of `source.len()`.
pub fn generate_from(cfg: &SynthConfig, source: &[Vector3<f64>]) -> SynthInstance {
    let eff = SynthConfig {
        n: source.len(),
        ..*cfg
    };
    eff.validate().expect("invalid synth configuration");
    let mut rng = ChaCha8Rng::seed_from_u64(eff.seed);

    let truth = RigidTransform::new(random_rotation(&mut rng), sample_in_ball(&mut rng, eff.t_max));

    corrupt(&eff, &mut rng, truth, source.to_vec())
}

/// Applies the truth motion, noise, and outlier replacement to a finished
/// source cloud. `cfg.n` must equal `xs.len()`.
fn corrupt(
    cfg: &SynthConfig,
    rng: &mut ChaCha8Rng,
    truth: RigidTransform,
    xs: Vec<Vector3<f64>>,
) -> SynthInstance {
    debug_assert_eq!(cfg.n, xs.len());

    // Choose which indices become outliers: the first ⌈ρn⌉ of a partial
    // Fisher-Yates shuffle.
    let n_out = (cfg.rho * cfg.n as f64).ceil() as usize;
    debug_assert!(n_out <= cfg.n);
    let mut order: Vec<usize> = (0..cfg.n).collect();
    for i in 0..n_out {
        let j = rng.gen_range(i..cfg.n);
        order.swap(i, j);
    }
    let mut inlier_mask = vec![true; cfg.n];
    for &i in &order[..n_out] {
        inlier_mask[i] = false;
    }

    let pairs: Vec<(Vector3<f64>, Vector3<f64>)> = xs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let y = if inlier_mask[i] {
                truth.apply(x) + sample_in_ball(rng, cfg.noise_radius)
            } else {
                sample_in_ball(rng, cfg.outlier_radius)
            };
            (*x, y)
        })
        .collect();

    SynthInstance {
        set: CorrespondenceSet::from_pairs(pairs),
        truth,
        inlier_mask,
    }
}
