//! Core geometric types and operations: correspondences, rigid transforms,
//! axis-angle rotations, residuals, and consensus counting.

use nalgebra::{Matrix3, Vector3};

/// A putative match between a source point `x` and a target point `y`.
///
/// `index` is the position of the pair in its [`CorrespondenceSet`] and is
/// stable across all pipeline stages; consensus sets refer to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub x: Vector3<f64>,
    pub y: Vector3<f64>,
    pub index: usize,
}

/// An indexed collection of correspondences.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorrespondenceSet {
    items: Vec<Correspondence>,
}

impl CorrespondenceSet {
    /// Builds a set from `(x, y)` pairs, assigning indices by position.
    pub fn from_pairs<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (Vector3<f64>, Vector3<f64>)>,
    {
        let items = pairs
            .into_iter()
            .enumerate()
            .map(|(index, (x, y))| Correspondence { x, y, index })
            .collect();
        Self { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, index: usize) -> &Correspondence {
        &self.items[index]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Correspondence> {
        self.items.iter()
    }

    pub fn as_slice(&self) -> &[Correspondence] {
        &self.items
    }
}

/// A proper rigid motion `p ↦ R p + t` with `R ∈ SO(3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    /// Applies the motion to a point.
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// The inverse motion `p ↦ Rᵀ(p − t)`.
    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Registration residual `‖y − (R x + t)‖` of one correspondence.
    pub fn residual(&self, c: &Correspondence) -> f64 {
        (c.y - self.apply(&c.x)).norm()
    }
}

/// A rotation given by a unit axis and an angle in radians.
///
/// The axis is normalized into the upper hemisphere (`r₃ ≥ 0`, ties broken
/// by `r₂ ≥ 0`, then `r₁ ≥ 0`), which removes the `(r, θ)` / `(−r, −θ)`
/// ambiguity for the staged search: the axis stage only ever reports upper
/// hemisphere axes and the angle stage searches the full `[0, 2π)` turn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    axis: Vector3<f64>,
    angle: f64,
}

impl AxisAngle {
    /// Normalizes `axis` to unit length and the upper hemisphere. Flipping
    /// the axis negates the angle (wrapped into `[0, 2π)`), so the rotation
    /// described is unchanged.
    ///
    /// Panics if `axis` is zero or not finite.
    pub fn new(axis: Vector3<f64>, angle: f64) -> Self {
        let norm = axis.norm();
        assert!(
            norm.is_finite() && norm > 0.0 && angle.is_finite(),
            "axis-angle needs a nonzero finite axis and finite angle"
        );
        let unit = axis / norm;
        let canonical = hemisphere_normalize(unit);
        let angle = if canonical == unit { angle } else { -angle };
        Self {
            axis: canonical,
            angle: wrap_angle(angle),
        }
    }

    /// Decomposes a rotation matrix. Identity-like rotations get the
    /// vertical axis and a zero angle.
    pub fn from_rotation(rotation: &Matrix3<f64>) -> Self {
        match nalgebra::Rotation3::from_matrix_unchecked(*rotation).axis_angle() {
            Some((axis, angle)) if angle.abs() > 1e-12 => Self::new(axis.into_inner(), angle),
            _ => Self {
                axis: Vector3::z(),
                angle: 0.0,
            },
        }
    }

    pub fn axis(&self) -> Vector3<f64> {
        self.axis
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// The rotation matrix of this axis-angle pair.
    pub fn to_matrix(&self) -> Matrix3<f64> {
        rotation_about(&self.axis, self.angle)
    }
}

/// Flips a unit vector into the upper hemisphere: `r₃ ≥ 0`, with ties broken
/// by `r₂ ≥ 0` and then `r₁ ≥ 0`.
pub fn hemisphere_normalize(r: Vector3<f64>) -> Vector3<f64> {
    let flip = if r.z != 0.0 {
        r.z < 0.0
    } else if r.y != 0.0 {
        r.y < 0.0
    } else {
        r.x < 0.0
    };
    if flip {
        -r
    } else {
        r
    }
}

/// Rodrigues' formula: the rotation by `angle` about the unit vector `axis`,
/// `R = rrᵀ + sin θ [r]× + cos θ (I − rrᵀ)`.
pub fn rotation_about(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let outer = axis * axis.transpose();
    let cross = cross_matrix(axis);
    outer + cross * angle.sin() + (Matrix3::identity() - outer) * angle.cos()
}

/// Rodrigues' formula on an [`AxisAngle`].
pub fn rodrigues(aa: &AxisAngle) -> Matrix3<f64> {
    aa.to_matrix()
}

/// The skew-symmetric matrix `[v]×` with `[v]× w = v × w`.
pub fn cross_matrix(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Which stage of the pipeline produced a consensus set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Translation,
    Axis,
    Angle,
    Final,
}

/// A sorted, deduplicated set of correspondence indices together with the
/// stage that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsensusSet {
    indices: Vec<usize>,
    stage: Stage,
}

impl ConsensusSet {
    /// Sorts and deduplicates `indices`.
    pub fn new(mut indices: Vec<usize>, stage: Stage) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self { indices, stage }
    }

    pub fn empty(stage: Stage) -> Self {
        Self {
            indices: Vec::new(),
            stage,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.indices.iter()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    /// The same indices tagged with a different stage.
    pub fn retag(&self, stage: Stage) -> Self {
        Self {
            indices: self.indices.clone(),
            stage,
        }
    }
}

/// All correspondences whose residual under `transform` is within `xi`
/// (boundary included).
pub fn consensus(transform: &RigidTransform, set: &CorrespondenceSet, xi: f64) -> ConsensusSet {
    let indices = set
        .iter()
        .filter(|c| transform.residual(c) <= xi)
        .map(|c| c.index)
        .collect();
    ConsensusSet {
        indices,
        stage: Stage::Final,
    }
}

/// `acos` with the argument clamped into `[−1, 1]` so that values nudged
/// outside by rounding stay well defined.
pub(crate) fn acos_clamped(x: f64) -> f64 {
    x.clamp(-1.0, 1.0).acos()
}

/// Wraps an angle into `[0, 2π)`.
pub(crate) fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(std::f64::consts::TAU);
    if r >= std::f64::consts::TAU {
        0.0
    } else {
        r
    }
}

/// The proper rotation maximizing `tr(R H)` for the cross-covariance
/// `H = Σ xᵢ yᵢᵀ`, i.e. the least-squares rotation taking the `x` side onto
/// the `y` side. The sign correction on the smallest singular vector keeps
/// the determinant at `+1` instead of allowing a reflection.
pub(crate) fn kabsch_rotation(h: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = h.svd(true, true);
    let u = svd.u.expect("3x3 SVD always yields U");
    let v = svd.v_t.expect("3x3 SVD always yields Vᵀ").transpose();
    let sign = (v * u.transpose()).determinant().signum();
    v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, sign)) * u.transpose()
}
