use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::cloud::PointCloud;
use super::linalg::{self, Mat3};
use super::point::{Point3, Vector3};
use super::rotation::{EulerAngles, RotationMatrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Tolerance admitting matrices published with three-decimal rounding.
pub const RELAXED_TOLERANCE: f64 = 5e-3;

pub type Mat4<T> = [[T; 4]; 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformMode {
    Rigid,
    Similarity,
}

impl TransformMode {
    pub fn name(self) -> &'static str {
        match self {
            TransformMode::Rigid => "rigid",
            TransformMode::Similarity => "similarity",
        }
    }
}

impl fmt::Display for TransformMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TransformMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rigid" => Ok(TransformMode::Rigid),
            "similarity" => Ok(TransformMode::Similarity),
            other => Err(Error::invalid(format!(
                "unknown transform mode '{other}' (expected rigid or similarity)"
            ))),
        }
    }
}

/// Homogeneous 4×4 similarity transform `p ↦ s·R·p + t`, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform<T> {
    m: Mat4<T>,
    mode: TransformMode,
}

/// Scale, rotation, translation and Euler angles of a [`Transform`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition<T> {
    pub scale: T,
    pub rotation: RotationMatrix<T>,
    pub translation: Vector3<T>,
    pub angles: EulerAngles<T>,
}

fn assemble<T: Real>(block: &Mat3<T>, t: Vector3<T>) -> Mat4<T> {
    let (z, o) = (T::zero(), T::one());
    [
        [block[0][0], block[0][1], block[0][2], t.x],
        [block[1][0], block[1][1], block[1][2], t.y],
        [block[2][0], block[2][1], block[2][2], t.z],
        [z, z, z, o],
    ]
}

/// Build `[s·R | t; 0 0 0 1]`: rotate and scale first, then translate.
pub fn make_transform<T: Real>(
    rotation: &RotationMatrix<T>,
    translation: Vector3<T>,
    scale: T,
) -> Result<Transform<T>> {
    if !(scale > T::zero()) || !scale.is_finite() {
        return Err(Error::invalid(format!("scale must be positive and finite, got {}", scale)));
    }
    if !translation.is_finite() {
        return Err(Error::invalid("translation must be finite"));
    }
    // Re-validate in case the rotation was assembled by hand.
    RotationMatrix::from_rows(*rotation.rows(), T::lit(T::STRICT_TOL))?;
    let block = linalg::scale(rotation.rows(), scale);
    let mode = if scale == T::one() { TransformMode::Rigid } else { TransformMode::Similarity };
    Ok(Transform { m: assemble(&block, translation), mode })
}

/// Split a transform into scale, nearest rotation, translation and angles.
///
/// `tolerance` bounds `max |QᵀQ − I|` where `Q` is the linear block divided
/// by its scale.
pub fn decompose_transform<T: Real>(m: &Transform<T>, tolerance: T) -> Result<Decomposition<T>> {
    decompose_matrix(&m.m, tolerance)
}

fn decompose_matrix<T: Real>(m: &Mat4<T>, tolerance: T) -> Result<Decomposition<T>> {
    let block = linear_block(m);
    let d = linalg::det(&block);
    if !(d > T::zero()) || !d.is_finite() {
        return Err(Error::ReflectionOrDegenerate { det: d.as_f64() });
    }
    let scale = d.cbrt();
    let normalized = linalg::scale(&block, T::one() / scale);
    let deviation = linalg::orthonormality_error(&normalized);
    if deviation > tolerance {
        return Err(Error::NotASimilarity { deviation: deviation.as_f64(), tolerance: tolerance.as_f64() });
    }
    let rows =
        linalg::nearest_rotation(&normalized).ok_or(Error::ReflectionOrDegenerate { det: d.as_f64() })?;
    let rotation = RotationMatrix::from_rows_unchecked(rows);
    Ok(Decomposition {
        scale,
        rotation,
        translation: Vector3::new(m[0][3], m[1][3], m[2][3]),
        angles: rotation.to_euler(),
    })
}

fn linear_block<T: Real>(m: &Mat4<T>) -> Mat3<T> {
    [[m[0][0], m[0][1], m[0][2]], [m[1][0], m[1][1], m[1][2]], [m[2][0], m[2][1], m[2][2]]]
}

/// Inverse transform: `p ↦ R̃ᵀ·(p − t)/s` for similarities, computed through
/// the general 3×3 inverse so nearly-similar input matrices stay consistent.
pub fn invert_transform<T: Real>(m: &Transform<T>) -> Result<Transform<T>> {
    let block = m.linear();
    let inv = linalg::inverse(&block).ok_or(Error::NotInvertible)?;
    let t = -linalg::mul_vec(&inv, m.translation());
    Ok(Transform { m: assemble(&inv, t), mode: m.mode })
}

/// Anything a transform can be applied to.
pub trait Transformable<T: Real> {
    fn transformed_by(&self, m: &Transform<T>) -> Self;
}

impl<T: Real> Transformable<T> for Point3<T> {
    fn transformed_by(&self, m: &Transform<T>) -> Self {
        m.apply(*self)
    }
}

impl<T: Real> Transformable<T> for PointCloud<T> {
    fn transformed_by(&self, m: &Transform<T>) -> Self {
        if m.is_identity() {
            return self.clone();
        }
        self.map_points(|p| m.apply(p))
    }
}

/// Apply `m` to a point or a whole cloud. Colors, labels and tags pass through.
pub fn apply_transform<T: Real, X: Transformable<T>>(m: &Transform<T>, x: &X) -> X {
    x.transformed_by(m)
}

impl<T: Real> Transform<T> {
    pub fn identity() -> Self {
        Self { m: assemble(&linalg::identity(), Vector3::zero()), mode: TransformMode::Rigid }
    }

    pub fn from_translation(t: Vector3<T>) -> Self {
        Self { m: assemble(&linalg::identity(), t), mode: TransformMode::Rigid }
    }

    pub fn from_rotation(r: &RotationMatrix<T>) -> Self {
        Self { m: assemble(r.rows(), Vector3::zero()), mode: TransformMode::Rigid }
    }

    /// Validate an externally supplied matrix. The bottom row must be exactly
    /// `(0, 0, 0, 1)`; the linear block must be a positive multiple of a
    /// rotation within `tolerance`. The mode is rigid when the recovered scale
    /// is within `tolerance` of one.
    pub fn from_matrix(m: Mat4<T>, tolerance: T) -> Result<Self> {
        let d = Self::validate(&m, tolerance)?;
        let mode = if (d.scale - T::one()).abs() <= tolerance {
            TransformMode::Rigid
        } else {
            TransformMode::Similarity
        };
        Ok(Self { m, mode })
    }

    /// Like [`Transform::from_matrix`] but with an explicit mode; a rigid mode
    /// requires the scale to be one within `tolerance`.
    pub fn from_matrix_with_mode(m: Mat4<T>, mode: TransformMode, tolerance: T) -> Result<Self> {
        let d = Self::validate(&m, tolerance)?;
        if mode == TransformMode::Rigid && (d.scale - T::one()).abs() > tolerance {
            return Err(Error::InvalidTransform(format!(
                "mode is rigid but the linear block has scale {}",
                d.scale
            )));
        }
        Ok(Self { m, mode })
    }

    fn validate(m: &Mat4<T>, tolerance: T) -> Result<Decomposition<T>> {
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTransform("matrix has non-finite entries".into()));
        }
        let (z, o) = (T::zero(), T::one());
        if m[3] != [z, z, z, o] {
            return Err(Error::InvalidTransform(format!(
                "bottom row must be (0, 0, 0, 1), got ({}, {}, {}, {})",
                m[3][0], m[3][1], m[3][2], m[3][3]
            )));
        }
        decompose_matrix(m, tolerance)
    }

    pub fn matrix(&self) -> &Mat4<T> {
        &self.m
    }

    pub fn mode(&self) -> TransformMode {
        self.mode
    }

    /// Upper-left 3×3 block, `s·R`.
    pub fn linear(&self) -> Mat3<T> {
        linear_block(&self.m)
    }

    pub fn translation(&self) -> Vector3<T> {
        Vector3::new(self.m[0][3], self.m[1][3], self.m[2][3])
    }

    /// Cube root of the linear block's determinant.
    pub fn scale(&self) -> T {
        linalg::det(&self.linear()).cbrt()
    }

    pub fn is_identity(&self) -> bool {
        self.m == Self::identity().m
    }

    #[inline]
    pub fn apply(&self, p: Point3<T>) -> Point3<T> {
        let m = &self.m;
        Point3::new(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z + m[0][3],
            m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z + m[1][3],
            m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z + m[2][3],
        )
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        let block = linalg::mul(&self.linear(), &other.linear());
        let t = self.apply(other.translation());
        let mode = if self.mode == TransformMode::Rigid && other.mode == TransformMode::Rigid {
            TransformMode::Rigid
        } else {
            TransformMode::Similarity
        };
        Self { m: assemble(&block, t), mode }
    }

    pub fn inverse(&self) -> Result<Self> {
        invert_transform(self)
    }

    pub fn decompose(&self) -> Result<Decomposition<T>> {
        decompose_transform(self, T::lit(RELAXED_TOLERANCE))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut worst = T::zero();
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((self.m[i][j] - other.m[i][j]).abs());
            }
        }
        worst
    }

    pub fn cast<U: Real>(&self) -> Transform<U> {
        Transform { m: self.m.map(|row| row.map(|v| U::lit(v.as_f64()))), mode: self.mode }
    }
}
