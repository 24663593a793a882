use serde::{Deserialize, Serialize};

use super::linalg::{self, Mat3};
use super::point::Point3;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Rotation angles in radians about the X, Y and Z axes. Composed as
/// `Rz(yaw) · Ry(pitch) · Rx(roll)`, so roll is applied first.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerAngles<T> {
    pub roll: T,
    pub pitch: T,
    pub yaw: T,
}

impl<T: Real> EulerAngles<T> {
    pub fn new(roll: T, pitch: T, yaw: T) -> Self {
        Self { roll, pitch, yaw }
    }

    pub fn is_finite(&self) -> bool {
        self.roll.is_finite() && self.pitch.is_finite() && self.yaw.is_finite()
    }
}

/// Proper orthonormal 3×3 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix<T>(Mat3<T>);

impl<T: Real> RotationMatrix<T> {
    pub fn identity() -> Self {
        Self(linalg::identity())
    }

    /// Validates orthonormality and `det = +1` within `tol`.
    pub fn from_rows(rows: Mat3<T>, tol: T) -> Result<Self> {
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("rotation has non-finite entries"));
        }
        let ortho = linalg::orthonormality_error(&rows);
        if ortho > tol {
            return Err(Error::invalid(format!(
                "rotation is not orthonormal (max |RᵀR − I| = {:e})",
                ortho.as_f64()
            )));
        }
        let d = linalg::det(&rows);
        if (d - T::one()).abs() > tol {
            return Err(Error::invalid(format!("rotation determinant is {:e}, expected +1", d.as_f64())));
        }
        Ok(Self(rows))
    }

    pub(crate) fn from_rows_unchecked(rows: Mat3<T>) -> Self {
        Self(rows)
    }

    pub fn rows(&self) -> &Mat3<T> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(linalg::transpose(&self.0))
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self(linalg::mul(&self.0, &other.0))
    }

    pub fn rotate(&self, p: Point3<T>) -> Point3<T> {
        linalg::mul_vec(&self.0, p)
    }

    /// Rotation angle in radians, in `[0, π]`.
    pub fn angle(&self) -> T {
        let c = (linalg::trace(&self.0) - T::one()) / T::lit(2.0);
        c.max(-T::one()).min(T::one()).acos()
    }

    /// Recover angles such that `euler_to_rotation(angles)` reproduces `self`.
    ///
    /// At gimbal lock (`|cos pitch| < 1e-9`) roll is pinned to zero and the
    /// remaining rotation about the vertical is carried by yaw.
    pub fn to_euler(&self) -> EulerAngles<T> {
        let r = &self.0;
        let sin_pitch = -r[2][0];
        let cos_pitch = r[0][0].hypot(r[1][0]);
        let pitch = sin_pitch.atan2(cos_pitch);
        if cos_pitch < T::lit(1e-9) {
            let yaw = (-r[0][1]).atan2(r[1][1]);
            EulerAngles::new(T::zero(), pitch, yaw)
        } else {
            let roll = r[2][1].atan2(r[2][2]);
            let yaw = r[1][0].atan2(r[0][0]);
            EulerAngles::new(roll, pitch, yaw)
        }
    }
}

/// Elementary rotation about one coordinate axis (right-handed, angle in radians).
pub fn axis_rotation<T: Real>(axis: Axis, angle: T) -> Result<RotationMatrix<T>> {
    if !angle.is_finite() {
        return Err(Error::invalid("rotation angle must be finite"));
    }
    let (s, c) = angle.sin_cos();
    let (o, z) = (T::one(), T::zero());
    let rows = match axis {
        Axis::X => [[o, z, z], [z, c, -s], [z, s, c]],
        Axis::Y => [[c, z, s], [z, o, z], [-s, z, c]],
        Axis::Z => [[c, -s, z], [s, c, z], [z, z, o]],
    };
    Ok(RotationMatrix(rows))
}

/// `Rz(yaw) · Ry(pitch) · Rx(roll)`.
pub fn euler_to_rotation<T: Real>(angles: EulerAngles<T>) -> Result<RotationMatrix<T>> {
    if !angles.is_finite() {
        return Err(Error::invalid("Euler angles must be finite"));
    }
    let rx = axis_rotation(Axis::X, angles.roll)?;
    let ry = axis_rotation(Axis::Y, angles.pitch)?;
    let rz = axis_rotation(Axis::Z, angles.yaw)?;
    Ok(rz.compose(&ry).compose(&rx))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use super::*;

    fn close(a: &Mat3<f64>, b: &Mat3<f64>, tol: f64) -> bool {
        linalg::max_abs_diff(a, b) <= tol
    }

    #[test]
    fn zero_angle_is_identity() {
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let r = axis_rotation(axis, 0.0f64).unwrap();
            assert_eq!(r.rows(), &linalg::identity());
        }
    }

    #[test]
    fn quarter_turn_about_z() {
        let r = axis_rotation(Axis::Z, FRAC_PI_2).unwrap();
        let p = r.rotate(Point3::new(1.0, 0.0, 0.0));
        assert!((p.x).abs() < 1e-15 && (p.y - 1.0).abs() < 1e-15 && p.z == 0.0);
    }

    #[test]
    fn half_turn_about_y() {
        let r = axis_rotation(Axis::Y, PI).unwrap();
        let expected = [[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]];
        assert!(close(r.rows(), &expected, 1e-15));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(axis_rotation(Axis::X, f64::NAN).is_err());
        assert!(euler_to_rotation(EulerAngles::new(0.0, f64::INFINITY, 0.0)).is_err());
    }

    #[test]
    fn single_angle_euler_matches_axis() {
        let a = 0.7;
        let pairs = [
            (EulerAngles::new(a, 0.0, 0.0), Axis::X),
            (EulerAngles::new(0.0, a, 0.0), Axis::Y),
            (EulerAngles::new(0.0, 0.0, a), Axis::Z),
        ];
        for (angles, axis) in pairs {
            let e = euler_to_rotation(angles).unwrap();
            let r = axis_rotation(axis, a).unwrap();
            assert!(close(e.rows(), r.rows(), 0.0));
        }
    }

    #[test]
    fn euler_matches_explicit_product() {
        // Oracle: write out each elementary matrix and multiply by hand-rolled loops.
        let (roll, pitch, yaw): (f64, f64, f64) = (0.1, 0.2, 0.3);
        let rx = [[1.0, 0.0, 0.0], [0.0, roll.cos(), -roll.sin()], [0.0, roll.sin(), roll.cos()]];
        let ry = [[pitch.cos(), 0.0, pitch.sin()], [0.0, 1.0, 0.0], [-pitch.sin(), 0.0, pitch.cos()]];
        let rz = [[yaw.cos(), -yaw.sin(), 0.0], [yaw.sin(), yaw.cos(), 0.0], [0.0, 0.0, 1.0]];
        let matmul = |a: [[f64; 3]; 3], b: [[f64; 3]; 3]| {
            let mut c = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        c[i][j] += a[i][k] * b[k][j];
                    }
                }
            }
            c
        };
        let expected = matmul(matmul(rz, ry), rx);
        let r = euler_to_rotation(EulerAngles::new(roll, pitch, yaw)).unwrap();
        assert!(close(r.rows(), &expected, 1e-12));
    }

    #[test]
    fn euler_recovery_generic_and_gimbal() {
        for angles in [
            EulerAngles::new(0.4, -0.9, 2.5),
            EulerAngles::new(0.3, FRAC_PI_2, 0.2),
            EulerAngles::new(-1.1, -FRAC_PI_2, 0.8),
        ] {
            let r = euler_to_rotation(angles).unwrap();
            let back = euler_to_rotation(r.to_euler()).unwrap();
            assert!(close(r.rows(), back.rows(), 1e-9), "{angles:?}");
        }
        let locked = euler_to_rotation(EulerAngles::new(0.3, FRAC_PI_2, 0.2)).unwrap();
        assert_eq!(locked.to_euler().roll, 0.0);
    }

    #[test]
    fn from_rows_validates() {
        let bad = [[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(RotationMatrix::from_rows(bad, 1e-9).is_err());
        let mirror = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]];
        assert!(RotationMatrix::from_rows(mirror, 1e-9).is_err());
    }
}
