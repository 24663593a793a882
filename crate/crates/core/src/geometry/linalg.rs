//! Small fixed-size dense linear algebra for the 3×3 blocks used by the
//! transform kernel. Row-major throughout.

use super::point::Vector3;
use crate::scalar::Real;

pub type Mat3<T> = [[T; 3]; 3];

pub fn identity<T: Real>() -> Mat3<T> {
    let (o, z) = (T::one(), T::zero());
    [[o, z, z], [z, o, z], [z, z, o]]
}

pub fn mul<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut out = [[T::zero(); 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

pub fn transpose<T: Real>(a: &Mat3<T>) -> Mat3<T> {
    let mut out = *a;
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[j][i];
        }
    }
    out
}

pub fn scale<T: Real>(a: &Mat3<T>, s: T) -> Mat3<T> {
    a.map(|row| row.map(|v| v * s))
}

pub fn mul_vec<T: Real>(a: &Mat3<T>, v: Vector3<T>) -> Vector3<T> {
    Vector3::new(
        a[0][0] * v.x + a[0][1] * v.y + a[0][2] * v.z,
        a[1][0] * v.x + a[1][1] * v.y + a[1][2] * v.z,
        a[2][0] * v.x + a[2][1] * v.y + a[2][2] * v.z,
    )
}

pub fn det<T: Real>(a: &Mat3<T>) -> T {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

pub fn trace<T: Real>(a: &Mat3<T>) -> T {
    a[0][0] + a[1][1] + a[2][2]
}

/// Inverse by adjugate; `None` when the determinant is zero or not finite.
pub fn inverse<T: Real>(a: &Mat3<T>) -> Option<Mat3<T>> {
    let d = det(a);
    if d == T::zero() || !d.is_finite() {
        return None;
    }
    let c = |r0: usize, c0: usize, r1: usize, c1: usize| a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0];
    let adj = [
        [c(1, 1, 2, 2), -c(0, 1, 2, 2), c(0, 1, 1, 2)],
        [-c(1, 0, 2, 2), c(0, 0, 2, 2), -c(0, 0, 1, 2)],
        [c(1, 0, 2, 1), -c(0, 0, 2, 1), c(0, 0, 1, 1)],
    ];
    let inv = scale(&adj, T::one() / d);
    inv.iter().flatten().all(|v| v.is_finite()).then_some(inv)
}

/// Largest absolute entry of `aᵀa − I`.
pub fn orthonormality_error<T: Real>(a: &Mat3<T>) -> T {
    let ata = mul(&transpose(a), a);
    let id = identity::<T>();
    let mut worst = T::zero();
    for i in 0..3 {
        for j in 0..3 {
            worst = worst.max((ata[i][j] - id[i][j]).abs());
        }
    }
    worst
}

pub fn max_abs_diff<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> T {
    let mut worst = T::zero();
    for i in 0..3 {
        for j in 0..3 {
            worst = worst.max((a[i][j] - b[i][j]).abs());
        }
    }
    worst
}

fn column<T: Real>(a: &Mat3<T>, j: usize) -> Vector3<T> {
    Vector3::new(a[0][j], a[1][j], a[2][j])
}

/// Singular value decomposition `a = U·diag(σ)·Vᵀ` with σ sorted descending.
#[derive(Debug, Clone, Copy)]
pub struct Svd3<T> {
    /// Left singular vectors as columns. Columns with a zero singular value
    /// are left as zero vectors.
    pub u: Mat3<T>,
    pub sigma: [T; 3],
    /// Right singular vectors as columns; always orthonormal.
    pub v: Mat3<T>,
}

/// One-sided (Hestenes) Jacobi SVD. Singular values come out with high
/// relative accuracy, which matters for near-planar correspondence sets.
pub fn svd<T: Real>(a: &Mat3<T>) -> Svd3<T> {
    let mut w = *a;
    let mut v = identity::<T>();
    let eps = T::epsilon();

    for _sweep in 0..64 {
        let mut rotated = false;
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
            for row in &w {
                alpha = alpha + row[p] * row[p];
                beta = beta + row[q] * row[q];
                gamma = gamma + row[p] * row[q];
            }
            if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                continue;
            }
            rotated = true;
            let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
            let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
            let c = T::one() / (T::one() + t * t).sqrt();
            let s = c * t;
            for m in [&mut w, &mut v] {
                for row in m.iter_mut() {
                    let (xp, xq) = (row[p], row[q]);
                    row[p] = c * xp - s * xq;
                    row[q] = s * xp + c * xq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms = [0, 1, 2].map(|j| column(&w, j).norm());
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal));

    let mut u = [[T::zero(); 3]; 3];
    let mut vs = [[T::zero(); 3]; 3];
    let mut sigma = [T::zero(); 3];
    for (k, &j) in order.iter().enumerate() {
        sigma[k] = norms[j];
        for i in 0..3 {
            vs[i][k] = v[i][j];
            if norms[j] > T::zero() {
                u[i][k] = w[i][j] / norms[j];
            }
        }
    }
    Svd3 { u, sigma, v: vs }
}

/// Nearest proper rotation to `a` in the Frobenius sense: the orthogonal polar
/// factor with the sign of the least significant direction flipped when
/// needed so the result has determinant +1.
///
/// Requires the two leading singular values to be non-zero; returns `None`
/// otherwise (rank ≤ 1 leaves the rotation unobservable).
pub fn nearest_rotation<T: Real>(a: &Mat3<T>) -> Option<Mat3<T>> {
    let Svd3 { u, sigma, v } = svd(a);
    if !(sigma[1] > T::zero()) {
        return None;
    }
    let u1 = column(&u, 0);
    let mut u2 = column(&u, 1);
    u2 = u2 - u1 * u1.dot(u2);
    let n2 = u2.norm();
    if !(n2 > T::zero()) {
        return None;
    }
    u2 = u2 / n2;
    let u3 = u1.cross(u2);

    // With U = [u1 u2 u1×u2] proper, the determinant correction collapses to
    // the orientation of V.
    let mut v = v;
    if det(&v) < T::zero() {
        for row in v.iter_mut() {
            row[2] = -row[2];
        }
    }
    let uu = [[u1.x, u2.x, u3.x], [u1.y, u2.y, u3.y], [u1.z, u2.z, u3.z]];
    Some(mul(&uu, &transpose(&v)))
}
