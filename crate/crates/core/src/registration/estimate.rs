use super::CorrespondenceSet;
use crate::error::{Error, Result};
use crate::geometry::linalg::{self, Mat3};
use crate::geometry::{make_transform, Point3, RotationMatrix, Transform, TransformMode};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationResult<T> {
    pub transform: Transform<T>,
    /// `sqrt(mean ‖M·qᵢ − pᵢ‖²)`, meters.
    pub rmse: T,
    /// `‖M·qᵢ − pᵢ‖` in pair order, meters.
    pub residuals: Vec<T>,
    pub mode: TransformMode,
}

fn outer_sum<T: Real>(pairs: impl Iterator<Item = (Point3<T>, Point3<T>)>) -> Mat3<T> {
    let mut acc = [[T::zero(); 3]; 3];
    for (a, b) in pairs {
        let (a, b) = (a.to_array(), b.to_array());
        for i in 0..3 {
            for j in 0..3 {
                acc[i][j] = acc[i][j] + a[i] * b[j];
            }
        }
    }
    acc
}

fn centroid<T: Real>(points: impl Iterator<Item = Point3<T>>) -> Point3<T> {
    let mut n = 0usize;
    let sum = points.fold(Point3::zero(), |acc, p| {
        n += 1;
        acc + p
    });
    sum / T::lit(n as f64)
}

/// Least-squares transform mapping each source point onto its target,
/// `argmin Σ‖s·R·qᵢ + t − pᵢ‖²` with `s = 1` in rigid mode.
///
/// Closed form: the rotation is the determinant-corrected polar factor of the
/// centered cross-covariance, the scale is the corrected trace over the
/// source spread, and the translation matches the centroids.
pub fn estimate_transform<T: Real>(
    pairs: &CorrespondenceSet<T>,
    mode: TransformMode,
) -> Result<RegistrationResult<T>> {
    let n = pairs.len();
    if n < 3 {
        return Err(Error::InsufficientCorrespondences { found: n });
    }
    let src_mean = centroid(pairs.sources());
    let dst_mean = centroid(pairs.targets());
    let centered = || pairs.pairs().iter().map(move |p| (p.target - dst_mean, p.source - src_mean));

    let scatter = outer_sum(centered().map(|(_, q)| (q, q)));
    let spread = linalg::svd(&scatter).sigma;
    let ratio = T::lit(T::DEGENERATE_RATIO);
    if !(spread[0] > T::zero()) || (spread[1] / spread[0]).sqrt() < ratio {
        return Err(Error::DegenerateConfiguration("source points are coincident or collinear".into()));
    }

    let cross = outer_sum(centered());
    let rows = linalg::nearest_rotation(&cross)
        .ok_or_else(|| Error::DegenerateConfiguration("target points are coincident or collinear".into()))?;
    let rotation = RotationMatrix::from_rows_unchecked(rows);

    let scale = match mode {
        TransformMode::Rigid => T::one(),
        TransformMode::Similarity => {
            let corrected = linalg::trace(&linalg::mul(&linalg::transpose(&rows), &cross));
            let s = corrected / linalg::trace(&scatter);
            if !(s > T::zero()) {
                return Err(Error::DegenerateConfiguration(format!("estimated scale {s} is not positive")));
            }
            s
        }
    };
    let translation = dst_mean - rotation.rotate(src_mean) * scale;
    let transform = make_transform(&rotation, translation, scale)?;
    let residuals = residuals(pairs, &transform)?;
    let rmse = rmse(pairs, &transform)?;
    Ok(RegistrationResult { transform, rmse, residuals, mode })
}

/// Root-mean-square Euclidean residual of `m` over the pairs.
pub fn rmse<T: Real>(pairs: &CorrespondenceSet<T>, m: &Transform<T>) -> Result<T> {
    if pairs.is_empty() {
        return Err(Error::invalid("rmse of an empty correspondence set"));
    }
    // Summed smallest first so the result does not depend on pair order.
    let mut sq: Vec<T> =
        pairs.pairs().iter().map(|p| (m.apply(p.source) - p.target).norm_squared()).collect();
    sq.sort_by(|a, b| a.partial_cmp(b).expect("finite residuals"));
    let sum = sq.into_iter().fold(T::zero(), |acc, v| acc + v);
    Ok((sum / T::lit(pairs.len() as f64)).sqrt())
}

/// Per-pair residual norms, in input order.
pub fn residuals<T: Real>(pairs: &CorrespondenceSet<T>, m: &Transform<T>) -> Result<Vec<T>> {
    if pairs.is_empty() {
        return Err(Error::invalid("residuals of an empty correspondence set"));
    }
    Ok(pairs.pairs().iter().map(|p| (m.apply(p.source) - p.target).norm()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{euler_to_rotation, EulerAngles, Vector3};

    fn set(pts: &[([f64; 3], [f64; 3])]) -> CorrespondenceSet<f64> {
        CorrespondenceSet::from_points(
            pts.iter().map(|(a, b)| (Point3::from_array(*a), Point3::from_array(*b))),
        )
        .unwrap()
    }

    #[test]
    fn three_points_exact_rigid() {
        let r = euler_to_rotation(EulerAngles::new(0.3, -0.2, 1.1)).unwrap();
        let g = make_transform(&r, Vector3::new(5.0, -3.0, 2.0), 1.0).unwrap();
        let src = [[0.0, 0.0, 0.0], [4.0, 0.5, 0.0], [1.0, 3.0, 0.2]];
        let pairs = CorrespondenceSet::from_points(
            src.iter().map(|&a| (Point3::from_array(a), g.apply(Point3::from_array(a)))),
        )
        .unwrap();
        let res = estimate_transform(&pairs, TransformMode::Rigid).unwrap();
        assert!(res.transform.max_abs_diff(&g) < 1e-9);
        assert!(res.rmse < 1e-9);
        assert_eq!(res.transform.mode(), TransformMode::Rigid);
    }

    #[test]
    fn too_few_and_collinear() {
        let two = set(&[([0.0; 3], [0.0; 3]), ([1.0, 0.0, 0.0], [1.0, 0.0, 0.0])]);
        assert!(matches!(
            estimate_transform(&two, TransformMode::Rigid),
            Err(Error::InsufficientCorrespondences { found: 2 })
        ));
        let line = set(&[
            ([0.0; 3], [0.0; 3]),
            ([1.0, 1.0, 1.0], [1.0, 1.0, 1.0]),
            ([2.0, 2.0, 2.0], [2.0, 2.0, 2.0]),
            ([5.0, 5.0, 5.0], [5.0, 5.0, 5.0]),
        ]);
        for mode in [TransformMode::Rigid, TransformMode::Similarity] {
            assert!(matches!(estimate_transform(&line, mode), Err(Error::DegenerateConfiguration(_))));
        }
        let coincident = set(&[([1.0; 3], [0.0; 3]), ([1.0; 3], [1.0; 3]), ([1.0; 3], [2.0; 3])]);
        assert!(estimate_transform(&coincident, TransformMode::Rigid).is_err());
    }

    #[test]
    fn mirrored_targets_still_give_a_rotation() {
        let src = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]];
        let pairs = set(&src.map(|a| (a, [a[0], a[1], -a[2]])));
        let res = estimate_transform(&pairs, TransformMode::Similarity).unwrap();
        let d = res.transform.decompose().unwrap();
        assert!((linalg::det(d.rotation.rows()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rmse_examples() {
        let id = Transform::identity();
        let one = set(&[([0.0; 3], [3.0, 4.0, 0.0])]);
        assert_eq!(rmse(&one, &id).unwrap(), 5.0);
        let two = set(&[([0.0; 3], [1.0, 0.0, 0.0]), ([0.0; 3], [0.0, 7.0, 0.0])]);
        assert_eq!(rmse(&two, &id).unwrap(), 5.0);
        let exact = set(&[([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])]);
        assert_eq!(rmse(&exact, &id).unwrap(), 0.0);
        assert!(rmse(&CorrespondenceSet::default(), &id).is_err());
    }

    #[test]
    fn residual_examples() {
        let id = Transform::identity();
        let pairs = set(&[([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]), ([4.0, 5.0, 6.0], [4.0, 5.0, 8.0])]);
        assert_eq!(residuals(&pairs, &id).unwrap(), vec![0.0, 2.0]);
        assert!(residuals(&CorrespondenceSet::<f64>::default(), &id).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let r = euler_to_rotation(EulerAngles::new(0.1f32, 0.2, 0.3)).unwrap();
        let g = make_transform(&r, Vector3::new(1.0, 2.0, 3.0), 1.5).unwrap();
        let src = [[0.0f32, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 3.0, 0.0], [1.0, 1.0, 2.0]];
        let pairs = CorrespondenceSet::from_points(
            src.iter().map(|&a| (Point3::from_array(a), g.apply(Point3::from_array(a)))),
        )
        .unwrap();
        let res = estimate_transform(&pairs, TransformMode::Similarity).unwrap();
        assert!(res.transform.max_abs_diff(&g) < 1e-4);
    }
}
