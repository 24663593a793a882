use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::error::{Error, Result};
use crate::geometry::{ColorRGB, Point3, PointCloud, SurfaceClass};
use crate::scalar::Real;

/// Integer voxel coordinates, `floor(coordinate / leaf)` per axis. Points on
/// a boundary fall in the higher-index voxel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VoxelKey {
    pub ix: i64,
    pub iy: i64,
    pub iz: i64,
}

impl VoxelKey {
    pub fn of<T: Real>(p: Point3<T>, leaf: T) -> Self {
        let k = |v: T| (v / leaf).floor().to_i64().expect("voxel index overflows i64");
        Self { ix: k(p.x), iy: k(p.y), iz: k(p.z) }
    }
}

pub fn occupied_voxels<T: Real>(cloud: &PointCloud<T>, leaf: T) -> BTreeSet<VoxelKey> {
    cloud.points().iter().map(|&p| VoxelKey::of(p, leaf)).collect()
}

/// Point indices grouped by voxel, in key order; members keep input order.
pub(crate) fn group<T: Real>(cloud: &PointCloud<T>, leaf: T) -> BTreeMap<VoxelKey, Vec<usize>> {
    let mut groups: BTreeMap<VoxelKey, Vec<usize>> = BTreeMap::new();
    for (i, &p) in cloud.points().iter().enumerate() {
        groups.entry(VoxelKey::of(p, leaf)).or_default().push(i);
    }
    groups
}

/// One voxel's summary of a cloud.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Representative<T> {
    pub point: Point3<T>,
    pub color: Option<ColorRGB>,
    pub label: Option<SurfaceClass>,
}

/// Centroid of the members. Rounding can push a centroid across a voxel
/// face; the member nearest the centroid stands in when that happens.
pub(crate) fn representative<T: Real>(
    cloud: &PointCloud<T>,
    key: VoxelKey,
    members: &[usize],
    leaf: T,
) -> Representative<T> {
    let pts = cloud.points();
    let sum = members.iter().fold(Point3::zero(), |acc, &i| acc + pts[i]);
    let mut point = sum / T::lit(members.len() as f64);
    if VoxelKey::of(point, leaf) != key {
        let c = point;
        point = members
            .iter()
            .map(|&i| pts[i])
            .min_by(|a, b| {
                (*a - c)
                    .norm_squared()
                    .partial_cmp(&(*b - c).norm_squared())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("voxel groups are non-empty");
    }
    let color = cloud.colors().and_then(|cs| ColorRGB::mean(members.iter().map(|&i| &cs[i])));
    let label = cloud.labels().map(|ls| majority(members.iter().map(|&i| ls[i])));
    Representative { point, color, label }
}

/// Most frequent class; ties go to the lexicographically smallest name.
fn majority(labels: impl Iterator<Item = SurfaceClass>) -> SurfaceClass {
    let mut counts: BTreeMap<SurfaceClass, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let best = counts.values().copied().max().unwrap_or(0);
    counts.into_iter().find(|&(_, n)| n == best).map(|(l, _)| l).expect("voxel groups are non-empty")
}

/// Replace every occupied voxel's points by their centroid (mean color,
/// majority label). Output is in voxel-key order.
pub fn voxel_downsample<T: Real>(cloud: &PointCloud<T>, leaf: T) -> Result<PointCloud<T>> {
    super::check_leaf(leaf)?;
    cloud.require_non_empty("input")?;
    let reps: Vec<Representative<T>> = group(cloud, leaf)
        .into_iter()
        .map(|(key, members)| representative(cloud, key, &members, leaf))
        .collect();
    PointCloud::from_parts(
        reps.iter().map(|r| r.point).collect(),
        cloud.colors().map(|_| reps.iter().map(|r| r.color.unwrap()).collect()),
        cloud.labels().map(|_| reps.iter().map(|r| r.label.unwrap()).collect()),
        cloud.source_tag(),
        cloud.frame_id(),
    )
}

/// Level-of-detail copy holding at most `budget` points.
///
/// Clouds already within budget come back unchanged with no leaf. Otherwise
/// the grid is anchored at the cloud's lower bound and the leaf is bisected
/// down to the smallest size whose occupied-voxel count still fits, so the
/// result depends only on the cloud and the budget.
pub fn lod_downsample<T: Real>(cloud: &PointCloud<T>, budget: usize) -> Result<(PointCloud<T>, Option<T>)> {
    if budget == 0 {
        return Err(Error::invalid("level-of-detail budget must be at least 1"));
    }
    cloud.require_non_empty("input")?;
    if cloud.len() <= budget {
        return Ok((cloud.clone(), None));
    }
    let (lo, hi) = cloud.bounds().expect("non-empty");
    let span = hi - lo;
    let extent = span.x.max(span.y).max(span.z);
    let shifted = cloud.map_points(|p| p - lo);
    let fits = |leaf: T| {
        let mut seen = HashSet::new();
        for &p in shifted.points() {
            seen.insert(VoxelKey::of(p, leaf));
            if seen.len() > budget {
                return false;
            }
        }
        true
    };
    // Above the extent every point shares voxel (0, 0, 0).
    let (mut small, mut large) = (T::zero(), extent * T::lit(1.5) + T::one());
    for _ in 0..48 {
        let mid = (small + large) / T::lit(2.0);
        if fits(mid) {
            large = mid;
        } else {
            small = mid;
        }
        if large - small <= large * T::lit(1e-6) {
            break;
        }
    }
    let reduced = voxel_downsample(&shifted, large)?.map_points(|p| p + lo);
    Ok((reduced, Some(large)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_unchanged() {
        let c = PointCloud::new(vec![Point3::new(0.33, -1.2, 7.0)]);
        assert_eq!(voxel_downsample(&c, 0.1).unwrap().points(), c.points());
    }

    #[test]
    fn two_points_in_one_voxel() {
        let c = PointCloud::new(vec![Point3::new(0.2, 0.0, 0.0), Point3::new(0.4, 0.0, 0.0)]);
        let d = voxel_downsample(&c, 1.0).unwrap();
        assert_eq!(d.len(), 1);
        assert!((d.points()[0].x - 0.3f64).abs() < 1e-15);
    }

    #[test]
    fn boundary_goes_up() {
        assert_eq!(VoxelKey::of(Point3::new(1.0, -1.0, 0.0), 1.0), VoxelKey { ix: 1, iy: -1, iz: 0 });
        assert_eq!(VoxelKey::of(Point3::new(-0.5, 0.0, 0.0), 1.0).ix, -1);
    }

    #[test]
    fn majority_tie_is_lexicographic() {
        let c = PointCloud::new(vec![Point3::new(0.1, 0.1, 0.1), Point3::new(0.2, 0.2, 0.2)])
            .with_labels(vec![SurfaceClass::Roof, SurfaceClass::Facade])
            .unwrap()
            .with_colors(vec![ColorRGB::new(0, 10, 255), ColorRGB::new(1, 20, 255)])
            .unwrap();
        let d = voxel_downsample(&c, 1.0).unwrap();
        assert_eq!(d.labels().unwrap(), &[SurfaceClass::Facade]);
        assert_eq!(d.colors().unwrap(), &[ColorRGB::new(1, 15, 255)]);
    }

    #[test]
    fn rejects_bad_leaf() {
        let c = PointCloud::new(vec![Point3::new(0.0, 0.0, 0.0)]);
        assert!(voxel_downsample(&c, 0.0).is_err());
        assert!(voxel_downsample(&c, -1.0).is_err());
        assert!(voxel_downsample(&PointCloud::<f64>::new(vec![]), 1.0).is_err());
    }

    #[test]
    fn lod_respects_budget() {
        let pts: Vec<_> =
            (0..2000).map(|i| Point3::new((i % 40) as f64 * 0.1, (i / 40) as f64 * 0.1, 0.0)).collect();
        let c = PointCloud::new(pts);
        let (same, leaf) = lod_downsample(&c, 5000).unwrap();
        assert_eq!(same, c);
        assert!(leaf.is_none());
        for budget in [1, 7, 100, 1999] {
            let (d, leaf) = lod_downsample(&c, budget).unwrap();
            assert!(d.len() <= budget && !d.is_empty());
            assert!(leaf.unwrap() > 0.0);
            assert_eq!(lod_downsample(&c, budget).unwrap().0, d);
        }
        assert!(lod_downsample(&c, 0).is_err());
    }
}
