use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::voxel::{group, representative, Representative, VoxelKey};
use crate::error::Result;
use crate::geometry::{ColorRGB, PointCloud};
use crate::scalar::Real;

pub const FUSED_TAG: &str = "fused";

/// How a voxel's color is chosen when several sources occupy it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColorRule {
    /// Colored sources keep their color; uncolored points borrow the first
    /// colored source's color in the same voxel.
    PreferColoredSource,
    /// Every point in the voxel gets the mean of the colored sources.
    Average,
    /// Every point in the voxel gets the first colored source's color.
    FirstWins,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dedup {
    OnePointPerVoxelPerSource,
    KeepAll,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionPolicy<T> {
    /// Voxel edge, meters.
    pub leaf: T,
    pub color_rule: ColorRule,
    pub dedup: Dedup,
    /// Color given to points in voxels no colored source reaches, when the
    /// output carries colors at all.
    pub fill_color: ColorRGB,
}

impl<T: Real> Default for FusionPolicy<T> {
    fn default() -> Self {
        Self {
            leaf: T::lit(0.1),
            color_rule: ColorRule::PreferColoredSource,
            dedup: Dedup::OnePointPerVoxelPerSource,
            fill_color: ColorRGB::new(128, 128, 128),
        }
    }
}

impl<T: Real> FusionPolicy<T> {
    pub fn with_leaf(leaf: T) -> Self {
        Self { leaf, ..Self::default() }
    }
}

/// Colors for the entries of one voxel, one per `(source, color)` entry in
/// source order.
fn voxel_colors(rule: ColorRule, entries: &[Option<ColorRGB>]) -> Vec<Option<ColorRGB>> {
    let first = entries.iter().flatten().next().copied();
    match rule {
        ColorRule::PreferColoredSource => entries.iter().map(|c| c.or(first)).collect(),
        ColorRule::FirstWins => vec![first; entries.len()],
        ColorRule::Average => vec![ColorRGB::mean(entries.iter().flatten()); entries.len()],
    }
}

/// Merge clouds that already share a frame onto one voxel grid.
///
/// With [`Dedup::OnePointPerVoxelPerSource`] every source contributes its
/// voxel centroid to each voxel it occupies and the output is ordered by
/// voxel key, then source order. With [`Dedup::KeepAll`] every input point is
/// kept in input order and only colors are reconciled per voxel.
pub fn fuse<T: Real>(clouds: &[PointCloud<T>], policy: &FusionPolicy<T>) -> Result<PointCloud<T>> {
    super::check_leaf(policy.leaf)?;
    super::check_inputs(clouds)?;
    let leaf = policy.leaf;
    let any_colored = clouds.iter().any(|c| c.colors().is_some());
    let all_labeled = clouds.iter().all(|c| c.labels().is_some());
    let frame = clouds[0].frame_id().to_owned();

    // voxel -> (source index, representative) in source order
    let mut merged: BTreeMap<VoxelKey, Vec<(usize, Representative<T>)>> = BTreeMap::new();
    for (s, cloud) in clouds.iter().enumerate() {
        for (key, members) in group(cloud, leaf) {
            merged.entry(key).or_default().push((s, representative(cloud, key, &members, leaf)));
        }
    }

    let mut points = Vec::new();
    let mut colors = Vec::new();
    let mut labels = Vec::new();
    match policy.dedup {
        Dedup::OnePointPerVoxelPerSource => {
            for entries in merged.values() {
                let reps: Vec<_> = entries.iter().map(|(_, r)| r.color).collect();
                let assigned = voxel_colors(policy.color_rule, &reps);
                for ((_, rep), color) in entries.iter().zip(assigned) {
                    points.push(rep.point);
                    colors.push(color.unwrap_or(policy.fill_color));
                    if let Some(l) = rep.label {
                        labels.push(l);
                    }
                }
            }
        }
        Dedup::KeepAll => {
            let per_voxel: BTreeMap<VoxelKey, Vec<(usize, Option<ColorRGB>)>> = merged
                .iter()
                .map(|(k, entries)| {
                    let reps: Vec<_> = entries.iter().map(|(_, r)| r.color).collect();
                    let assigned = voxel_colors(policy.color_rule, &reps);
                    (*k, entries.iter().map(|(s, _)| *s).zip(assigned).collect())
                })
                .collect();
            for (s, cloud) in clouds.iter().enumerate() {
                for (i, &p) in cloud.points().iter().enumerate() {
                    points.push(p);
                    let own = cloud.colors().map(|cs| cs[i]);
                    let voxel = per_voxel[&VoxelKey::of(p, leaf)]
                        .iter()
                        .find(|(src, _)| *src == s)
                        .and_then(|(_, c)| *c);
                    let color = match policy.color_rule {
                        ColorRule::PreferColoredSource => own.or(voxel),
                        _ => voxel,
                    };
                    colors.push(color.unwrap_or(policy.fill_color));
                    if let Some(ls) = cloud.labels() {
                        labels.push(ls[i]);
                    }
                }
            }
        }
    }

    PointCloud::from_parts(
        points,
        any_colored.then_some(colors),
        all_labeled.then_some(labels),
        FUSED_TAG,
        frame,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::occupied_voxels;
    use crate::geometry::{Point3, SurfaceClass};

    fn colored(pts: &[[f64; 3]], c: ColorRGB, tag: &str) -> PointCloud<f64> {
        PointCloud::new(pts.iter().map(|&a| Point3::from_array(a)).collect())
            .with_colors(vec![c; pts.len()])
            .unwrap()
            .with_source_tag(tag)
    }

    fn plain(pts: &[[f64; 3]], tag: &str) -> PointCloud<f64> {
        PointCloud::new(pts.iter().map(|&a| Point3::from_array(a)).collect()).with_source_tag(tag)
    }

    #[test]
    fn single_input_keep_all_is_identity() {
        let a =
            colored(&[[0.05, 0.0, 0.0], [3.0, 1.0, 2.0], [0.07, 0.01, 0.0]], ColorRGB::new(9, 8, 7), "uav")
                .with_labels(vec![SurfaceClass::Roof; 3])
                .unwrap();
        let policy = FusionPolicy { dedup: Dedup::KeepAll, ..FusionPolicy::default() };
        let f = fuse(std::slice::from_ref(&a), &policy).unwrap();
        assert_eq!(f.points(), a.points());
        assert_eq!(f.colors(), a.colors());
        assert_eq!(f.labels(), a.labels());
        assert_eq!(f.source_tag(), FUSED_TAG);
    }

    #[test]
    fn self_fusion_keeps_voxel_set() {
        let a = plain(&[[0.05, 0.0, 0.0], [3.0, 1.0, 2.0], [0.07, 0.01, 0.0]], "mms");
        let f = fuse(&[a.clone(), a.clone()], &FusionPolicy::default()).unwrap();
        assert_eq!(occupied_voxels(&f, 0.1), occupied_voxels(&a, 0.1));
        assert!(f.colors().is_none());
    }

    #[test]
    fn uncolored_source_borrows_color() {
        let red = ColorRGB::new(200, 0, 0);
        let uav = colored(&[[0.01, 0.01, 0.01]], red, "uav");
        let mms = plain(&[[0.02, 0.02, 0.02], [5.0, 5.0, 5.0]], "mms");
        let f = fuse(&[mms, uav], &FusionPolicy::default()).unwrap();
        assert_eq!(f.len(), 3);
        let cs = f.colors().unwrap();
        assert_eq!(&cs[..2], &[red, red]);
        assert_eq!(cs[2], FusionPolicy::<f64>::default().fill_color);
    }

    #[test]
    fn color_rules() {
        let a = colored(&[[0.01, 0.01, 0.01]], ColorRGB::new(100, 0, 0), "a");
        let b = colored(&[[0.02, 0.02, 0.02]], ColorRGB::new(0, 100, 0), "b");
        let run = |rule| {
            let policy = FusionPolicy { color_rule: rule, ..FusionPolicy::default() };
            fuse(&[a.clone(), b.clone()], &policy).unwrap().colors().unwrap().to_vec()
        };
        assert_eq!(
            run(ColorRule::PreferColoredSource),
            vec![ColorRGB::new(100, 0, 0), ColorRGB::new(0, 100, 0)]
        );
        assert_eq!(run(ColorRule::FirstWins), vec![ColorRGB::new(100, 0, 0); 2]);
        assert_eq!(run(ColorRule::Average), vec![ColorRGB::new(50, 50, 0); 2]);
    }

    #[test]
    fn input_errors() {
        assert!(fuse::<f64>(&[], &FusionPolicy::default()).is_err());
        let a = plain(&[[0.0; 3]], "a");
        let b = plain(&[[0.0; 3]], "b").with_frame_id("enu");
        assert!(matches!(
            fuse(&[a.clone(), b], &FusionPolicy::default()),
            Err(crate::Error::FrameMismatch { .. })
        ));
        assert!(fuse(&[a], &FusionPolicy::with_leaf(0.0)).is_err());
    }
}
