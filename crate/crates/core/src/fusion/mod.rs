//! Voxel-level fusion of co-registered clouds and coverage analytics.

mod coverage;
mod fuse;
mod voxel;

pub use coverage::{coverage_report, parse_report, CoverageStats, SourceStats, REPORT_SCHEMA};
pub use fuse::{fuse, ColorRule, Dedup, FusionPolicy, FUSED_TAG};
pub use voxel::{lod_downsample, occupied_voxels, voxel_downsample, VoxelKey};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::scalar::Real;

pub(crate) fn check_leaf<T: Real>(leaf: T) -> Result<()> {
    if !(leaf > T::zero()) || !leaf.is_finite() {
        return Err(Error::invalid(format!("voxel leaf must be positive, got {leaf}")));
    }
    Ok(())
}

/// Inputs must be non-empty and share one frame.
pub(crate) fn check_inputs<T: Real>(clouds: &[PointCloud<T>]) -> Result<()> {
    let first = clouds.first().ok_or_else(|| Error::invalid("at least one cloud is required"))?;
    for c in clouds {
        if c.frame_id() != first.frame_id() {
            return Err(Error::FrameMismatch {
                expected: first.frame_id().to_owned(),
                found: c.frame_id().to_owned(),
            });
        }
        c.require_non_empty(if c.source_tag().is_empty() { "input" } else { c.source_tag() })?;
    }
    Ok(())
}
