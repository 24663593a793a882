//! Whole-step operations shared by the command line and the HTTP session.
//! Both front ends call these so the same inputs give byte-identical files.

use crate::error::Result;
use crate::geometry::{PointCloud, TransformMode};
use crate::io::{format_exact, TransformDocument};
use crate::registration::{estimate_transform, refine_icp, rmse, CorrespondenceSet, IcpParams};

/// Clouds and settings for the optional ICP refinement after the pair fit.
#[derive(Debug, Clone, Copy)]
pub struct IcpStage<'a> {
    pub source: &'a PointCloud<f64>,
    pub target: &'a PointCloud<f64>,
    pub params: IcpParams<f64>,
}

/// Fit a transform to the pairs, optionally refine it with ICP, and build
/// the transform document. The recorded RMSE is always over the pairs.
pub fn register(
    pairs: &CorrespondenceSet<f64>,
    mode: TransformMode,
    icp: Option<IcpStage<'_>>,
) -> Result<TransformDocument> {
    let fit = estimate_transform(pairs, mode)?;
    let mut doc = TransformDocument::new(fit.transform);
    doc.provenance.insert("pairs".into(), pairs.len().to_string());
    doc.rmse = Some(fit.rmse);
    if let Some(stage) = icp {
        let refined = refine_icp(stage.source, stage.target, &fit.transform, &stage.params)?;
        doc.transform = refined.transform;
        doc.rmse = Some(rmse(pairs, &refined.transform)?);
        let last = refined.rmse_history.last().copied().unwrap_or(f64::NAN);
        doc.provenance.insert("icp_iterations".into(), refined.iterations.to_string());
        doc.provenance.insert("icp_final_pairs".into(), refined.final_pairs.to_string());
        doc.provenance.insert("icp_truncated_rmse".into(), format_exact(last));
        doc.provenance.insert("icp_max_pair_distance".into(), format_exact(stage.params.max_pair_distance));
    }
    Ok(doc)
}
