use rayon::prelude::*;

use super::estimate::estimate_transform;
use super::grid::GridIndex;
use super::CorrespondenceSet;
use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud, Transform, TransformMode};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcpParams<T> {
    pub max_iterations: usize,
    /// Stop once the RMSE improves by less than this, meters.
    pub convergence_delta: T,
    /// Correspondence rejection radius, meters. Also the hash-grid cell size.
    pub max_pair_distance: T,
    pub mode: TransformMode,
}

impl<T: Real> Default for IcpParams<T> {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            convergence_delta: T::lit(1e-6),
            max_pair_distance: T::one(),
            mode: TransformMode::Rigid,
        }
    }
}

impl<T: Real> IcpParams<T> {
    fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::invalid("max_iterations must be at least 1"));
        }
        if !(self.convergence_delta > T::zero()) {
            return Err(Error::invalid("convergence_delta must be positive"));
        }
        if !(self.max_pair_distance > T::zero()) || !self.max_pair_distance.is_finite() {
            return Err(Error::invalid("max_pair_distance must be positive and finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcpOutcome<T> {
    /// Refinement composed with the initial transform.
    pub transform: Transform<T>,
    /// Truncated RMSE before the first step and after every accepted step.
    pub rmse_history: Vec<T>,
    /// Number of accepted re-estimation steps.
    pub iterations: usize,
    /// Correspondences that survived rejection under the final transform.
    pub final_pairs: usize,
}

struct Matching<T> {
    pairs: CorrespondenceSet<T>,
    /// Root of the mean of `min(d², r²)` over every source point.
    truncated_rmse: T,
}

fn match_points<T: Real>(
    source: &[Point3<T>],
    index: &GridIndex<T>,
    current: &Transform<T>,
    radius: T,
) -> Result<Matching<T>> {
    let found: Vec<(Point3<T>, Option<(usize, T)>)> = source
        .par_iter()
        .map(|&q| {
            let moved = current.apply(q);
            (moved, index.nearest_within(moved, radius))
        })
        .collect();
    let r2 = radius * radius;
    let mut sum = T::zero();
    let mut matched = Vec::new();
    for (moved, hit) in found {
        match hit {
            Some((j, d2)) => {
                sum = sum + d2;
                matched.push((moved, index.point(j)));
            }
            None => sum = sum + r2,
        }
    }
    Ok(Matching {
        pairs: CorrespondenceSet::from_points(matched)?,
        truncated_rmse: (sum / T::lit(source.len() as f64)).sqrt(),
    })
}

/// Point-to-point ICP starting from `init`.
///
/// Each step pairs every transformed source point with its nearest target
/// point within `max_pair_distance`, re-estimates on the surviving pairs and
/// composes the increment onto the running transform. The tracked objective
/// is the RMSE with rejected points counted at the rejection radius, which
/// cannot increase under this update; a step that would increase it through
/// rounding is discarded and iteration stops.
pub fn refine_icp<T: Real>(
    source: &PointCloud<T>,
    target: &PointCloud<T>,
    init: &Transform<T>,
    params: &IcpParams<T>,
) -> Result<IcpOutcome<T>> {
    params.validate()?;
    source.require_non_empty("source")?;
    target.require_non_empty("target")?;
    let radius = params.max_pair_distance;
    let index = GridIndex::new(target.points(), radius);

    let mut current = *init;
    let mut matching = match_points(source.points(), &index, &current, radius)?;
    let mut history = vec![matching.truncated_rmse];
    let mut iterations = 0;

    for iteration in 1..=params.max_iterations {
        if matching.pairs.is_empty() {
            return Err(Error::NoOverlap { iteration });
        }
        let step = estimate_transform(&matching.pairs, params.mode)?;
        let candidate = step.transform.compose(&current);
        let next = match_points(source.points(), &index, &candidate, radius)?;
        let previous = *history.last().expect("history starts non-empty");
        if next.truncated_rmse > previous {
            break;
        }
        current = candidate;
        matching = next;
        history.push(matching.truncated_rmse);
        iterations = iteration;
        if previous - matching.truncated_rmse < params.convergence_delta {
            break;
        }
    }

    Ok(IcpOutcome {
        transform: current,
        rmse_history: history,
        iterations,
        final_pairs: matching.pairs.len(),
    })
}
