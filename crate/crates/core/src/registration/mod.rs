//! Correspondence-based transform estimation and ICP refinement.

mod estimate;
mod grid;
mod icp;

pub use estimate::{estimate_transform, residuals, rmse, RegistrationResult};
pub use grid::GridIndex;
pub use icp::{refine_icp, IcpOutcome, IcpParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::scalar::Real;

/// A matched point: `source` in the frame being aligned, `target` in the
/// reference frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrespondencePair<T> {
    pub id: u64,
    pub source: Point3<T>,
    pub target: Point3<T>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrespondenceSet<T> {
    pairs: Vec<CorrespondencePair<T>>,
}

impl<T: Real> CorrespondenceSet<T> {
    pub fn new(pairs: Vec<CorrespondencePair<T>>) -> Result<Self> {
        let mut ids: Vec<u64> = pairs.iter().map(|p| p.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("correspondence ids must be unique"));
        }
        if let Some(p) = pairs.iter().find(|p| !p.source.is_finite() || !p.target.is_finite()) {
            return Err(Error::invalid(format!("correspondence {} has a non-finite coordinate", p.id)));
        }
        Ok(Self { pairs })
    }

    /// Pairs with ids assigned by position.
    pub fn from_points(points: impl IntoIterator<Item = (Point3<T>, Point3<T>)>) -> Result<Self> {
        Self::new(
            points
                .into_iter()
                .enumerate()
                .map(|(i, (source, target))| CorrespondencePair { id: i as u64, source, target })
                .collect(),
        )
    }

    /// Append a pair with the next free id and return that id.
    pub fn push(&mut self, source: Point3<T>, target: Point3<T>) -> Result<u64> {
        if !source.is_finite() || !target.is_finite() {
            return Err(Error::invalid("correspondence has a non-finite coordinate"));
        }
        let id = self.pairs.iter().map(|p| p.id + 1).max().unwrap_or(0);
        self.pairs.push(CorrespondencePair { id, source, target });
        Ok(id)
    }

    pub fn remove(&mut self, id: u64) -> Option<CorrespondencePair<T>> {
        let pos = self.pairs.iter().position(|p| p.id == id)?;
        Some(self.pairs.remove(pos))
    }

    pub fn pairs(&self) -> &[CorrespondencePair<T>] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn sources(&self) -> impl Iterator<Item = Point3<T>> + '_ {
        self.pairs.iter().map(|p| p.source)
    }

    pub fn targets(&self) -> impl Iterator<Item = Point3<T>> + '_ {
        self.pairs.iter().map(|p| p.target)
    }
}
