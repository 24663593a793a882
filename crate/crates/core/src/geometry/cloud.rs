use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::point::{ColorRGB, Point3};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Ground-truth surface category of a sample.
///
/// The derived ordering is lexicographic by name (facade < ground < roof),
/// which is the tie-break used by majority voting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceClass {
    Facade,
    Ground,
    Roof,
}

impl SurfaceClass {
    pub const ALL: [SurfaceClass; 3] = [SurfaceClass::Roof, SurfaceClass::Facade, SurfaceClass::Ground];

    pub fn name(self) -> &'static str {
        match self {
            SurfaceClass::Roof => "roof",
            SurfaceClass::Facade => "facade",
            SurfaceClass::Ground => "ground",
        }
    }

    /// Integer code used by the `label` property of cloud files.
    pub fn code(self) -> u8 {
        match self {
            SurfaceClass::Roof => 0,
            SurfaceClass::Facade => 1,
            SurfaceClass::Ground => 2,
        }
    }

    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            0 => Some(SurfaceClass::Roof),
            1 => Some(SurfaceClass::Facade),
            2 => Some(SurfaceClass::Ground),
            _ => None,
        }
    }
}

impl fmt::Display for SurfaceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SurfaceClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "roof" => Ok(SurfaceClass::Roof),
            "facade" => Ok(SurfaceClass::Facade),
            "ground" => Ok(SurfaceClass::Ground),
            other => Err(Error::invalid(format!("unknown surface class '{other}'"))),
        }
    }
}

pub const DEFAULT_FRAME: &str = "local";

/// Points with optional parallel color and label channels.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<T> {
    points: Vec<Point3<T>>,
    colors: Option<Vec<ColorRGB>>,
    labels: Option<Vec<SurfaceClass>>,
    source_tag: String,
    frame_id: String,
}

impl<T: Real> PointCloud<T> {
    pub fn new(points: Vec<Point3<T>>) -> Self {
        Self {
            points,
            colors: None,
            labels: None,
            source_tag: String::new(),
            frame_id: DEFAULT_FRAME.to_owned(),
        }
    }

    pub fn from_parts(
        points: Vec<Point3<T>>,
        colors: Option<Vec<ColorRGB>>,
        labels: Option<Vec<SurfaceClass>>,
        source_tag: impl Into<String>,
        frame_id: impl Into<String>,
    ) -> Result<Self> {
        check_len("colors", points.len(), colors.as_ref().map(Vec::len))?;
        check_len("labels", points.len(), labels.as_ref().map(Vec::len))?;
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::invalid(format!("point {i} has a non-finite coordinate")));
        }
        Ok(Self { points, colors, labels, source_tag: source_tag.into(), frame_id: frame_id.into() })
    }

    pub fn with_colors(mut self, colors: Vec<ColorRGB>) -> Result<Self> {
        check_len("colors", self.points.len(), Some(colors.len()))?;
        self.colors = Some(colors);
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<SurfaceClass>) -> Result<Self> {
        check_len("labels", self.points.len(), Some(labels.len()))?;
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_source_tag(mut self, tag: impl Into<String>) -> Self {
        self.source_tag = tag.into();
        self
    }

    pub fn with_frame_id(mut self, frame: impl Into<String>) -> Self {
        self.frame_id = frame.into();
        self
    }

    pub fn without_colors(mut self) -> Self {
        self.colors = None;
        self
    }

    pub fn points(&self) -> &[Point3<T>] {
        &self.points
    }

    pub fn colors(&self) -> Option<&[ColorRGB]> {
        self.colors.as_deref()
    }

    pub fn labels(&self) -> Option<&[SurfaceClass]> {
        self.labels.as_deref()
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }

    pub fn frame_id(&self) -> &str {
        &self.frame_id
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub(crate) fn require_non_empty(&self, what: &str) -> Result<()> {
        if self.points.is_empty() {
            Err(Error::invalid(format!("{what} cloud is empty")))
        } else {
            Ok(())
        }
    }

    /// Replace the coordinates, keeping every other channel.
    pub fn map_points(&self, f: impl Fn(Point3<T>) -> Point3<T>) -> Self {
        Self { points: self.points.iter().map(|&p| f(p)).collect(), ..self.clone() }
    }

    /// Subset by index, keeping parallel channels aligned.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            colors: self.colors.as_ref().map(|c| indices.iter().map(|&i| c[i]).collect()),
            labels: self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i]).collect()),
            source_tag: self.source_tag.clone(),
            frame_id: self.frame_id.clone(),
        }
    }

    /// Axis-aligned bounds `(min, max)`; `None` when empty.
    pub fn bounds(&self) -> Option<(Point3<T>, Point3<T>)> {
        let first = *self.points.first()?;
        Some(self.points.iter().fold((first, first), |(lo, hi), p| {
            (
                Point3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z)),
                Point3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z)),
            )
        }))
    }
}

fn check_len(what: &str, expected: usize, got: Option<usize>) -> Result<()> {
    match got {
        Some(n) if n != expected => {
            Err(Error::invalid(format!("{what} has {n} entries but cloud has {expected} points")))
        }
        _ => Ok(()),
    }
}
