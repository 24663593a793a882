use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use super::voxel::{occupied_voxels, VoxelKey};
use crate::error::{Error, Result};
use crate::geometry::{PointCloud, SurfaceClass};
use crate::scalar::Real;

pub const REPORT_SCHEMA: &str = "skyground.coverage/1";

#[derive(Debug, Clone, PartialEq)]
pub struct SourceStats {
    /// Source tag, suffixed with its position when tags repeat.
    pub name: String,
    pub voxels: usize,
    /// Voxels occupied by this source and no other.
    pub unique: usize,
    /// Fraction of union voxels this source does not occupy.
    pub completeness_gain: f64,
    /// Fraction of ground-truth voxels of each class this source occupies.
    pub coverage: BTreeMap<SurfaceClass, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageStats {
    pub leaf: f64,
    pub sources: Vec<SourceStats>,
    pub union: usize,
    /// Voxels occupied by every source.
    pub intersection: usize,
    /// Ground-truth voxel count per class (empty without truth).
    pub truth_voxels: BTreeMap<SurfaceClass, usize>,
    /// Per-class coverage of the union of all sources, which is also the
    /// coverage of their fusion.
    pub union_coverage: BTreeMap<SurfaceClass, f64>,
}

fn source_names<T: Real>(clouds: &[PointCloud<T>]) -> Vec<String> {
    let base: Vec<String> = clouds
        .iter()
        .enumerate()
        .map(
            |(i, c)| {
                if c.source_tag().is_empty() {
                    format!("source{i}")
                } else {
                    c.source_tag().to_owned()
                }
            },
        )
        .collect();
    let mut seen = HashSet::new();
    base.iter()
        .enumerate()
        .map(|(i, n)| if seen.insert(n.clone()) { n.clone() } else { format!("{n}_{i}") })
        .collect()
}

fn fraction(num: usize, den: usize) -> f64 {
    num as f64 / den as f64
}

/// Voxel occupancy statistics for co-registered clouds, optionally scored
/// against a labeled ground-truth cloud.
pub fn coverage_report<T: Real>(
    clouds: &[PointCloud<T>],
    leaf: T,
    truth: Option<&PointCloud<T>>,
) -> Result<CoverageStats> {
    super::check_leaf(leaf)?;
    super::check_inputs(clouds)?;
    let names = source_names(clouds);
    let sets: Vec<BTreeSet<VoxelKey>> = clouds.iter().map(|c| occupied_voxels(c, leaf)).collect();

    let mut hits: BTreeMap<VoxelKey, usize> = BTreeMap::new();
    for set in &sets {
        for &k in set {
            *hits.entry(k).or_default() += 1;
        }
    }
    let union = hits.len();
    let intersection = hits.values().filter(|&&n| n == sets.len()).count();

    let truth_sets: BTreeMap<SurfaceClass, BTreeSet<VoxelKey>> = match truth {
        None => BTreeMap::new(),
        Some(t) => {
            if t.frame_id() != clouds[0].frame_id() {
                return Err(Error::FrameMismatch {
                    expected: clouds[0].frame_id().to_owned(),
                    found: t.frame_id().to_owned(),
                });
            }
            let labels = t.labels().ok_or_else(|| Error::invalid("truth cloud carries no labels"))?;
            let mut by_class: BTreeMap<SurfaceClass, BTreeSet<VoxelKey>> = BTreeMap::new();
            for (&p, &l) in t.points().iter().zip(labels) {
                by_class.entry(l).or_default().insert(VoxelKey::of(p, leaf));
            }
            by_class
        }
    };
    let covered = |set: &dyn Fn(&VoxelKey) -> bool| -> BTreeMap<SurfaceClass, f64> {
        truth_sets
            .iter()
            .map(|(&class, keys)| (class, fraction(keys.iter().filter(|k| set(k)).count(), keys.len())))
            .collect()
    };

    let sources = sets
        .iter()
        .zip(names)
        .map(|(set, name)| SourceStats {
            name,
            voxels: set.len(),
            unique: set.iter().filter(|k| hits[*k] == 1).count(),
            completeness_gain: fraction(union - set.len(), union),
            coverage: covered(&|k| set.contains(k)),
        })
        .collect();

    Ok(CoverageStats {
        leaf: leaf.as_f64(),
        sources,
        union,
        intersection,
        truth_voxels: truth_sets.iter().map(|(&c, s)| (c, s.len())).collect(),
        union_coverage: covered(&|k| hits.contains_key(k)),
    })
}

impl CoverageStats {
    pub fn source(&self, name: &str) -> Option<&SourceStats> {
        self.sources.iter().find(|s| s.name == name)
    }

    /// Machine-readable `key = value` lines in a fixed order.
    pub fn to_report_string(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: String, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("schema".into(), REPORT_SCHEMA.into());
        kv("leaf".into(), self.leaf.to_string());
        let names: Vec<&str> = self.sources.iter().map(|s| s.name.as_str()).collect();
        kv("sources".into(), names.join(","));
        for s in &self.sources {
            kv(format!("voxels.{}", s.name), s.voxels.to_string());
        }
        kv("voxels.union".into(), self.union.to_string());
        kv("voxels.intersection".into(), self.intersection.to_string());
        for s in &self.sources {
            kv(format!("unique.{}", s.name), s.unique.to_string());
        }
        for (class, n) in &self.truth_voxels {
            kv(format!("truth.{class}"), n.to_string());
        }
        for class in self.truth_voxels.keys() {
            for s in &self.sources {
                kv(format!("coverage.{class}.{}", s.name), s.coverage[class].to_string());
            }
            kv(format!("coverage.{class}.union"), self.union_coverage[class].to_string());
        }
        for s in &self.sources {
            kv(format!("gain.{}", s.name), s.completeness_gain.to_string());
        }
        out
    }

    /// Short human-readable table.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "voxel leaf {} m, {} occupied in union, {} shared by all",
            self.leaf, self.union, self.intersection
        );
        for s in &self.sources {
            let _ = write!(
                out,
                "  {:<12} {:>9} voxels  {:>9} unique  gain {:>6.1}%",
                s.name,
                s.voxels,
                s.unique,
                100.0 * s.completeness_gain
            );
            for (class, f) in &s.coverage {
                let _ = write!(out, "  {class} {:>5.1}%", 100.0 * f);
            }
            out.push('\n');
        }
        if !self.union_coverage.is_empty() {
            let _ = write!(out, "  {:<12}", "union");
            for (class, f) in &self.union_coverage {
                let _ = write!(out, "  {class} {:>5.1}%", 100.0 * f);
            }
            out.push('\n');
        }
        out
    }
}

/// Parse a report produced by [`CoverageStats::to_report_string`].
pub fn parse_report(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::parse(i + 1, "expected 'key = value'"))?;
        map.insert(k.trim().to_owned(), v.trim().to_owned());
    }
    match map.get("schema") {
        Some(s) if s == REPORT_SCHEMA => Ok(map),
        Some(s) => Err(Error::UnsupportedFormat(format!("report schema '{s}'"))),
        None => Err(Error::parse(1, "missing schema key")),
    }
}
