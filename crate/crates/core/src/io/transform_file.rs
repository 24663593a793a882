use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use super::{format_exact, read_text, write_atomic};
use crate::error::{Error, Result};
use crate::geometry::{Mat4, Transform, TransformMode, RELAXED_TOLERANCE};

pub const TRANSFORM_SCHEMA: &str = "skyground.transform/1";

/// A transform file: the matrix plus optional fit quality and free-form
/// provenance notes.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformDocument {
    pub transform: Transform<f64>,
    pub rmse: Option<f64>,
    pub provenance: BTreeMap<String, String>,
}

impl TransformDocument {
    pub fn new(transform: Transform<f64>) -> Self {
        Self { transform, rmse: None, provenance: BTreeMap::new() }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    schema: String,
    mode: Option<String>,
    matrix: Vec<Vec<f64>>,
    rmse: Option<f64>,
    #[serde(default)]
    provenance: BTreeMap<String, toml::Value>,
}

fn quoted(s: &str) -> String {
    toml::Value::String(s.to_owned()).to_string()
}

/// Text form of a transform document. Matrix entries are written at full
/// round-trip precision.
pub fn render_transform(doc: &TransformDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# target = M * source; row-major 4x4, translation in meters");
    let _ = writeln!(out, "schema = {}", quoted(TRANSFORM_SCHEMA));
    let _ = writeln!(out, "mode = {}", quoted(doc.transform.mode().name()));
    let _ = writeln!(out, "matrix = [");
    for row in doc.transform.matrix() {
        let cells: Vec<String> = row.iter().map(|&v| format_exact(v)).collect();
        let _ = writeln!(out, "  [{}],", cells.join(", "));
    }
    let _ = writeln!(out, "]");
    if let Some(rmse) = doc.rmse {
        let _ = writeln!(out, "rmse = {}", format_exact(rmse));
    }
    if !doc.provenance.is_empty() {
        let _ = writeln!(out, "\n[provenance]");
        for (k, v) in &doc.provenance {
            let _ = writeln!(out, "{} = {}", quoted(k), quoted(v));
        }
    }
    out
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parse and validate a transform document. The bottom row must be exactly
/// `(0, 0, 0, 1)`; the linear block must be a scaled rotation within the
/// relaxed tolerance. Without a `mode` key the mode is inferred from the scale.
pub fn parse_transform(text: &str) -> Result<TransformDocument> {
    let raw: RawDocument = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(1);
        Error::parse(line, e.message().to_owned())
    })?;
    if raw.schema != TRANSFORM_SCHEMA {
        return Err(Error::UnsupportedFormat(format!(
            "transform schema '{}' (expected '{TRANSFORM_SCHEMA}')",
            raw.schema
        )));
    }
    let matrix_line = text.lines().position(|l| l.trim_start().starts_with("matrix")).map_or(1, |i| i + 1);
    if raw.matrix.len() != 4 || raw.matrix.iter().any(|r| r.len() != 4) {
        return Err(Error::parse(matrix_line, "matrix must be 4 rows of 4 entries"));
    }
    let mut m: Mat4<f64> = [[0.0; 4]; 4];
    for (dst, src) in m.iter_mut().zip(&raw.matrix) {
        dst.copy_from_slice(src);
    }
    let transform = match raw.mode {
        Some(mode) => Transform::from_matrix_with_mode(m, mode.parse::<TransformMode>()?, RELAXED_TOLERANCE)?,
        None => Transform::from_matrix(m, RELAXED_TOLERANCE)?,
    };
    let provenance = raw
        .provenance
        .into_iter()
        .map(|(k, v)| {
            let v = match v {
                toml::Value::String(s) => s,
                other => other.to_string(),
            };
            (k, v)
        })
        .collect();
    Ok(TransformDocument { transform, rmse: raw.rmse, provenance })
}

pub fn read_transform(path: impl AsRef<Path>) -> Result<TransformDocument> {
    parse_transform(&read_text(path.as_ref())?)
}

pub fn write_transform(doc: &TransformDocument, path: impl AsRef<Path>) -> Result<()> {
    let text = render_transform(doc);
    write_atomic(path, |w| w.write_all(text.as_bytes()))
}
