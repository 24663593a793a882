use std::io::Write;
use std::path::Path;

use super::{format_exact, read_text, write_atomic};
use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::registration::CorrespondenceSet;

/// One `sx sy sz tx ty tz` pair per line, comma- or whitespace-separated.
/// `#` lines and blank lines are ignored; ids follow line order from 0.
pub fn parse_pairs(text: &str) -> Result<CorrespondenceSet<f64>> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> =
            line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        if cols.len() != 6 {
            return Err(Error::parse(line_no, format!("expected 6 columns, found {}", cols.len())));
        }
        let mut v = [0.0f64; 6];
        for (slot, tok) in v.iter_mut().zip(&cols) {
            *slot = tok.parse().map_err(|_| Error::parse(line_no, format!("invalid number '{tok}'")))?;
            if !slot.is_finite() {
                return Err(Error::parse(line_no, format!("non-finite value '{tok}'")));
            }
        }
        pairs.push((Point3::new(v[0], v[1], v[2]), Point3::new(v[3], v[4], v[5])));
    }
    CorrespondenceSet::from_points(pairs)
}

pub fn read_pairs(path: impl AsRef<Path>) -> Result<CorrespondenceSet<f64>> {
    parse_pairs(&read_text(path.as_ref())?)
}

/// Values are written at full round-trip precision.
pub fn write_pairs_to(pairs: &CorrespondenceSet<f64>, w: &mut dyn Write) -> std::io::Result<()> {
    writeln!(w, "# sx sy sz tx ty tz (meters)")?;
    for p in pairs.pairs() {
        let v = [p.source.x, p.source.y, p.source.z, p.target.x, p.target.y, p.target.z];
        let cols: Vec<String> = v.iter().map(|&x| format_exact(x)).collect();
        writeln!(w, "{}", cols.join(" "))?;
    }
    Ok(())
}

pub fn write_pairs(pairs: &CorrespondenceSet<f64>, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, |w| write_pairs_to(pairs, w))
}
