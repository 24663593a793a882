use std::io::Write;
use std::path::Path;

use super::{format_sig9, read_text, write_atomic};
use crate::error::{Error, Result};
use crate::geometry::{ColorRGB, Point3, PointCloud};

/// Whitespace-separated `x y z [r g b]` per line; `#` starts a comment line.
pub fn parse_xyz(text: &str) -> Result<PointCloud<f64>> {
    let mut points = Vec::new();
    let mut colors = Vec::new();
    let mut with_color = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        let colored = match cols.len() {
            3 => false,
            6 => true,
            n => return Err(Error::parse(line_no, format!("expected 3 or 6 columns, found {n}"))),
        };
        if *with_color.get_or_insert(colored) != colored {
            return Err(Error::parse(line_no, "color columns present on some lines only"));
        }
        let mut xyz = [0.0; 3];
        for (slot, tok) in xyz.iter_mut().zip(&cols[..3]) {
            *slot = tok.parse().map_err(|_| Error::parse(line_no, format!("invalid coordinate '{tok}'")))?;
        }
        points.push(Point3::from_array(xyz));
        if colored {
            let mut rgb = [0u8; 3];
            for (slot, tok) in rgb.iter_mut().zip(&cols[3..]) {
                *slot = tok
                    .parse()
                    .map_err(|_| Error::parse(line_no, format!("invalid color channel '{tok}'")))?;
            }
            colors.push(ColorRGB::new(rgb[0], rgb[1], rgb[2]));
        }
    }
    let colored = with_color.unwrap_or(false);
    PointCloud::from_parts(points, colored.then_some(colors), None, "", crate::geometry::DEFAULT_FRAME)
}

pub fn read_xyz(path: impl AsRef<Path>) -> Result<PointCloud<f64>> {
    parse_xyz(&read_text(path.as_ref())?)
}

pub fn write_xyz_to(cloud: &PointCloud<f64>, w: &mut dyn Write) -> std::io::Result<()> {
    for (i, p) in cloud.points().iter().enumerate() {
        write!(w, "{} {} {}", format_sig9(p.x), format_sig9(p.y), format_sig9(p.z))?;
        if let Some(c) = cloud.colors().map(|c| c[i]) {
            write!(w, " {} {} {}", c.r, c.g, c.b)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_xyz(cloud: &PointCloud<f64>, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, |w| write_xyz_to(cloud, w))
}
