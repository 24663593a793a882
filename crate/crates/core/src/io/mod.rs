//! Readers and writers for clouds, correspondences, transforms and UAV pose
//! tables, plus geodetic to local ENU conversion. All numeric text uses `.`
//! as the decimal separator.

mod geodetic;
mod pairs;
mod ply;
mod pose;
mod transform_file;
mod xyz;

use std::io::{BufWriter, Write};
use std::path::Path;

pub use geodetic::{geodetic_to_enu, GeoOrigin, WGS84_A, WGS84_F};
pub use pairs::{parse_pairs, read_pairs, write_pairs, write_pairs_to};
pub use ply::{parse_ply, read_ply, write_ply, write_ply_to, PlyEncoding};
pub use pose::{parse_pose_table, read_pose_table, PoseRecord};
pub use transform_file::{
    parse_transform, read_transform, render_transform, write_transform, TransformDocument, TRANSFORM_SCHEMA,
};
pub use xyz::{parse_xyz, read_xyz, write_xyz, write_xyz_to};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;

/// Cloud file flavors recognised by extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Ply(PlyEncoding),
    Xyz,
}

impl CloudFormat {
    /// `.ply` maps to binary PLY, `.xyz` / `.txt` to XYZ text.
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("ply") => Ok(CloudFormat::Ply(PlyEncoding::BinaryLittleEndian)),
            Some("xyz") | Some("txt") => Ok(CloudFormat::Xyz),
            _ => Err(Error::UnsupportedFormat(format!(
                "cannot infer cloud format of '{}' (expected .ply, .xyz or .txt)",
                path.display()
            ))),
        }
    }
}

pub fn read_cloud(path: impl AsRef<Path>) -> Result<PointCloud<f64>> {
    let path = path.as_ref();
    match CloudFormat::from_path(path)? {
        CloudFormat::Ply(_) => read_ply(path),
        CloudFormat::Xyz => read_xyz(path),
    }
}

pub fn write_cloud(cloud: &PointCloud<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_cloud_as(cloud, path, CloudFormat::from_path(path)?)
}

pub fn write_cloud_as(cloud: &PointCloud<f64>, path: impl AsRef<Path>, format: CloudFormat) -> Result<()> {
    match format {
        CloudFormat::Ply(enc) => write_ply(cloud, path, enc),
        CloudFormat::Xyz => write_xyz(cloud, path),
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |cause| Error::Io { path: path.to_owned(), cause }
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(io_err(path))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

/// Write through a temporary file in the destination directory, then rename
/// it into place so readers never observe a partial file.
pub fn write_atomic(
    path: impl AsRef<Path>,
    body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w).map_err(io_err(path))?;
        w.flush().map_err(io_err(path))?;
    }
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}

/// Shortest text that parses back to exactly `v`, always with a decimal
/// point or exponent so it reads as a float.
pub fn format_exact(v: f64) -> String {
    let s = v.to_string();
    if s.contains(['.', 'e', 'E']) || !v.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}

/// `v` rounded to nine significant digits, printed without trailing noise.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.8e}").parse().expect("formatted float parses");
    rounded.to_string()
}
