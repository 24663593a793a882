use std::path::Path;

use serde::{Deserialize, Serialize};

use super::read_text;
use crate::error::{Error, Result};

/// One row of a UAV image position table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub id: i64,
    /// Degrees, [-90, 90].
    pub latitude: f64,
    /// Degrees, [-180, 180].
    pub longitude: f64,
    /// Meters.
    pub altitude: f64,
    /// Heading in degrees, [0, 360).
    pub yaw: f64,
}

impl PoseRecord {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(-90.0..=90.0).contains(&self.latitude) {
            return Err(format!("latitude {} outside [-90, 90]", self.latitude));
        }
        if !(-180.0..=180.0).contains(&self.longitude) {
            return Err(format!("longitude {} outside [-180, 180]", self.longitude));
        }
        if !self.altitude.is_finite() {
            return Err("altitude is not finite".into());
        }
        if !(0.0..360.0).contains(&self.yaw) {
            return Err(format!("yaw {} outside [0, 360)", self.yaw));
        }
        Ok(())
    }
}

const COLUMNS: [&str; 5] = ["id", "latitude", "longitude", "altitude", "yaw"];

/// Header cells are matched on their leading word, so unit suffixes such as
/// `Latitude (°)` or `Yaw(°)` are accepted.
fn header_word(cell: &str) -> String {
    cell.trim().chars().take_while(|c| c.is_alphabetic()).collect::<String>().to_lowercase()
}

/// `Id, Latitude (°), Longitude (°), Altitude (m), Yaw(°)`, comma or tab
/// separated; the header line decides which.
pub fn parse_pose_table(text: &str) -> Result<Vec<PoseRecord>> {
    let header = text.lines().find(|l| !l.trim().is_empty() && !l.starts_with('#')).unwrap_or("");
    let delimiter = if header.contains('\t') && !header.contains(',') { b'\t' } else { b',' };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::parse(1, e.to_string()))?.clone();
    let words: Vec<String> = headers.iter().map(header_word).collect();
    if words != COLUMNS {
        return Err(Error::parse(
            1,
            format!(
                "expected columns Id, Latitude, Longitude, Altitude, Yaw; found {:?}",
                headers.iter().collect::<Vec<_>>()
            ),
        ));
    }

    let mut out = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let row = row + 1;
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(row + 1, |p| p.line() as usize);
            Error::parse(line, e.to_string())
        })?;
        let line = rec.position().map_or(row + 1, |p| p.line() as usize);
        if rec.len() != 5 {
            return Err(Error::parse(line, format!("expected 5 columns, found {}", rec.len())));
        }
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|_| Error::parse(line, format!("invalid {} '{}'", COLUMNS[i], &rec[i])))
        };
        let id =
            rec[0].parse::<i64>().map_err(|_| Error::parse(line, format!("invalid id '{}'", &rec[0])))?;
        let record =
            PoseRecord { id, latitude: num(1)?, longitude: num(2)?, altitude: num(3)?, yaw: num(4)? };
        record.validate().map_err(|message| Error::Validation { row, message })?;
        out.push(record);
    }
    Ok(out)
}

pub fn read_pose_table(path: impl AsRef<Path>) -> Result<Vec<PoseRecord>> {
    parse_pose_table(&read_text(path.as_ref())?)
}
