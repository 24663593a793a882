use serde::{Deserialize, Serialize};

use super::pose::PoseRecord;
use crate::error::{Error, Result};
use crate::geometry::Point3;

/// WGS-84 semi-major axis, meters.
pub const WGS84_A: f64 = 6_378_137.0;
/// WGS-84 flattening.
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;

/// Anchor of a local east-north-up frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoOrigin {
    pub latitude: f64,
    pub longitude: f64,
    pub altitude: f64,
}

impl GeoOrigin {
    pub fn new(latitude: f64, longitude: f64, altitude: f64) -> Self {
        Self { latitude, longitude, altitude }
    }
}

impl From<&PoseRecord> for GeoOrigin {
    fn from(r: &PoseRecord) -> Self {
        Self::new(r.latitude, r.longitude, r.altitude)
    }
}

fn to_ecef(lat_deg: f64, lon_deg: f64, h: f64) -> [f64; 3] {
    let e2 = WGS84_F * (2.0 - WGS84_F);
    let (sl, cl) = lat_deg.to_radians().sin_cos();
    let (so, co) = lon_deg.to_radians().sin_cos();
    let n = WGS84_A / (1.0 - e2 * sl * sl).sqrt();
    [(n + h) * cl * co, (n + h) * cl * so, (n * (1.0 - e2) + h) * sl]
}

/// East-north-up coordinates of a pose relative to `origin` on the WGS-84
/// ellipsoid, meters.
pub fn geodetic_to_enu(record: &PoseRecord, origin: &GeoOrigin) -> Result<Point3<f64>> {
    record.validate().map_err(|message| Error::Validation { row: record.id.max(0) as usize, message })?;
    let probe = PoseRecord {
        id: 0,
        latitude: origin.latitude,
        longitude: origin.longitude,
        altitude: origin.altitude,
        yaw: 0.0,
    };
    probe.validate().map_err(|message| Error::invalid(format!("origin: {message}")))?;

    let p = to_ecef(record.latitude, record.longitude, record.altitude);
    let o = to_ecef(origin.latitude, origin.longitude, origin.altitude);
    let d = [p[0] - o[0], p[1] - o[1], p[2] - o[2]];
    let (sl, cl) = origin.latitude.to_radians().sin_cos();
    let (so, co) = origin.longitude.to_radians().sin_cos();
    Ok(Point3::new(
        -so * d[0] + co * d[1],
        -sl * co * d[0] - sl * so * d[1] + cl * d[2],
        cl * co * d[0] + cl * so * d[1] + sl * d[2],
    ))
}
