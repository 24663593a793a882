use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{axis_rotation, make_transform, Axis, Point3, Transform};
use crate::io::read_text;

/// Ground rectangle at z = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundSpec {
    pub x: [f64; 2],
    pub y: [f64; 2],
    #[serde(default = "default_ground_color")]
    pub color: [u8; 3],
}

/// Axis-aligned building block standing on (or above) the ground.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub min: [f64; 3],
    pub max: [f64; 3],
    #[serde(default = "default_roof_color")]
    pub roof_color: [u8; 3],
    #[serde(default = "default_facade_color")]
    pub facade_color: [u8; 3],
}

impl BoxSpec {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self { min, max, roof_color: default_roof_color(), facade_color: default_facade_color() }
    }
}

/// Aerial camera rig: a grid of viewpoints at fixed altitude, each with a
/// nadir cone and four oblique cones tilted toward +x, -x, +y, -y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UavParams {
    pub altitude: f64,
    /// Grid pitch in meters. The grid is centered on the ground rectangle
    /// and keeps half a pitch away from its border.
    pub spacing: f64,
    /// Cone half-angle, degrees.
    pub cone_half_angle: f64,
    /// Oblique tilt from nadir, degrees.
    pub oblique_tilt: f64,
    /// Per-axis Gaussian position noise, meters.
    pub noise_sigma: f64,
}

impl Default for UavParams {
    fn default() -> Self {
        Self { altitude: 50.0, spacing: 30.0, cone_half_angle: 45.0, oblique_tilt: 45.0, noise_sigma: 0.0 }
    }
}

/// Vehicle scanner driven along a polyline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmsParams {
    pub height: f64,
    pub max_range: f64,
    /// Distance between scanner stations along the polyline, meters.
    pub step: f64,
    /// Polyline vertices (x, y). Empty means a loop 5 m inside the ground
    /// border.
    pub trajectory: Vec<[f64; 2]>,
    pub noise_sigma: f64,
}

impl Default for MmsParams {
    fn default() -> Self {
        Self { height: 2.0, max_range: 80.0, step: 2.0, trajectory: Vec::new(), noise_sigma: 0.0 }
    }
}

/// Known similarity applied to the aerial cloud to emulate a separate
/// survey frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Misregistration {
    pub scale: f64,
    /// Rotation about +z, degrees.
    pub yaw: f64,
    pub translation: [f64; 3],
}

impl Default for Misregistration {
    fn default() -> Self {
        Self { scale: 0.95, yaw: 2.0, translation: [3.0, -2.0, 0.5] }
    }
}

impl Misregistration {
    pub fn transform(&self) -> Result<Transform<f64>> {
        let r = axis_rotation(Axis::Z, self.yaw.to_radians())?;
        make_transform(&r, Point3::from_array(self.translation), self.scale)
    }
}

/// Full scene description, including the sensors that observe it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub ground: GroundSpec,
    #[serde(default)]
    pub buildings: Vec<BoxSpec>,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    /// Amplitude of the seeded per-sample color jitter around each albedo.
    #[serde(default = "default_texture")]
    pub texture: u8,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub uav: UavParams,
    #[serde(default)]
    pub mms: MmsParams,
    #[serde(default)]
    pub misregistration: Misregistration,
}

fn default_ground_color() -> [u8; 3] {
    [118, 116, 108]
}

fn default_roof_color() -> [u8; 3] {
    [168, 64, 52]
}

fn default_facade_color() -> [u8; 3] {
    [206, 196, 176]
}

fn default_spacing() -> f64 {
    0.25
}

fn default_texture() -> u8 {
    12
}

impl SceneSpec {
    /// Bare ground rectangle with default sensors.
    pub fn ground_only(x: [f64; 2], y: [f64; 2]) -> Self {
        Self {
            ground: GroundSpec { x, y, color: default_ground_color() },
            buildings: Vec::new(),
            spacing: default_spacing(),
            texture: default_texture(),
            seed: 0,
            uav: UavParams::default(),
            mms: MmsParams::default(),
            misregistration: Misregistration::default(),
        }
    }

    /// The reference district: a 3 x 3 grid of 20 m blocks on a 100 m square
    /// with 10 m streets between blocks and a perimeter road. The vehicle drives
    /// every street; the aerial grid flies over the block centers.
    pub fn district() -> Self {
        let heights = [[38.0, 42.0, 35.0], [40.0, 44.0, 39.0], [36.0, 41.0, 37.0]];
        let mut buildings = Vec::new();
        for (i, row) in heights.iter().enumerate() {
            for (j, &h) in row.iter().enumerate() {
                let cx = -30.0 + 30.0 * j as f64;
                let cy = -30.0 + 30.0 * i as f64;
                buildings.push(BoxSpec::new([cx - 10.0, cy - 10.0, 0.0], [cx + 10.0, cy + 10.0, h]));
            }
        }
        let trajectory = vec![
            [-45.0, -45.0],
            [45.0, -45.0],
            [45.0, -15.0],
            [-45.0, -15.0],
            [-45.0, 15.0],
            [45.0, 15.0],
            [45.0, 45.0],
            [-45.0, 45.0],
            [-45.0, -45.0],
            [-15.0, -45.0],
            [-15.0, 45.0],
            [15.0, 45.0],
            [15.0, -45.0],
            [45.0, -45.0],
            [45.0, 45.0],
        ];
        Self {
            buildings,
            mms: MmsParams { trajectory, ..MmsParams::default() },
            ..Self::ground_only([-50.0, 50.0], [-50.0, 50.0])
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line =
                e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1).unwrap_or(0);
            Error::parse(line, e.message())
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene spec serializes")
    }
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self::district()
    }
}
