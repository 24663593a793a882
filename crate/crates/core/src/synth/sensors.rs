use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::scene::{visible, Scene};
use super::spec::{MmsParams, UavParams};
use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud, Vector3};

const UAV_STREAM: u64 = 0x5541_5600;
const MMS_STREAM: u64 = 0x4d4d_5300;

fn invalid(msg: String) -> Error {
    Error::InvalidScene(msg)
}

/// Centered grid coordinates along one axis: `center + k * pitch`, staying
/// half a pitch inside the range.
fn centered_axis(lo: f64, hi: f64, pitch: f64) -> Vec<f64> {
    let c = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let k = ((half - 0.5 * pitch) / pitch + 1e-9).floor().max(0.0) as i64;
    (-k..=k).map(|i| c + i as f64 * pitch).collect()
}

pub fn uav_viewpoints(scene: &Scene, params: &UavParams) -> Result<Vec<Point3<f64>>> {
    if !(params.altitude.is_finite() && params.altitude > scene.max_height()) {
        return Err(invalid(format!(
            "UAV altitude {} must exceed the tallest building ({})",
            params.altitude,
            scene.max_height()
        )));
    }
    if !(params.spacing.is_finite() && params.spacing > 0.0) {
        return Err(invalid(format!("UAV grid spacing must be positive, got {}", params.spacing)));
    }
    let g = &scene.spec.ground;
    let xs = centered_axis(g.x[0], g.x[1], params.spacing);
    let ys = centered_axis(g.y[0], g.y[1], params.spacing);
    Ok(ys.iter().flat_map(|&y| xs.iter().map(move |&x| Point3::new(x, y, params.altitude))).collect())
}

/// Unit axes of the five look cones: nadir, then obliques toward +x, -x,
/// +y, -y.
pub fn look_axes(oblique_tilt_deg: f64) -> [Vector3<f64>; 5] {
    let (s, c) = oblique_tilt_deg.to_radians().sin_cos();
    [
        Vector3::new(0.0, 0.0, -1.0),
        Vector3::new(s, 0.0, -c),
        Vector3::new(-s, 0.0, -c),
        Vector3::new(0.0, s, -c),
        Vector3::new(0.0, -s, -c),
    ]
}

/// Whether `p` falls inside at least one look cone of a rig at `viewpoint`.
pub fn in_look_cone(viewpoint: Point3<f64>, p: Point3<f64>, params: &UavParams) -> bool {
    let d = p - viewpoint;
    let n = d.norm();
    if n == 0.0 {
        return false;
    }
    let cos_half = params.cone_half_angle.to_radians().cos();
    look_axes(params.oblique_tilt).iter().any(|a| a.dot(d) >= cos_half * n)
}

fn check_uav(params: &UavParams) -> Result<()> {
    if !(params.cone_half_angle > 0.0 && params.cone_half_angle <= 90.0) {
        return Err(invalid(format!(
            "cone half-angle must be in (0, 90] degrees, got {}",
            params.cone_half_angle
        )));
    }
    if !(params.oblique_tilt >= 0.0 && params.oblique_tilt <= 90.0) {
        return Err(invalid(format!("oblique tilt must be in [0, 90] degrees, got {}", params.oblique_tilt)));
    }
    check_sigma(params.noise_sigma)
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("noise sigma must be non-negative, got {sigma}")))
    }
}

/// Indices of samples seen by at least one UAV viewpoint inside its look
/// cones, in sample order.
pub fn uav_visible_indices(scene: &Scene, params: &UavParams) -> Result<Vec<usize>> {
    check_uav(params)?;
    let views = uav_viewpoints(scene, params)?;
    Ok((0..scene.samples.len())
        .into_par_iter()
        .filter(|&i| {
            let s = &scene.samples[i];
            views
                .iter()
                .any(|&v| in_look_cone(v, s.point, params) && visible(v, s.point, s.normal, &scene.boxes))
        })
        .collect())
}

fn default_loop(scene: &Scene) -> Vec<[f64; 2]> {
    let g = &scene.spec.ground;
    let inset = 5.0f64.min(0.25 * (g.x[1] - g.x[0]).min(g.y[1] - g.y[0]));
    let (x0, x1, y0, y1) = (g.x[0] + inset, g.x[1] - inset, g.y[0] + inset, g.y[1] - inset);
    vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]
}

/// Scanner stations along the trajectory, `step` apart on each leg, ending
/// on the last vertex.
pub fn mms_stations(scene: &Scene, params: &MmsParams) -> Result<Vec<Point3<f64>>> {
    if !(params.height.is_finite() && params.height >= 0.0) {
        return Err(invalid(format!("MMS height must be non-negative, got {}", params.height)));
    }
    if !(params.step.is_finite() && params.step > 0.0) {
        return Err(invalid(format!("MMS station step must be positive, got {}", params.step)));
    }
    let path = if params.trajectory.is_empty() { default_loop(scene) } else { params.trajectory.clone() };
    let g = &scene.spec.ground;
    for (i, v) in path.iter().enumerate() {
        let inside = g.x[0] <= v[0] && v[0] <= g.x[1] && g.y[0] <= v[1] && v[1] <= g.y[1];
        if !inside {
            return Err(invalid(format!(
                "trajectory vertex {i} ({}, {}) lies outside the ground extent",
                v[0], v[1]
            )));
        }
    }
    let at = |v: [f64; 2]| Point3::new(v[0], v[1], params.height);
    let mut out = Vec::new();
    for leg in path.windows(2) {
        let (a, b) = (at(leg[0]), at(leg[1]));
        let n = ((b - a).norm() / params.step).ceil().max(1.0) as usize;
        for k in 0..n {
            out.push(a + (b - a) * (k as f64 / n as f64));
        }
    }
    if let Some(&last) = path.last() {
        out.push(at(last));
    }
    if let Some(p) = out.iter().find(|p| scene.boxes.iter().any(|b| b.contains_strict(**p))) {
        return Err(invalid(format!("trajectory passes through a building at ({}, {}, {})", p.x, p.y, p.z)));
    }
    Ok(out)
}

/// Indices of samples seen by at least one station within range, in sample
/// order.
pub fn mms_visible_indices(scene: &Scene, params: &MmsParams) -> Result<Vec<usize>> {
    if !(params.max_range.is_finite() && params.max_range > 0.0) {
        return Err(invalid(format!("MMS range must be positive, got {}", params.max_range)));
    }
    check_sigma(params.noise_sigma)?;
    let stations = mms_stations(scene, params)?;
    let r2 = params.max_range * params.max_range;
    Ok((0..scene.samples.len())
        .into_par_iter()
        .filter(|&i| {
            let s = &scene.samples[i];
            stations
                .iter()
                .any(|&v| (v - s.point).norm_squared() <= r2 && visible(v, s.point, s.normal, &scene.boxes))
        })
        .collect())
}

fn add_noise(cloud: PointCloud<f64>, sigma: f64, seed: u64) -> PointCloud<f64> {
    if sigma == 0.0 {
        return cloud;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma checked non-negative");
    let points = cloud
        .points()
        .iter()
        .map(|&p| {
            let dx = normal.sample(&mut rng);
            let dy = normal.sample(&mut rng);
            let dz = normal.sample(&mut rng);
            p + Vector3::new(dx, dy, dz)
        })
        .collect();
    PointCloud::from_parts(
        points,
        cloud.colors().map(<[_]>::to_vec),
        cloud.labels().map(<[_]>::to_vec),
        cloud.source_tag(),
        cloud.frame_id(),
    )
    .expect("noisy points stay finite")
}

/// Colored, labeled aerial cloud tagged `uav`.
pub fn sample_uav(scene: &Scene, params: &UavParams) -> Result<PointCloud<f64>> {
    let idx = uav_visible_indices(scene, params)?;
    let cloud = scene.cloud_of(&idx, true).with_source_tag("uav");
    Ok(add_noise(cloud, params.noise_sigma, scene.spec.seed ^ UAV_STREAM))
}

/// Colorless, labeled vehicle cloud tagged `mms`.
pub fn sample_mms(scene: &Scene, params: &MmsParams) -> Result<PointCloud<f64>> {
    let idx = mms_visible_indices(scene, params)?;
    let cloud = scene.cloud_of(&idx, false).with_source_tag("mms");
    Ok(add_noise(cloud, params.noise_sigma, scene.spec.seed ^ MMS_STREAM))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SurfaceClass;
    use crate::synth::{build_scene, BoxSpec, SceneSpec};

    #[test]
    fn centered_grid() {
        assert_eq!(centered_axis(-50.0, 50.0, 30.0), vec![-30.0, 0.0, 30.0]);
        assert_eq!(centered_axis(0.0, 10.0, 30.0), vec![5.0]);
        assert_eq!(centered_axis(0.0, 60.0, 30.0), vec![30.0]);
    }

    #[test]
    fn cone_membership() {
        let p = UavParams::default();
        let v = Point3::new(0.0, 0.0, 50.0);
        assert!(in_look_cone(v, Point3::new(0.0, 0.0, 0.0), &p));
        assert!(in_look_cone(v, Point3::new(49.0, 0.0, 49.0), &p));
        // straight up is outside every cone
        assert!(!in_look_cone(v, Point3::new(0.0, 0.0, 60.0), &p));
    }

    #[test]
    fn stations_cover_each_leg() {
        let scene = build_scene(&SceneSpec::ground_only([0.0, 10.0], [0.0, 10.0])).unwrap();
        let params = MmsParams {
            trajectory: vec![[0.0, 0.0], [10.0, 0.0], [10.0, 3.0]],
            step: 2.0,
            ..MmsParams::default()
        };
        let st = mms_stations(&scene, &params).unwrap();
        assert_eq!(st.len(), 5 + 2 + 1);
        assert_eq!(st.last().unwrap(), &Point3::new(10.0, 3.0, 2.0));
    }

    #[test]
    fn sensor_parameters_validated() {
        let mut spec = SceneSpec::ground_only([-20.0, 20.0], [-20.0, 20.0]);
        spec.buildings = vec![BoxSpec::new([0.0, 0.0, 0.0], [5.0, 5.0, 60.0])];
        let scene = build_scene(&spec).unwrap();
        assert!(sample_uav(&scene, &UavParams::default()).is_err());
        let mms = MmsParams { trajectory: vec![[0.0, -30.0], [0.0, 0.0]], ..MmsParams::default() };
        assert!(sample_mms(&scene, &mms).is_err());
        let through = MmsParams { trajectory: vec![[-10.0, 2.0], [10.0, 2.0]], ..MmsParams::default() };
        assert!(sample_mms(&scene, &through).is_err());
    }

    #[test]
    fn clouds_carry_channels_and_tags() {
        let mut spec = SceneSpec::ground_only([-20.0, 20.0], [-20.0, 20.0]);
        spec.spacing = 1.0;
        spec.buildings = vec![BoxSpec::new([0.0, 0.0, 0.0], [10.0, 10.0, 10.0])];
        let scene = build_scene(&spec).unwrap();
        let uav = sample_uav(&scene, &spec.uav).unwrap();
        let mms = sample_mms(&scene, &spec.mms).unwrap();
        assert_eq!(uav.source_tag(), "uav");
        assert!(uav.colors().is_some() && uav.labels().is_some());
        assert_eq!(mms.source_tag(), "mms");
        assert!(mms.colors().is_none());
        assert!(!mms.labels().unwrap().contains(&SurfaceClass::Roof));
    }

    #[test]
    fn noise_is_seeded() {
        let mut spec = SceneSpec::ground_only([0.0, 10.0], [0.0, 10.0]);
        spec.spacing = 1.0;
        spec.uav.noise_sigma = 0.05;
        let scene = build_scene(&spec).unwrap();
        let a = sample_uav(&scene, &spec.uav).unwrap();
        let b = sample_uav(&scene, &spec.uav).unwrap();
        assert_eq!(a, b);
        let clean = sample_uav(&scene, &UavParams::default()).unwrap();
        assert_ne!(a.points(), clean.points());
    }
}
