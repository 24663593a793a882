//! Synthetic district of box buildings observed by an aerial camera rig and
//! a street-level scanner, with exact occlusion and known ground truth.

mod scene;
mod sensors;
mod spec;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use scene::{build_scene, grid_steps, visible, Aabb, Scene, SurfaceSample, SIGHT_EPSILON};
pub use sensors::{
    in_look_cone, look_axes, mms_stations, mms_visible_indices, sample_mms, sample_uav, uav_viewpoints,
    uav_visible_indices,
};
pub use spec::{BoxSpec, GroundSpec, Misregistration, MmsParams, SceneSpec, UavParams};

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, SurfaceClass, Transform, Transformable};
use crate::registration::{CorrespondencePair, CorrespondenceSet};

/// Everything one synthesis run produces.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub scene: Scene,
    pub uav: PointCloud<f64>,
    pub mms: PointCloud<f64>,
    /// The aerial cloud moved into its own survey frame.
    pub misregistered_uav: PointCloud<f64>,
    /// Maps scene coordinates to the survey frame of `misregistered_uav`.
    /// Registering that cloud onto the scene recovers its inverse.
    pub misregistration: Transform<f64>,
}

pub fn synthesize(spec: &SceneSpec) -> Result<SynthOutput> {
    let scene = build_scene(spec)?;
    let uav = sample_uav(&scene, &spec.uav)?;
    let mms = sample_mms(&scene, &spec.mms)?;
    let misregistration = spec.misregistration.transform()?;
    let misregistered_uav = uav.transformed_by(&misregistration);
    Ok(SynthOutput { scene, uav, mms, misregistered_uav, misregistration })
}

/// Draw `count` distinct building samples and pair each survey-frame
/// position (source) with its scene position (target).
pub fn keypoint_pairs(
    scene: &Scene,
    misregistration: &Transform<f64>,
    count: usize,
    seed: u64,
) -> Result<CorrespondenceSet<f64>> {
    let candidates: Vec<usize> =
        (0..scene.samples.len()).filter(|&i| scene.samples[i].label != SurfaceClass::Ground).collect();
    if candidates.len() < count {
        return Err(Error::InvalidScene(format!(
            "scene has {} building samples, {count} keypoints requested",
            candidates.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = sample(&mut rng, candidates.len(), count)
        .into_iter()
        .enumerate()
        .map(|(id, k)| {
            let p = scene.samples[candidates[k]].point;
            CorrespondencePair { id: id as u64, source: misregistration.apply(p), target: p }
        })
        .collect();
    CorrespondenceSet::new(pairs)
}
