use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::spec::SceneSpec;
use crate::error::{Error, Result};
use crate::geometry::{ColorRGB, Point3, PointCloud, SurfaceClass, Vector3};

/// Pullback applied at the sample end of a sight line.
pub const SIGHT_EPSILON: f64 = 1e-6;

/// Axis-aligned box, closed on paper but occluding only through its
/// interior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Aabb {
    pub fn new(min: Point3<f64>, max: Point3<f64>) -> Self {
        Self { min, max }
    }

    pub fn contains_strict(&self, p: Point3<f64>) -> bool {
        let (a, b, q) = (self.min.to_array(), self.max.to_array(), p.to_array());
        (0..3).all(|i| a[i] < q[i] && q[i] < b[i])
    }

    fn interiors_overlap(&self, o: &Aabb) -> bool {
        let (a0, a1) = (self.min.to_array(), self.max.to_array());
        let (b0, b1) = (o.min.to_array(), o.max.to_array());
        (0..3).all(|i| a0[i] < b1[i] && b0[i] < a1[i])
    }

    /// Whether the open segment `a`-`b` passes through the open interior.
    /// Grazing a face or an edge does not count.
    pub fn segment_hits(&self, a: Point3<f64>, b: Point3<f64>) -> bool {
        let (lo, hi) = (self.min.to_array(), self.max.to_array());
        let (o, e) = (a.to_array(), b.to_array());
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for i in 0..3 {
            let d = e[i] - o[i];
            if d == 0.0 {
                if o[i] <= lo[i] || o[i] >= hi[i] {
                    return false;
                }
                continue;
            }
            let (mut ta, mut tb) = ((lo[i] - o[i]) / d, (hi[i] - o[i]) / d);
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 >= t1 {
                return false;
            }
        }
        true
    }
}

/// One surface sample of the scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSample {
    pub point: Point3<f64>,
    pub normal: Vector3<f64>,
    pub label: SurfaceClass,
    pub color: ColorRGB,
}

/// Sampled ground and boxes; the boxes double as occluders.
#[derive(Debug, Clone)]
pub struct Scene {
    pub spec: SceneSpec,
    pub samples: Vec<SurfaceSample>,
    pub boxes: Vec<Aabb>,
}

impl Scene {
    /// Every sample with colors and labels, tagged `truth`.
    pub fn truth_cloud(&self) -> PointCloud<f64> {
        self.cloud_of(&(0..self.samples.len()).collect::<Vec<_>>(), true).with_source_tag("truth")
    }

    pub(crate) fn cloud_of(&self, indices: &[usize], colored: bool) -> PointCloud<f64> {
        let points = indices.iter().map(|&i| self.samples[i].point).collect();
        let labels = indices.iter().map(|&i| self.samples[i].label).collect();
        let colors = colored.then(|| indices.iter().map(|&i| self.samples[i].color).collect());
        PointCloud::from_parts(points, colors, Some(labels), "", crate::geometry::DEFAULT_FRAME)
            .expect("scene samples are finite")
    }

    pub fn max_height(&self) -> f64 {
        self.boxes.iter().map(|b| b.max.z).fold(0.0, f64::max)
    }

    pub fn count(&self, label: SurfaceClass) -> usize {
        self.samples.iter().filter(|s| s.label == label).count()
    }
}

/// Grid positions from `lo` to `hi` inclusive of both ends when the span is
/// a whole number of steps.
pub fn grid_steps(lo: f64, hi: f64, spacing: f64) -> Vec<f64> {
    let n = ((hi - lo) / spacing + 1e-9).floor() as usize + 1;
    (0..n).map(|i| lo + i as f64 * spacing).collect()
}

fn check_finite(what: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidScene(format!("{what} has a non-finite coordinate")))
    }
}

fn validate(spec: &SceneSpec) -> Result<Vec<Aabb>> {
    let g = &spec.ground;
    check_finite("ground extent", &[g.x[0], g.x[1], g.y[0], g.y[1]])?;
    if !(g.x[0] < g.x[1] && g.y[0] < g.y[1]) {
        return Err(Error::InvalidScene("ground extent is empty".into()));
    }
    if !(spec.spacing.is_finite() && spec.spacing > 0.0) {
        return Err(Error::InvalidScene(format!("sample spacing must be positive, got {}", spec.spacing)));
    }
    let mut boxes = Vec::with_capacity(spec.buildings.len());
    for (i, b) in spec.buildings.iter().enumerate() {
        check_finite(&format!("building {i}"), &[b.min, b.max].concat())?;
        if !(0..3).all(|k| b.min[k] < b.max[k]) {
            return Err(Error::InvalidScene(format!("building {i} has min corner not below max corner")));
        }
        if b.min[2] < 0.0 {
            return Err(Error::InvalidScene(format!(
                "building {i} extends below the ground (min z = {})",
                b.min[2]
            )));
        }
        boxes.push(Aabb::new(Point3::from_array(b.min), Point3::from_array(b.max)));
    }
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            if boxes[i].interiors_overlap(&boxes[j]) {
                return Err(Error::InvalidScene(format!("buildings {i} and {j} overlap")));
            }
        }
    }
    Ok(boxes)
}

struct Face {
    origin: Point3<f64>,
    u: (Vector3<f64>, f64),
    v: (Vector3<f64>, f64),
    normal: Vector3<f64>,
    label: SurfaceClass,
    color: [u8; 3],
}

fn faces(spec: &SceneSpec, boxes: &[Aabb]) -> Vec<Face> {
    let ex = Vector3::new(1.0, 0.0, 0.0);
    let ey = Vector3::new(0.0, 1.0, 0.0);
    let ez = Vector3::new(0.0, 0.0, 1.0);
    let g = &spec.ground;
    let mut out = vec![Face {
        origin: Point3::new(g.x[0], g.y[0], 0.0),
        u: (ex, g.x[1] - g.x[0]),
        v: (ey, g.y[1] - g.y[0]),
        normal: ez,
        label: SurfaceClass::Ground,
        color: g.color,
    }];
    for (b, bs) in boxes.iter().zip(&spec.buildings) {
        let (lo, hi) = (b.min, b.max);
        let (dx, dy, dz) = (hi.x - lo.x, hi.y - lo.y, hi.z - lo.z);
        out.push(Face {
            origin: Point3::new(lo.x, lo.y, hi.z),
            u: (ex, dx),
            v: (ey, dy),
            normal: ez,
            label: SurfaceClass::Roof,
            color: bs.roof_color,
        });
        let side = |origin, u, v, normal| Face {
            origin,
            u,
            v,
            normal,
            label: SurfaceClass::Facade,
            color: bs.facade_color,
        };
        out.push(side(lo, (ey, dy), (ez, dz), -ex));
        out.push(side(Point3::new(hi.x, lo.y, lo.z), (ey, dy), (ez, dz), ex));
        out.push(side(lo, (ex, dx), (ez, dz), -ey));
        out.push(side(Point3::new(lo.x, hi.y, lo.z), (ex, dx), (ez, dz), ey));
    }
    out
}

fn jitter(rng: &mut ChaCha8Rng, base: [u8; 3], amplitude: u8) -> ColorRGB {
    let a = amplitude as i32;
    let mut c = [0u8; 3];
    for (k, ch) in c.iter_mut().enumerate() {
        let d = if a == 0 { 0 } else { rng.gen_range(-a..=a) };
        *ch = (base[k] as i32 + d).clamp(0, 255) as u8;
    }
    ColorRGB::new(c[0], c[1], c[2])
}

/// Sample the ground and every box face on a regular grid. Samples whose
/// outward neighborhood lies inside another box (contact faces, ground under
/// a footprint) are dropped.
pub fn build_scene(spec: &SceneSpec) -> Result<Scene> {
    let boxes = validate(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut samples = Vec::new();
    for f in faces(spec, &boxes) {
        for a in grid_steps(0.0, f.u.1, spec.spacing) {
            for b in grid_steps(0.0, f.v.1, spec.spacing) {
                let p = f.origin + f.u.0 * a + f.v.0 * b;
                let probe = p + f.normal * SIGHT_EPSILON;
                if boxes.iter().any(|bx| bx.contains_strict(probe)) {
                    continue;
                }
                samples.push(SurfaceSample {
                    point: p,
                    normal: f.normal,
                    label: f.label,
                    color: jitter(&mut rng, f.color, spec.texture),
                });
            }
        }
    }
    Ok(Scene { spec: spec.clone(), samples, boxes })
}

/// True iff the sample faces the viewpoint and the sight line, pulled back
/// by [`SIGHT_EPSILON`] at the sample end, crosses no box interior.
pub fn visible(viewpoint: Point3<f64>, point: Point3<f64>, normal: Vector3<f64>, boxes: &[Aabb]) -> bool {
    let to_view = viewpoint - point;
    if normal.dot(to_view) <= 0.0 {
        return false;
    }
    let end = point + to_view * (SIGHT_EPSILON / to_view.norm());
    !boxes.iter().any(|b| b.segment_hits(viewpoint, end))
}
