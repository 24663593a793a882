use std::collections::{BTreeMap, BTreeSet, HashMap};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skyground::fusion::*;
use skyground::synth::{synthesize, SceneSpec};
use skyground::*;

type Key = (i64, i64, i64);

fn key(p: &Point3d, leaf: f64) -> Key {
    ((p.x / leaf).floor() as i64, (p.y / leaf).floor() as i64, (p.z / leaf).floor() as i64)
}

fn keys(c: &PointCloudd, leaf: f64) -> BTreeSet<Key> {
    c.points().iter().map(|p| key(p, leaf)).collect()
}

fn occupied(c: &PointCloudd, leaf: f64) -> BTreeSet<Key> {
    occupied_voxels(c, leaf).into_iter().map(|k| (k.ix, k.iy, k.iz)).collect()
}

fn random_cloud(rng: &mut ChaCha8Rng, n: usize, extent: f64, colored: bool) -> PointCloudd {
    let pts = (0..n)
        .map(|_| {
            Point3::new(
                rng.gen_range(-extent..extent),
                rng.gen_range(-extent..extent),
                rng.gen_range(-extent..extent),
            )
        })
        .collect();
    let labels = (0..n).map(|_| SurfaceClass::ALL[rng.gen_range(0..3)]).collect();
    let mut c = PointCloud::new(pts).with_labels(labels).unwrap();
    if colored {
        let colors = (0..n).map(|_| ColorRGB::new(rng.gen(), rng.gen(), rng.gen())).collect();
        c = c.with_colors(colors).unwrap();
    }
    c
}

#[test]
fn downsample_matches_group_by() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let cloud = random_cloud(&mut rng, 10_000, 5.0, true);
    let leaf = 0.7;
    let mut groups: HashMap<Key, Vec<usize>> = HashMap::new();
    for (i, p) in cloud.points().iter().enumerate() {
        groups.entry(key(p, leaf)).or_default().push(i);
    }
    let out = voxel_downsample(&cloud, leaf).unwrap();
    assert_eq!(out.len(), groups.len());
    assert_eq!(keys(&out, leaf), groups.keys().copied().collect());
    let colors = out.colors().unwrap();
    for (p, c) in out.points().iter().zip(colors) {
        let members = &groups[&key(p, leaf)];
        let n = members.len() as f64;
        let mut sum = [0.0; 3];
        let mut rgb = [0u64; 3];
        for &i in members {
            let q = cloud.points()[i];
            sum[0] += q.x;
            sum[1] += q.y;
            sum[2] += q.z;
            let k = cloud.colors().unwrap()[i];
            rgb[0] += k.r as u64;
            rgb[1] += k.g as u64;
            rgb[2] += k.b as u64;
        }
        assert!((p.x - sum[0] / n).abs() < 1e-12);
        assert!((p.y - sum[1] / n).abs() < 1e-12);
        assert!((p.z - sum[2] / n).abs() < 1e-12);
        let m = members.len() as u64;
        let round = |s: u64| ((2 * s + m) / (2 * m)) as u8;
        assert_eq!(*c, ColorRGB::new(round(rgb[0]), round(rgb[1]), round(rgb[2])));
    }
}

#[test]
fn downsample_majority_label_breaks_ties_by_name() {
    let pts = vec![Point3::new(0.1, 0.1, 0.1), Point3::new(0.2, 0.2, 0.2)];
    let c = PointCloud::new(pts).with_labels(vec![SurfaceClass::Roof, SurfaceClass::Facade]).unwrap();
    let out = voxel_downsample(&c, 1.0).unwrap();
    assert_eq!(out.labels().unwrap(), &[SurfaceClass::Facade]);
}

#[test]
fn fuse_obeys_the_union_law_for_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..200 {
        let (na, nb) = (rng.gen_range(1..400), rng.gen_range(1..400));
        let a = random_cloud(&mut rng, na, 3.0, true);
        let b = random_cloud(&mut rng, nb, 3.0, false);
        let leaf = rng.gen_range(0.05..1.0);
        let rule =
            [ColorRule::PreferColoredSource, ColorRule::Average, ColorRule::FirstWins][rng.gen_range(0..3)];
        let policy = FusionPolicy { leaf, color_rule: rule, ..FusionPolicy::default() };
        let fused = fuse(&[a.clone(), b.clone()], &policy).unwrap();
        let expected: BTreeSet<Key> = keys(&a, leaf).union(&keys(&b, leaf)).copied().collect();
        assert_eq!(keys(&fused, leaf), expected);
        assert_eq!(fused.source_tag(), FUSED_TAG);
    }
}

#[test]
fn single_cloud_keep_all_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let a = random_cloud(&mut rng, 500, 2.0, true).with_source_tag("uav");
    let policy = FusionPolicy { dedup: Dedup::KeepAll, ..FusionPolicy::default() };
    let out = fuse(std::slice::from_ref(&a), &policy).unwrap();
    assert_eq!(out.with_source_tag("uav"), a);
}

#[test]
fn frames_must_agree() {
    let a = PointCloud::new(vec![Point3::new(0.0, 0.0, 0.0)]);
    let b = a.clone().with_frame_id("enu");
    assert!(matches!(fuse(&[a.clone(), b], &FusionPolicy::default()), Err(Error::FrameMismatch { .. })));
    assert!(fuse::<f64>(&[], &FusionPolicy::default()).is_err());
}

#[test]
fn coverage_of_identical_and_disjoint_clouds() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let a = random_cloud(&mut rng, 300, 2.0, false);
    let st = coverage_report(&[a.clone(), a.clone()], 0.1, None).unwrap();
    assert_eq!(st.union, st.intersection);
    assert!(st.sources.iter().all(|s| s.unique == 0 && s.completeness_gain == 0.0));
    let far = a.map_points(|p| p + Point3::new(100.0, 0.0, 0.0));
    let st = coverage_report(&[a, far], 0.1, None).unwrap();
    assert_eq!(st.intersection, 0);
    assert_eq!(st.union, st.sources[0].voxels + st.sources[1].voxels);
}

fn colored_representatives(c: &PointCloudd, leaf: f64) -> BTreeMap<Key, ColorRGB> {
    let ds = voxel_downsample(c, leaf).unwrap();
    ds.points().iter().zip(ds.colors().unwrap()).map(|(p, &col)| (key(p, leaf), col)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fusion_set_properties(seed in any::<u64>(), leaf in 0.05..0.8f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_cloud(&mut rng, 200, 2.0, true).with_source_tag("a");
        let b = random_cloud(&mut rng, 200, 2.0, false).with_source_tag("b");
        let policy = FusionPolicy::with_leaf(leaf);
        let ab = fuse(&[a.clone(), b.clone()], &policy).unwrap();
        let ba = fuse(&[b.clone(), a.clone()], &policy).unwrap();
        prop_assert_eq!(occupied(&ab, leaf), occupied(&ba, leaf));
        let again = fuse(&[ab.clone(), b.clone()], &policy).unwrap();
        prop_assert_eq!(occupied(&again, leaf), occupied(&ab, leaf));
        let aa = fuse(&[a.clone(), a.clone()], &policy).unwrap();
        prop_assert_eq!(occupied(&aa, leaf), keys(&a, leaf));

        // Only `a` is colored: every fused point in an `a` voxel carries a's
        // representative color.
        let reps = colored_representatives(&a, leaf);
        for (p, c) in ab.points().iter().zip(ab.colors().unwrap()) {
            if let Some(expected) = reps.get(&key(p, leaf)) {
                prop_assert_eq!(c, expected);
            }
        }
    }

    #[test]
    fn fusion_never_loses_coverage(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = random_cloud(&mut rng, 400, 2.0, false);
        let pick = |rng: &mut ChaCha8Rng| {
            let idx: Vec<usize> = (0..truth.len()).filter(|_| rng.gen_bool(0.4)).collect();
            truth.select(&idx)
        };
        let (a, b) = (pick(&mut rng).with_source_tag("a"), pick(&mut rng).with_source_tag("b"));
        prop_assume!(!a.is_empty() && !b.is_empty());
        let leaf = 0.3;
        let fused = fuse(&[a.clone(), b.clone()], &FusionPolicy::with_leaf(leaf)).unwrap();
        let st = coverage_report(&[a, b, fused], leaf, Some(&truth)).unwrap();
        for class in st.truth_voxels.keys() {
            let f = st.sources[2].coverage[class];
            prop_assert!(f >= st.sources[0].coverage[class]);
            prop_assert!(f >= st.sources[1].coverage[class]);
            prop_assert_eq!(f, st.union_coverage[class]);
        }
    }
}

#[test]
fn district_fusion_matches_union_oracle() {
    let out = synthesize(&SceneSpec::district()).unwrap();
    let leaf = 0.1;
    let truth = out.scene.truth_cloud();
    let fused = fuse(&[out.uav.clone(), out.mms.clone()], &FusionPolicy::with_leaf(leaf)).unwrap();
    let st = coverage_report(&[out.uav.clone(), out.mms.clone(), fused.clone()], leaf, Some(&truth)).unwrap();

    let (ku, km, kf) = (keys(&out.uav, leaf), keys(&out.mms, leaf), keys(&fused, leaf));
    let mut by_class: BTreeMap<SurfaceClass, BTreeSet<Key>> = BTreeMap::new();
    for (p, l) in truth.points().iter().zip(truth.labels().unwrap()) {
        by_class.entry(*l).or_default().insert(key(p, leaf));
    }
    for (class, tk) in &by_class {
        let frac =
            |set: &BTreeSet<Key>| tk.iter().filter(|k| set.contains(k)).count() as f64 / tk.len() as f64;
        let union_frac =
            tk.iter().filter(|k| ku.contains(k) || km.contains(k)).count() as f64 / tk.len() as f64;
        assert_eq!(st.sources[0].coverage[class], frac(&ku));
        assert_eq!(st.sources[1].coverage[class], frac(&km));
        assert_eq!(st.sources[2].coverage[class], union_frac);
        assert_eq!(frac(&kf), union_frac);
    }
    let f = &st.sources[2].coverage;
    let (u, m) = (&st.sources[0].coverage, &st.sources[1].coverage);
    for class in [SurfaceClass::Roof, SurfaceClass::Facade] {
        assert_eq!(f[&class], u[&class].max(m[&class]));
    }
}
