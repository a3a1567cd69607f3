use aos_core::metrics::{
    contrast_of, evaluate_cell, measured_disparity, occlusion_suppression_score, parameter_sweep,
    plane_sweep_depth, rivalry_score, target_top_region, DepthRange, RadianceRefs, SweepCell,
    SweepContext, SweepMetric,
};
use aos_core::presets::Preset;
use aos_core::*;

fn textured_ground(seed: u64) -> Scene {
    generate_scene(&SceneSpec {
        extent: [60.0, 40.0],
        ground_temp: 10.0,
        ground_noise_amp: 1.5,
        ground_noise_scale: 0.6,
        targets: Vec::new(),
        occluders: OccluderLayerSpec::default(),
        seed,
    })
    .unwrap()
}

/// Disparity of a point at height `t` when the pair is focused on the ground:
/// `-f e (1 / (h - t) - 1 / h)`, right minus left.
fn analytic_disparity(f: f64, e: f64, t: f64) -> f64 {
    -f * e * (1.0 / (26.0 - t) - 1.0 / 26.0)
}

#[test]
fn measured_parallax_matches_geometry_on_open_field() {
    let scene = generate_scene(&Preset::Open.spec(0)).unwrap();
    let intr = CameraIntrinsics::default();
    let stack = render_scan(&scene, &FlightPath::default(), intr).unwrap();
    let target = &scene.spec.targets[0];
    for e in [1.0, 2.0] {
        let pair = stereo_pair(&stack, 0.0, e, 2.0, 26.0).unwrap();
        let region = target_top_region(&pair, target, 21);
        let d = measured_disparity(&pair, region).unwrap().disparity_px.unwrap();
        let expected = analytic_disparity(intr.focal_px(), e, target.height);
        assert!((d - expected).abs() < 0.25, "e_f {e}: measured {d}, expected {expected}");

        // A ground window away from any target has no disparity.
        let ground = PixelRect::new(420, 380, 31, 31);
        let g = measured_disparity(&pair, ground).unwrap().disparity_px.unwrap();
        assert!(g.abs() < 0.1, "ground disparity {g}");

        // Swapping the eyes flips the sign.
        let swapped = StereoPair {
            left: pair.right.clone(),
            right: pair.left.clone(),
            ..pair
        };
        let s = measured_disparity(&swapped, region).unwrap().disparity_px.unwrap();
        assert!((s + d).abs() < 0.05, "{s} vs {d}");
    }
}

#[test]
fn michelson_and_rms_by_hand() {
    // Half the window at 10, half at 30: Michelson 20 / 40, RMS 10.
    let mut img = Raster::filled(8, 8, 10.0);
    for y in 0..8 {
        for x in 4..8 {
            img.set(x, y, 30.0);
        }
    }
    let c = contrast_of(&img, PixelRect::new(0, 0, 8, 8), None).unwrap();
    assert_eq!(c.michelson, Some(0.5));
    assert!((c.rms - 10.0).abs() < 1e-12);
    let zero = contrast_of(&Raster::filled(4, 4, 0.0), PixelRect::new(0, 0, 4, 4), None).unwrap();
    assert_eq!(zero.michelson, None);
    assert_eq!(zero.rms, 0.0);
}

fn occluded_small_stack(density_scale: f64) -> (Scene, ScanStack) {
    let mut spec = Preset::Forest.spec(1);
    spec.occluders.density *= density_scale;
    let scene = generate_scene(&spec).unwrap();
    let stack = render_scan(&scene, &FlightPath::default(), CameraIntrinsics::new(61.0, 160, 128)).unwrap();
    (scene, stack)
}

#[test]
fn rivalry_zero_for_identical_eyes_and_offset_invariant() {
    let (scene, stack) = occluded_small_stack(1.0);
    let refs = RadianceRefs::from_scene(&scene);
    assert!(refs.occluder.is_some());

    let pair = stereo_pair(&stack, 0.0, 0.0, 2.0, 26.0).unwrap();
    assert_eq!(rivalry_score(&pair, &refs).unwrap(), 0.0);

    let pair = stereo_pair(&stack, 0.0, 2.0, 2.0, 26.0).unwrap();
    let base = rivalry_score(&pair, &refs).unwrap();
    assert!(base > 0.0);
    let delta = 7.0;
    let mut shifted = pair.clone();
    shifted.left.image = pair.left.image.map(|v| v + delta as f32);
    shifted.right.image = pair.right.image.map(|v| v + delta as f32);
    let moved = rivalry_score(&shifted, &refs.offset(delta)).unwrap();
    assert!((moved - base).abs() < 1e-4, "{moved} vs {base}");

    // Without an occluder layer nothing counts as residue.
    let open = generate_scene(&Preset::Open.spec(1)).unwrap();
    assert_eq!(RadianceRefs::from_scene(&open).occluder, None);
}

#[test]
fn suppression_extremes() {
    // Unoccluded target: every footprint pixel reads target.
    let scene = generate_scene(&Preset::Open.spec(2)).unwrap();
    let intr = CameraIntrinsics::new(61.0, 320, 256);
    let stack = render_scan(&scene, &FlightPath::default(), intr).unwrap();
    let integral = integrate(&stack, IntegralParams::new(0.0, 0.0, 26.0)).unwrap();
    assert_eq!(occlusion_suppression_score(&integral, Some(&scene), 0).unwrap(), 1.0);

    // A disc at crown height directly over the target hides it from a single frame.
    let mut spec = Preset::Open.spec(2);
    spec.targets.truncate(1);
    let t = spec.targets[0].clone();
    let occ = Occluder {
        center: t.position,
        height: 21.0,
        radius: 1.5,
    };
    let hidden = Scene::with_occluders(spec, vec![occ]).unwrap();
    let single = FlightPath {
        x_start: t.position[0],
        length: 0.0,
        ..FlightPath::default()
    };
    let stack = render_scan(&hidden, &single, intr).unwrap();
    let integral = integrate(&stack, IntegralParams::new(t.position[0], 0.0, 26.0)).unwrap();
    assert_eq!(occlusion_suppression_score(&integral, Some(&hidden), 0).unwrap(), 0.0);

    // Real stacks carry no ground truth.
    assert!(occlusion_suppression_score(&integral, None, 0).is_err());
}

#[test]
fn sweep_cells_match_direct_evaluation() {
    let (scene, stack) = occluded_small_stack(1.0);
    let ctx = SweepContext::for_target(&stack, &scene, 0, 0.0, 26.0).unwrap();
    let baselines = [1.0, 12.0];
    let apertures = [1.0, 4.0];
    let grid = parameter_sweep(&stack, SweepMetric::Rivalry, &baselines, &apertures, &ctx).unwrap();
    for (i, &a) in apertures.iter().enumerate() {
        for (j, &e) in baselines.iter().enumerate() {
            match grid.get(i, j) {
                SweepCell::Value(v) => {
                    assert!(e + a <= 14.0);
                    assert_eq!(v, evaluate_cell(&stack, SweepMetric::Rivalry, e, a, &ctx).unwrap());
                }
                SweepCell::Infeasible => assert!(e + a > 14.0, "cell a={a}, e_f={e}"),
            }
        }
    }
    assert_eq!(grid.get(1, 1), SweepCell::Infeasible);
    let (a, e, v) = grid.argmax().unwrap();
    assert!(e + a <= 14.0 && v >= 0.0);
}

#[test]
fn plane_sweep_recovers_flat_ground() {
    let scene = textured_ground(4);
    let path = FlightPath {
        x_start: -1.0,
        length: 2.0,
        ..FlightPath::default()
    };
    let stack = render_scan(&scene, &path, CameraIntrinsics::new(61.0, 128, 64)).unwrap();
    let map = plane_sweep_depth(
        &stack,
        DepthRange {
            min: 18.0,
            max: 26.0,
            step: 0.5,
        },
    )
    .unwrap();
    let centre: Vec<(usize, usize)> = (24..40).flat_map(|y| (48..80).map(move |x| (x, y))).collect();
    let d = map.median_depth(&centre).unwrap();
    assert!((d - 26.0).abs() <= 0.5, "median depth {d}");
    assert!(plane_sweep_depth(&stack, DepthRange { min: 0.0, max: 26.0, step: 1.0 }).is_err());
}
