use aos_core::io::*;
use aos_core::metrics::{DepthMap, DepthRange};
use aos_core::presets::Preset;
use aos_core::*;
use proptest::prelude::*;

fn small_stack() -> (Scene, ScanStack) {
    let scene = generate_scene(&Preset::DenseForest.spec(9)).unwrap();
    let path = FlightPath {
        x_start: -0.75,
        length: 1.5,
        spacing: 0.25,
        ..FlightPath::default()
    };
    let stack = render_scan(&scene, &path, CameraIntrinsics::new(61.0, 48, 32)).unwrap();
    (scene, stack)
}

#[test]
fn stack_survives_disk_within_quantisation() {
    let (scene, stack) = small_stack();
    let dir = tempfile::tempdir().unwrap();
    write_stack(dir.path(), &stack, Some(&scene)).unwrap();
    assert!(dir.path().join(POSES_FILE).exists());
    assert!(dir.path().join(frame_file_name(6)).exists());

    let (back, back_scene) = read_stack(dir.path()).unwrap();
    assert_eq!(back_scene.as_ref(), Some(&scene));
    assert_eq!(back.len(), stack.len());
    let half_count = 0.5 / RADIANCE_SCALE as f32 + 1e-6;
    for (a, b) in stack.frames().iter().zip(back.frames()) {
        assert_eq!(a.pose, b.pose);
        assert_eq!(a.intrinsics, b.intrinsics);
        for (x, y) in a.image.data().iter().zip(b.image.data()) {
            assert!((x - y).abs() <= half_count, "{x} vs {y}");
        }
    }

    let p = IntegralParams::new(0.0, 1.0, 26.0);
    let mem = integrate(&stack, p).unwrap();
    let disk = integrate(&back, p).unwrap();
    assert_eq!(mem.coverage, disk.coverage);
    for (x, y) in mem.image.data().iter().zip(disk.image.data()) {
        assert!((x - y).abs() <= half_count);
    }
}

#[test]
fn stack_without_scene_has_no_ground_truth() {
    let (_, stack) = small_stack();
    let dir = tempfile::tempdir().unwrap();
    write_stack(dir.path(), &stack, None).unwrap();
    let (_, scene) = read_stack(dir.path()).unwrap();
    assert!(scene.is_none());
}

#[test]
fn mismatched_frame_size_is_a_format_error() {
    let (_, stack) = small_stack();
    let dir = tempfile::tempdir().unwrap();
    write_stack(dir.path(), &stack, None).unwrap();
    let wrong = encode_png16(&Raster::filled(10, 10, 1.0), RADIANCE_SCALE).unwrap();
    write_bytes(&dir.path().join(frame_file_name(2)), &wrong).unwrap();
    let err = read_stack(dir.path()).unwrap_err().to_string();
    assert!(err.contains("frame_002.png"), "{err}");
}

#[test]
fn malformed_pose_line_names_its_line() {
    let text = "# header\n0 0 0 26 61 48 32\n1 0.5 zero 26 61 48 32\n";
    let err = parse_poses(std::path::Path::new("poses.txt"), text).unwrap_err().to_string();
    assert!(err.contains("poses.txt") && err.contains('3'), "{err}");
}

#[test]
fn sidecar_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("integral.txt");
    let entries = vec![
        ("u".to_string(), "0.5".to_string()),
        ("scene".to_string(), "dense seed 9".to_string()),
    ];
    write_sidecar(&path, "aos integral", &entries).unwrap();
    assert_eq!(read_sidecar(&path).unwrap(), entries);
}

#[test]
fn depth_map_png_and_sidecar() {
    let (w, h) = (5, 3);
    let depth: Vec<f32> = (0..w * h).map(|i| 20.0 + 0.5 * i as f32).collect();
    let map = DepthMap {
        width: w,
        height: h,
        depth: depth.clone(),
        score: vec![1.0; w * h],
        range: DepthRange {
            min: 20.0,
            max: 27.0,
            step: 0.5,
        },
        reference_x: 0.0,
        intrinsics: CameraIntrinsics::new(61.0, w, h),
        altitude: 26.0,
        path_y: 0.0,
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("depth.png");
    write_depth_map(&path, &map, &[("scene".to_string(), "open".to_string())]).unwrap();
    let back = decode_png16(&std::fs::read(&path).unwrap(), DEPTH_SCALE).unwrap();
    assert_eq!(back.data(), &depth[..]);
    let side = read_sidecar(&sidecar_path(&path)).unwrap();
    assert!(side.iter().any(|(k, v)| k == "depth_step" && v.parse::<f64>() == Ok(0.5)));
    assert!(side.iter().any(|(k, _)| k == "scene"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn png16_counts_are_exact(counts in prop::collection::vec(0u16..=u16::MAX, 12)) {
        let raster = Raster::from_vec(4, 3, counts.iter().map(|&c| c as f32 / 1000.0).collect());
        let back = decode_png16(&encode_png16(&raster, 1000.0).unwrap(), 1000.0).unwrap();
        prop_assert_eq!(back.data(), raster.data());
    }

    #[test]
    fn poses_round_trip(xs in prop::collection::btree_set(-4000i32..4000, 3..8)) {
        let intr = CameraIntrinsics::new(61.0, 4, 2);
        let frames = xs
            .iter()
            .map(|&k| Frame {
                image: Raster::filled(4, 2, 10.0),
                pose: Pose::new(k as f64 * 0.00125, 0.0, 26.0),
                intrinsics: intr,
            })
            .collect();
        let stack = ScanStack::new(frames).unwrap();
        let records = parse_poses(std::path::Path::new("p"), &format_poses(&stack)).unwrap();
        for (r, f) in records.iter().zip(stack.frames()) {
            prop_assert_eq!(r.pose, f.pose);
            prop_assert_eq!(r.intrinsics, f.intrinsics);
        }
    }
}
