use aos_core::{integrate, IntegralParams};
use aos_wasm_demo::{perception_json, DemoCore, DEMO_HEIGHT, DEMO_WIDTH};

#[test]
fn integral_and_anaglyph_have_rgba_shape() {
    let demo = DemoCore::new("forest", 2).unwrap();
    let px = DEMO_WIDTH * DEMO_HEIGHT * 4;
    let img = demo.integral_rgba(0.0, 4.0, 26.0).unwrap();
    assert_eq!(img.len(), px);
    assert!(img.chunks(4).all(|p| p[0] == p[1] && p[1] == p[2]));
    assert!(img.chunks(4).any(|p| p[0] == 0) && img.chunks(4).any(|p| p[0] == 255));
    let ana = demo.anaglyph_rgba(0.0, 2.0, 1.0, 26.0).unwrap();
    assert_eq!(ana.len(), px);
    assert!(ana.chunks(4).all(|p| p[1] == p[2] && p[3] == 255));
}

#[test]
fn zero_aperture_is_the_stretched_frame() {
    let demo = DemoCore::new("open", 0).unwrap();
    let frame = &demo.stack().frames()[14];
    let img = demo.integral_rgba(frame.pose.x, 0.0, 26.0).unwrap();
    let ii = integrate(demo.stack(), IntegralParams::new(frame.pose.x, 0.0, 26.0)).unwrap();
    assert_eq!(ii.image.data(), frame.image.data());
    let (lo, hi) = frame.image.min_max();
    let brightest = frame.image.data().iter().position(|&v| v == hi).unwrap();
    let darkest = frame.image.data().iter().position(|&v| v == lo).unwrap();
    assert_eq!((img[brightest * 4], img[darkest * 4]), (255, 0));
}

#[test]
fn invalid_requests_are_messages() {
    let demo = DemoCore::new("open", 0).unwrap();
    let err = demo.anaglyph_rgba(0.0, 2.0, 14.0, 26.0).unwrap_err();
    assert!(err.contains("e_f = 14 m - a is the maximum"), "{err}");
    assert!(demo.integral_rgba(99.0, 1.0, 26.0).is_err());
    assert!(DemoCore::new("preset-9", 0).is_err());
    assert!(perception_json(1.0, -1.0, &[1.8]).is_err());
}

#[test]
fn perception_json_carries_the_model() {
    let v: serde_json::Value = serde_json::from_str(&perception_json(1.0, 6.0, &[0.3, 1.8, 21.0]).unwrap()).unwrap();
    assert!((v["jddi"].as_f64().unwrap() - 0.164015).abs() < 1e-5);
    assert_eq!(v["results"].as_array().unwrap().len(), 3);
    assert_eq!(v["results"][1]["detectable"], true);
}

#[test]
fn describe_lists_the_scan() {
    let v: serde_json::Value = serde_json::from_str(&DemoCore::new("dense", 1).unwrap().describe()).unwrap();
    assert_eq!(v["poses"].as_array().unwrap().len(), 29);
    assert_eq!(v["preset"], "preset-3");
}
