use std::path::Path;
use std::sync::Arc;

use aos_core::io::{decode_png16, encode_png16, write_stack, RADIANCE_SCALE};
use aos_core::presets::Preset;
use aos_core::render::{integral_png, stereo_png, ViewParams};
use aos_core::*;
use aos_service::{router, AppState, PerceptionResponse};
use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use tower::ServiceExt;

fn write_preset(root: &Path, id: &str) -> (ScanStack, Scene) {
    let dir = root.join(id);
    std::fs::create_dir(&dir).unwrap();
    let scene = generate_scene(&Preset::Open.spec(0)).unwrap();
    let stack = render_scan(&scene, &FlightPath::default(), CameraIntrinsics::new(61.0, 64, 48)).unwrap();
    write_stack(&dir, &stack, Some(&scene)).unwrap();
    (stack, scene)
}

fn app(root: &Path) -> (Router, Arc<AppState>) {
    let (state, warnings) = AppState::load(root, 16).unwrap();
    assert!(warnings.is_empty(), "{warnings:?}");
    let state = Arc::new(state);
    (router(state.clone()), state)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, axum::http::HeaderMap, Vec<u8>) {
    get_with(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn get_with(app: &Router, req: Request<Body>) -> (StatusCode, axum::http::HeaderMap, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, headers, body)
}

fn json(body: &[u8]) -> serde_json::Value {
    serde_json::from_slice(body).unwrap()
}

#[tokio::test]
async fn empty_data_dir_lists_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app(dir.path());
    let (s, _, body) = get(&app, "/stacks").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(json(&body)["stacks"], serde_json::json!([]));
    let (s, _, body) = get(&app, "/healthz").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(json(&body)["status"], "ok");
}

#[tokio::test]
async fn metadata_matches_the_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let (stack, _) = write_preset(dir.path(), "preset-1");
    let (app, _) = app(dir.path());

    let (s, _, body) = get(&app, "/stacks").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(json(&body)["stacks"][0]["id"], "preset-1");

    let (s, _, body) = get(&app, "/stacks/preset-1/meta").await;
    assert_eq!(s, StatusCode::OK);
    let meta = json(&body);
    assert_eq!(meta["frames"], 29);
    let poses: Vec<f64> = serde_json::from_value(meta["poses"].clone()).unwrap();
    assert_eq!(poses, stack.xs());
    assert_eq!(meta["h"], 26.0);
    assert_eq!(meta["path"]["length"], 14.0);
    assert_eq!(meta["intrinsics"]["width"], 64);
    assert_eq!(meta["ground_truth"], true);
}

#[tokio::test]
async fn unknown_ids_and_routes_are_json_404() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app(dir.path());
    for uri in ["/stacks/nope/meta", "/stacks/nope/integral", "/nothing"] {
        let (s, headers, body) = get(&app, uri).await;
        assert_eq!(s, StatusCode::NOT_FOUND, "{uri}");
        assert_eq!(headers[header::CONTENT_TYPE], "application/json");
        let v = json(&body);
        assert!(v["error"].as_str().is_some());
        assert!(v.get("constraint").is_some());
    }
}

#[tokio::test]
async fn integral_identity_cache_and_validators() {
    let dir = tempfile::tempdir().unwrap();
    write_preset(dir.path(), "p");
    let (app, state) = app(dir.path());
    let stack = &state.stacks["p"].stack;

    // a = 0 at a sampled pose returns the stored frame.
    let (s, headers, body) = get(&app, "/stacks/p/integral?u=-6.5&a=0&h=26").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(headers[header::CONTENT_TYPE], "image/png");
    assert_eq!(headers["x-aos-cache"], "miss");
    let frame = &stack.frames()[1];
    assert_eq!(frame.pose.x, -6.5);
    assert_eq!(body, encode_png16(&frame.image, RADIANCE_SCALE).unwrap());

    // Repeats hit the cache and agree; sub-millimetre variants share the entry.
    let (_, h2, again) = get(&app, "/stacks/p/integral?u=-6.5001&a=0.0&h=26.0").await;
    assert_eq!(h2["x-aos-cache"], "hit");
    assert_eq!(again, body);
    assert_eq!(h2[header::ETAG], headers[header::ETAG]);

    let req = Request::get("/stacks/p/integral?u=-6.5&a=0&h=26")
        .header(header::IF_NONE_MATCH, headers[header::ETAG].clone())
        .body(Body::empty())
        .unwrap();
    let (s, _, body) = get_with(&app, req).await;
    assert_eq!(s, StatusCode::NOT_MODIFIED);
    assert!(body.is_empty());

    // Same bytes as the library path the command line uses.
    let (_, _, wide) = get(&app, "/stacks/p/integral?u=0.25&a=3.7&h=24").await;
    let direct = integral_png(stack, ViewParams::new(0.25, 3.7, 0.0, 24.0).unwrap()).unwrap();
    assert_eq!(wide, direct);
}

#[tokio::test]
async fn parameter_violations_are_422() {
    let dir = tempfile::tempdir().unwrap();
    write_preset(dir.path(), "p");
    let (app, _) = app(dir.path());
    for uri in [
        "/stacks/p/integral?u=9",
        "/stacks/p/integral?a=-1",
        "/stacks/p/integral?u=abc",
        "/stacks/p/integral?u=1&u=2",
        "/stacks/p/integral?zoom=2",
        "/stacks/p/stereo?mode=hologram",
        "/stacks/p/stereo?ef=14&a=2",
        "/perception?acuity=-1",
    ] {
        let (s, _, body) = get(&app, uri).await;
        assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY, "{uri}");
        assert!(json(&body)["error"].as_str().is_some(), "{uri}");
    }
    let (_, _, body) = get(&app, "/stacks/p/stereo?ef=14&a=2").await;
    let constraint = json(&body)["constraint"].as_str().unwrap().to_string();
    assert!(constraint.contains("e_f = 14 m - a is the maximum"), "{constraint}");
}

#[tokio::test]
async fn stereo_modes() {
    let dir = tempfile::tempdir().unwrap();
    write_preset(dir.path(), "p");
    let (app, state) = app(dir.path());
    let stack = &state.stacks["p"].stack;

    let (s, _, body) = get(&app, "/stacks/p/stereo?ef=0&a=2&u=0").await;
    assert_eq!(s, StatusCode::OK);
    let img = decode_png16(&body, RADIANCE_SCALE).unwrap();
    let w = img.width() / 2;
    for y in 0..img.height() {
        assert_eq!(&img.row(y)[..w], &img.row(y)[w..]);
    }

    let (s, _, body) = get(&app, "/stacks/p/stereo?ef=1.5&a=2&u=0.5&h=25&mode=anaglyph").await;
    assert_eq!(s, StatusCode::OK);
    let view = ViewParams::new(0.5, 2.0, 1.5, 25.0).unwrap();
    assert_eq!(body, stereo_png(stack, view, DisplayMode::Anaglyph).unwrap());
}

#[tokio::test]
async fn perception_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app(dir.path());
    let (s, _, body) = get(&app, "/perception").await;
    assert_eq!(s, StatusCode::OK);
    let resp: PerceptionResponse = serde_json::from_slice(&body).unwrap();
    assert_eq!(resp.results.len(), 3);
    let (cap, disp, obs) = (CaptureGeometry::default(), DisplayModel::default(), ObserverModel::default());
    assert!((resp.jddi - jddi(&obs, &disp).unwrap()).abs() <= 1e-9);
    for e in &resp.results {
        let lib = aos_core::perception::evaluate(&cap, &disp, &obs, e.target_h).unwrap();
        assert!((e.d_display_arcmin - lib.disparity.display_arcmin).abs() <= 1e-9);
        assert!((e.pth.unwrap() - lib.pth.unwrap()).abs() <= 1e-9);
        assert!((e.gradient - lib.gradient).abs() <= 1e-9);
        assert_eq!((e.detectable, e.fusible, e.non_fusible), (lib.depth_detectable, lib.fusible, false));
    }
    let (_, _, body) = get(&app, "/perception?ef=4&h_t=21").await;
    let v = json(&body);
    assert_eq!(v["results"][0]["fusible"], false);
    assert!(v["results"][0].get("non_fusible").is_some());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn concurrent_requests_agree() {
    let dir = tempfile::tempdir().unwrap();
    write_preset(dir.path(), "p");
    let (app, _) = app(dir.path());
    let uris = [
        "/stacks/p/integral?u=0&a=4",
        "/stacks/p/integral?u=0&a=4",
        "/stacks/p/integral?u=1&a=2",
        "/stacks/p/stereo?u=0&a=2&ef=1",
        "/stacks/p/integral?u=0&a=4",
    ];
    let tasks: Vec<_> = uris
        .iter()
        .map(|u| {
            let app = app.clone();
            let u = u.to_string();
            tokio::spawn(async move { get(&app, &u).await.2 })
        })
        .collect();
    let mut out = Vec::new();
    for t in tasks {
        out.push(t.await.unwrap());
    }
    assert_eq!(out[0], out[1]);
    assert_eq!(out[0], out[4]);
    assert_ne!(out[0], out[2]);
    let (_, _, serial) = get(&app, "/stacks/p/integral?u=1&a=2").await;
    assert_eq!(serial, out[2]);
}
