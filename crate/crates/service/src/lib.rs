//! HTTP front end for loaded scan stacks: integral and stereo rendering on
//! demand, plus evaluation of the stereo perception model.
//!
//! Endpoints: `GET /healthz`, `GET /stacks`, `GET /stacks/{id}/meta`,
//! `GET /stacks/{id}/integral?u&a&h`, `GET /stacks/{id}/stereo?u&a&ef&h&mode`
//! and `GET /perception?ef&h_t&...`. Errors are JSON bodies of the form
//! `{"error": ..., "constraint": ...}`.

mod error;
mod perception;
mod state;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use aos_core::render::{integral_png, stereo_png, ViewParams};
use aos_core::DisplayMode;
use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde_json::json;

pub use error::{ApiError, ErrorBody};
pub use perception::{perception_response, PerceptionEntry, PerceptionQuery, PerceptionResponse};
pub use state::{AppState, LoadedStack, RenderCache};

pub type SharedState = Arc<AppState>;

/// Default number of encoded images kept in memory.
pub const DEFAULT_CACHE_ENTRIES: usize = 256;

pub fn router(state: SharedState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/stacks", get(list_stacks))
        .route("/stacks/{id}/meta", get(stack_meta))
        .route("/stacks/{id}/integral", get(integral))
        .route("/stacks/{id}/stereo", get(stereo))
        .route("/perception", get(perception))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .with_state(state)
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub host: String,
    pub port: u16,
    pub data_dir: PathBuf,
    pub cache_entries: usize,
}

/// Loads the data directory and serves until interrupted.
pub async fn serve(config: ServeConfig) -> std::io::Result<()> {
    let (state, warnings) = AppState::load(&config.data_dir, config.cache_entries)?;
    for w in &warnings {
        eprintln!("warning: skipped stack {w}");
    }
    let addr: SocketAddr = format!("{}:{}", config.host, config.port)
        .parse()
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, format!("bad listen address: {e}")))?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!(
        "serving {} stack(s) from {} on http://{}",
        state.stacks.len(),
        config.data_dir.display(),
        listener.local_addr()?
    );
    axum::serve(listener, router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Query pairs with per-endpoint whitelisting and typed lookups.
struct Params(Vec<(String, String)>);

impl Params {
    fn parse(q: Result<Query<Vec<(String, String)>>, QueryRejection>, allowed: &[&str]) -> Result<Self, ApiError> {
        let Query(pairs) = q.map_err(|e| ApiError::unprocessable(format!("malformed query string: {e}")))?;
        for (i, (k, _)) in pairs.iter().enumerate() {
            if !allowed.contains(&k.as_str()) {
                return Err(ApiError::unprocessable(format!(
                    "unknown parameter '{k}' (accepted: {})",
                    allowed.join(", ")
                )));
            }
            if pairs[..i].iter().any(|(p, _)| p == k) {
                return Err(ApiError::unprocessable(format!("parameter '{k}' given more than once")));
            }
        }
        Ok(Self(pairs))
    }

    fn raw(&self, name: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }

    fn f64_or(&self, name: &str, default: f64) -> Result<f64, ApiError> {
        match self.raw(name) {
            None => Ok(default),
            Some(v) => parse_number(name, v),
        }
    }

    fn list_or(&self, name: &str, default: &[f64]) -> Result<Vec<f64>, ApiError> {
        match self.raw(name) {
            None => Ok(default.to_vec()),
            Some(v) => v.split(',').map(|s| parse_number(name, s.trim())).collect(),
        }
    }
}

fn parse_number(name: &str, v: &str) -> Result<f64, ApiError> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(ApiError::unprocessable(format!("parameter '{name}' must be a finite number, got '{v}'"))),
    }
}

fn find_stack(state: &AppState, id: &str) -> Result<Arc<LoadedStack>, ApiError> {
    state
        .stacks
        .get(id)
        .cloned()
        .ok_or_else(|| ApiError::not_found(format!("unknown stack '{id}'")))
}

async fn healthz(State(state): State<SharedState>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "stacks": state.stacks.len() }))
}

async fn list_stacks(State(state): State<SharedState>) -> Json<serde_json::Value> {
    let stacks: Vec<_> = state
        .stacks
        .values()
        .map(|s| json!({ "id": s.id, "frames": s.stack.len(), "ground_truth": s.scene.is_some() }))
        .collect();
    Json(json!({ "stacks": stacks }))
}

async fn stack_meta(State(state): State<SharedState>, Path(id): Path<String>) -> Result<Json<serde_json::Value>, ApiError> {
    let s = find_stack(&state, &id)?;
    let xs = state::sidecar_xs(&s.dir)?;
    let stack = &s.stack;
    let intr = stack.intrinsics();
    let (lo, hi) = stack.x_range();
    let length = stack.path_length();
    Ok(Json(json!({
        "id": s.id,
        "frames": stack.len(),
        "poses": xs,
        "path": {
            "x_min": lo,
            "x_max": hi,
            "length": length,
            "spacing": stack.spacing(),
            "y": stack.path_y(),
        },
        "h": stack.altitude(),
        "intrinsics": {
            "fov_deg": intr.fov_deg,
            "width": intr.width,
            "height": intr.height,
            "focal_px": intr.focal_px(),
        },
        "ground_truth": s.scene.is_some(),
        "limits": {
            "a_max": length,
            "constraint": format!("e_f + a <= {length} (e_f = {length} m - a is the maximum)"),
        },
        "defaults": {
            "u": 0.5 * (lo + hi),
            "integral_a": length,
            "stereo_a": 2.0f64.min(length),
            "ef": 1.0f64.min((length - 2.0f64.min(length)).max(0.0)),
            "h": stack.altitude(),
        },
    })))
}

fn png_response(bytes: Bytes, etag: &str, hit: bool) -> Response {
    let mut resp = (StatusCode::OK, bytes).into_response();
    let h = resp.headers_mut();
    h.insert(header::CONTENT_TYPE, HeaderValue::from_static("image/png"));
    h.insert(header::CACHE_CONTROL, HeaderValue::from_static("no-cache"));
    h.insert(header::ETAG, HeaderValue::from_str(etag).expect("etag is ascii"));
    h.insert("x-aos-cache", HeaderValue::from_static(if hit { "hit" } else { "miss" }));
    resp
}

fn not_modified(headers: &HeaderMap, etag: &str) -> Option<Response> {
    let inm = headers.get(header::IF_NONE_MATCH)?.to_str().ok()?;
    let matches = inm.split(',').map(str::trim).any(|t| t == etag || t == "*");
    matches.then(|| {
        let mut resp = StatusCode::NOT_MODIFIED.into_response();
        resp.headers_mut()
            .insert(header::ETAG, HeaderValue::from_str(etag).expect("etag is ascii"));
        resp
    })
}

/// Serves a cached image or renders it on the blocking pool.
async fn cached_png<F>(state: &SharedState, headers: &HeaderMap, key: String, render: F) -> Result<Response, ApiError>
where
    F: FnOnce() -> aos_core::Result<Vec<u8>> + Send + 'static,
{
    let etag = format!("\"{key}\"");
    if let Some(resp) = not_modified(headers, &etag) {
        return Ok(resp);
    }
    if let Some(bytes) = state.cache.get(&key) {
        return Ok(png_response(bytes, &etag, true));
    }
    let bytes = tokio::task::spawn_blocking(render)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("render task failed: {e}"), None))??;
    let bytes = Bytes::from(bytes);
    state.cache.insert(key, bytes.clone());
    Ok(png_response(bytes, &etag, false))
}

async fn integral(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    q: Result<Query<Vec<(String, String)>>, QueryRejection>,
) -> Result<Response, ApiError> {
    let s = find_stack(&state, &id)?;
    let p = Params::parse(q, &["u", "a", "h"])?;
    let (lo, hi) = s.stack.x_range();
    let view = ViewParams::new(
        p.f64_or("u", 0.5 * (lo + hi))?,
        p.f64_or("a", s.stack.path_length())?,
        0.0,
        p.f64_or("h", s.stack.altitude())?,
    )?;
    s.stack.check_integral(view.u(), view.a())?;
    let key = format!("integral:{id}:{}", view.key());
    cached_png(&state, &headers, key, move || integral_png(&s.stack, view)).await
}

async fn stereo(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    q: Result<Query<Vec<(String, String)>>, QueryRejection>,
) -> Result<Response, ApiError> {
    let s = find_stack(&state, &id)?;
    let p = Params::parse(q, &["u", "a", "ef", "h", "mode"])?;
    let (lo, hi) = s.stack.x_range();
    let mode: DisplayMode = p.raw("mode").unwrap_or("side-by-side").parse()?;
    let view = ViewParams::new(
        p.f64_or("u", 0.5 * (lo + hi))?,
        p.f64_or("a", 2.0)?,
        p.f64_or("ef", 1.0)?,
        p.f64_or("h", s.stack.altitude())?,
    )?;
    s.stack.check_stereo(view.u(), view.a(), view.ef())?;
    let key = format!("stereo:{id}:{}:{mode}", view.key());
    cached_png(&state, &headers, key, move || stereo_png(&s.stack, view, mode)).await
}

async fn perception(q: Result<Query<Vec<(String, String)>>, QueryRejection>) -> Result<Json<PerceptionResponse>, ApiError> {
    let p = Params::parse(q, PerceptionQuery::KEYS)?;
    let d = PerceptionQuery::default();
    let query = PerceptionQuery {
        ef: p.f64_or("ef", d.ef)?,
        vf: p.f64_or("vf", d.vf)?,
        fov_f: p.f64_or("fov_f", d.fov_f)?,
        ed: p.f64_or("ed", d.ed)?,
        vd: p.f64_or("vd", d.vd)?,
        fov_d: p.f64_or("fov_d", d.fov_d)?,
        acuity: p.f64_or("acuity", d.acuity)?,
        gradient_limit: p.f64_or("gradient_limit", d.gradient_limit)?,
        separation: p.f64_or("separation", d.separation)?,
        h_t: p.list_or("h_t", &d.h_t)?,
    };
    Ok(Json(perception_response(&query)?))
}
