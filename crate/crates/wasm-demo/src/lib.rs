//! Browser demo of the synthetic-aperture toolkit.
//!
//! A [`Demo`] simulates one small scan when it is created and keeps it, so
//! every slider move only re-integrates. Images come back as RGBA bytes ready
//! for `ImageData`. The same operations are available to native Rust through
//! [`DemoCore`], which is what the tests exercise.

use aos_core::perception::evaluate;
use aos_core::presets::Preset;
use aos_core::render::ViewParams;
use aos_core::{
    compose_display, generate_scene, integrate, jddi, render_scan, stereo_pair, CameraIntrinsics, CaptureGeometry,
    DisplayImage, DisplayMode, DisplayModel, FlightPath, IntegralParams, ObserverModel, ScanStack,
};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Error text for the page; infeasible requests also name the allowed range.
fn message(e: aos_core::Error) -> String {
    match e {
        aos_core::Error::Infeasible { message, constraint } => format!("{message}; feasible ranges: {constraint}"),
        e => e.to_string(),
    }
}

pub const DEMO_WIDTH: usize = 160;
pub const DEMO_HEIGHT: usize = 128;

/// Native core of the demo. Errors are plain messages.
pub struct DemoCore {
    stack: ScanStack,
    preset: Preset,
    seed: u64,
}

impl DemoCore {
    pub fn new(preset: &str, seed: u64) -> Result<Self, String> {
        let preset: Preset = preset.parse().map_err(message)?;
        let scene = generate_scene(&preset.spec(seed)).map_err(message)?;
        let intr = CameraIntrinsics::new(61.0, DEMO_WIDTH, DEMO_HEIGHT);
        let stack = render_scan(&scene, &FlightPath::default(), intr).map_err(message)?;
        Ok(Self { stack, preset, seed })
    }

    pub fn stack(&self) -> &ScanStack {
        &self.stack
    }

    pub fn describe(&self) -> String {
        json!({
            "preset": self.preset.name(),
            "seed": self.seed,
            "width": DEMO_WIDTH,
            "height": DEMO_HEIGHT,
            "poses": self.stack.xs(),
            "path_length": self.stack.path_length(),
            "h": self.stack.altitude(),
        })
        .to_string()
    }

    /// Integral image at `(u, a, h)` as grey RGBA, stretched over the covered
    /// pixels. Uncovered pixels are transparent.
    pub fn integral_rgba(&self, u: f64, a: f64, h: f64) -> Result<Vec<u8>, String> {
        let view = ViewParams::new(u, a, 0.0, h).map_err(message)?;
        self.stack.check_integral(view.u(), view.a()).map_err(message)?;
        let ii = integrate(&self.stack, IntegralParams::new(view.u(), view.a(), view.h())).map_err(message)?;
        let covered = || ii.image.data().iter().zip(&ii.coverage).filter(|(_, &c)| c > 0).map(|(v, _)| *v);
        let lo = covered().fold(f32::INFINITY, f32::min);
        let hi = covered().fold(f32::NEG_INFINITY, f32::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let mut out = Vec::with_capacity(ii.image.data().len() * 4);
        for (v, &c) in ii.image.data().iter().zip(&ii.coverage) {
            let g = (((v - lo) / span) * 255.0).round().clamp(0.0, 255.0) as u8;
            out.extend_from_slice(&[g, g, g, if c > 0 { 255 } else { 0 }]);
        }
        Ok(out)
    }

    /// Red-cyan anaglyph of the stereo pair at `(u, a, e_f, h)` as RGBA.
    pub fn anaglyph_rgba(&self, u: f64, a: f64, ef: f64, h: f64) -> Result<Vec<u8>, String> {
        let view = ViewParams::new(u, a, ef, h).map_err(message)?;
        self.stack.check_stereo(view.u(), view.a(), view.ef()).map_err(message)?;
        let pair = stereo_pair(&self.stack, view.u(), view.ef(), view.a(), view.h()).map_err(message)?;
        let DisplayImage::Anaglyph { rgb, .. } = compose_display(&pair, DisplayMode::Anaglyph).map_err(message)?
        else {
            unreachable!("anaglyph mode yields an anaglyph");
        };
        Ok(rgb.chunks(3).flat_map(|p| [p[0], p[1], p[2], 255]).collect())
    }
}

/// Perception model outputs for each target height, as JSON.
pub fn perception_json(ef: f64, acuity: f64, targets: &[f64]) -> Result<String, String> {
    let cap = CaptureGeometry::default().with_baseline(ef);
    let disp = DisplayModel::default();
    let obs = ObserverModel {
        acuity_arcmin: acuity,
        ..ObserverModel::default()
    };
    obs.validate().map_err(message)?;
    let threshold = jddi(&obs, &disp).map_err(message)?;
    let mut rows = Vec::with_capacity(targets.len());
    for &t in targets {
        let r = evaluate(&cap, &disp, &obs, t).map_err(message)?;
        rows.push(json!({
            "target_h": t,
            "d_display_arcmin": r.disparity.display_arcmin,
            "pth": r.pth,
            "gradient": r.gradient,
            "detectable": r.depth_detectable,
            "fusible": r.fusible,
        }));
    }
    Ok(json!({ "e_f": ef, "acuity": acuity, "jddi": threshold, "results": rows }).to_string())
}

#[wasm_bindgen]
pub struct Demo {
    core: DemoCore,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(preset: &str, seed: u32) -> Result<Demo, JsError> {
        Ok(Demo {
            core: DemoCore::new(preset, seed as u64).map_err(|e| JsError::new(&e))?,
        })
    }

    pub fn width(&self) -> usize {
        DEMO_WIDTH
    }

    pub fn height(&self) -> usize {
        DEMO_HEIGHT
    }

    pub fn describe(&self) -> String {
        self.core.describe()
    }

    pub fn integral(&self, u: f64, a: f64, h: f64) -> Result<Vec<u8>, JsError> {
        self.core.integral_rgba(u, a, h).map_err(|e| JsError::new(&e))
    }

    pub fn anaglyph(&self, u: f64, a: f64, ef: f64, h: f64) -> Result<Vec<u8>, JsError> {
        self.core.anaglyph_rgba(u, a, ef, h).map_err(|e| JsError::new(&e))
    }
}

#[wasm_bindgen]
pub fn perception(ef: f64, acuity: f64, targets: Vec<f64>) -> Result<String, JsError> {
    perception_json(ef, acuity, &targets).map_err(|e| JsError::new(&e))
}
