use aos_core::perception::evaluate;
use aos_core::{jddi, CaptureGeometry, DisplayModel, ObserverModel, PerceptionResult};
use serde::{Deserialize, Serialize};

/// Inputs of `/perception`; every field has the library default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionQuery {
    pub ef: f64,
    pub vf: f64,
    pub fov_f: f64,
    pub ed: f64,
    pub vd: f64,
    pub fov_d: f64,
    pub acuity: f64,
    pub gradient_limit: f64,
    pub separation: f64,
    pub h_t: Vec<f64>,
}

impl PerceptionQuery {
    pub const KEYS: &'static [&'static str] = &[
        "ef",
        "vf",
        "fov_f",
        "ed",
        "vd",
        "fov_d",
        "acuity",
        "gradient_limit",
        "separation",
        "h_t",
    ];

    pub fn capture(&self) -> CaptureGeometry {
        CaptureGeometry {
            focal_distance: self.vf,
            baseline: self.ef,
            fov_deg: self.fov_f,
        }
    }

    pub fn display(&self) -> DisplayModel {
        DisplayModel {
            eye_distance: self.ed,
            image_distance: self.vd,
            fov_deg: self.fov_d,
        }
    }

    pub fn observer(&self) -> ObserverModel {
        ObserverModel {
            acuity_arcmin: self.acuity,
            gradient_limit: self.gradient_limit,
            separation_arcmin: self.separation,
        }
    }
}

impl Default for PerceptionQuery {
    fn default() -> Self {
        let cap = CaptureGeometry::default();
        let disp = DisplayModel::default();
        let obs = ObserverModel::default();
        Self {
            ef: cap.baseline,
            vf: cap.focal_distance,
            fov_f: cap.fov_deg,
            ed: disp.eye_distance,
            vd: disp.image_distance,
            fov_d: disp.fov_deg,
            acuity: obs.acuity_arcmin,
            gradient_limit: obs.gradient_limit,
            separation: obs.separation_arcmin,
            h_t: vec![0.3, 1.8, 21.0],
        }
    }
}

/// One target's model outputs. `pth` is `null` and `non_fusible` true when
/// the display disparity places the target at or beyond infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionEntry {
    pub target_h: f64,
    pub e_f: f64,
    pub d_capture_m: f64,
    pub d_display_m: f64,
    pub d_display_arcmin: f64,
    pub pth: Option<f64>,
    pub jddi: f64,
    pub gradient: f64,
    pub detectable: bool,
    pub fusible: bool,
    pub non_fusible: bool,
}

impl From<&PerceptionResult> for PerceptionEntry {
    fn from(r: &PerceptionResult) -> Self {
        Self {
            target_h: r.target_height,
            e_f: r.baseline,
            d_capture_m: r.disparity.capture_m,
            d_display_m: r.disparity.display_m,
            d_display_arcmin: r.disparity.display_arcmin,
            pth: r.pth,
            jddi: r.jddi,
            gradient: r.gradient,
            detectable: r.depth_detectable,
            fusible: r.fusible,
            non_fusible: r.non_fusible_marker,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionResponse {
    pub query: PerceptionQuery,
    pub jddi: f64,
    pub results: Vec<PerceptionEntry>,
}

pub fn perception_response(q: &PerceptionQuery) -> aos_core::Result<PerceptionResponse> {
    let (cap, disp, obs) = (q.capture(), q.display(), q.observer());
    obs.validate()?;
    let threshold = jddi(&obs, &disp)?;
    let results = q
        .h_t
        .iter()
        .map(|&t| evaluate(&cap, &disp, &obs, t).map(|r| PerceptionEntry::from(&r)))
        .collect::<aos_core::Result<Vec<_>>>()?;
    Ok(PerceptionResponse {
        query: q.clone(),
        jddi: threshold,
        results,
    })
}
