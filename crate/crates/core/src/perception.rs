//! Display-scaled stereoscopic perception model.
//!
//! Disparities on the synthetic aperture's focal plane are computed for a
//! camera baseline `e_f`, rescaled to the display by the ratio of the
//! half-field-of-view tangents times the viewing distances, and converted
//! back into a perceived distance on the display. The perceived target height
//! is the offset of that distance from the display image plane.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arcminutes per radian as used by the just-detectable depth interval.
pub const ARCMIN_PER_RADIAN: f64 = 3437.75;

fn rad_to_arcmin(r: f64) -> f64 {
    r.to_degrees() * 60.0
}

/// Perceived distance of a point with on-screen disparity `d`, for eyes `e`
/// apart viewing a screen at distance `v`: `z = e v / (e - d)`.
pub fn perceived_distance(e: f64, v: f64, d: f64) -> Result<f64> {
    if !(d < e) {
        return Err(Error::BeyondInfinity {
            disparity: d,
            eye_distance: e,
        });
    }
    Ok(e * v / (e - d))
}

/// Screen disparity of a point at distance `z`: `d = e (z - v) / z`.
pub fn disparity(e: f64, v: f64, z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::invalid(format!("distance must be positive, got {z}")));
    }
    Ok(e * (z - v) / z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaptureGeometry {
    /// Distance of the focal plane from the aperture plane, `v_f = h`.
    pub focal_distance: f64,
    /// Camera baseline `e_f` on the aperture plane.
    pub baseline: f64,
    /// Camera horizontal field of view, degrees.
    pub fov_deg: f64,
}

impl Default for CaptureGeometry {
    fn default() -> Self {
        Self {
            focal_distance: 26.0,
            baseline: 1.0,
            fov_deg: 61.0,
        }
    }
}

impl CaptureGeometry {
    pub fn with_baseline(self, baseline: f64) -> Self {
        Self { baseline, ..self }
    }

    fn validate(&self, target_height: f64) -> Result<()> {
        if !(self.focal_distance > 0.0) {
            return Err(Error::invalid("focal distance v_f must be positive"));
        }
        if !(self.baseline >= 0.0) {
            return Err(Error::invalid("camera baseline e_f must be >= 0"));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return Err(Error::invalid("camera field of view must be in (0, 180) degrees"));
        }
        if !(target_height >= 0.0 && target_height < self.focal_distance) {
            return Err(Error::invalid(format!(
                "target height must be in [0, {}), got {target_height}",
                self.focal_distance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplayModel {
    /// Inter-ocular distance `e_d`, metres.
    pub eye_distance: f64,
    /// Distance of the display image plane `v_d`, metres.
    pub image_distance: f64,
    /// Display field of view used for disparity scaling, degrees. Taken as
    /// the per-eye horizontal field of view.
    pub fov_deg: f64,
}

impl Default for DisplayModel {
    fn default() -> Self {
        Self {
            eye_distance: 0.065,
            image_distance: 2.4852,
            fov_deg: 68.0,
        }
    }
}

impl DisplayModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.eye_distance > 0.0) || !(self.image_distance > 0.0) {
            return Err(Error::invalid(
                "inter-ocular distance e_d and image distance v_d must be positive",
            ));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return Err(Error::invalid("display field of view must be in (0, 180) degrees"));
        }
        Ok(())
    }

    /// Horizontal per-eye field of view implied by a diagonal field of view on
    /// a panel of the given aspect ratio (width / height).
    pub fn horizontal_from_diagonal(diagonal_deg: f64, aspect: f64) -> f64 {
        let t = (diagonal_deg.to_radians() / 2.0).tan();
        let horizontal = t * aspect / (1.0 + aspect * aspect).sqrt();
        2.0 * horizontal.atan().to_degrees()
    }

    /// Angular size in arcmin of an on-display length `d`, `2 atan(d / 2 v_d)`.
    pub fn arcmin(&self, d: f64) -> f64 {
        rad_to_arcmin(2.0 * (d / (2.0 * self.image_distance)).atan())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObserverModel {
    /// Stereo acuity `d_gamma`, arcmin.
    pub acuity_arcmin: f64,
    pub gradient_limit: f64,
    /// Angular separation between the target and the ground reference, arcmin.
    pub separation_arcmin: f64,
}

impl Default for ObserverModel {
    fn default() -> Self {
        Self {
            acuity_arcmin: 6.0,
            gradient_limit: 1.0,
            separation_arcmin: 60.0,
        }
    }
}

impl ObserverModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.acuity_arcmin >= 0.0) {
            return Err(Error::invalid("stereo acuity must be >= 0 arcmin"));
        }
        if !(self.gradient_limit > 0.0) {
            return Err(Error::invalid("disparity gradient limit must be positive"));
        }
        if !(self.separation_arcmin > 0.0) {
            return Err(Error::invalid("object separation must be positive"));
        }
        Ok(())
    }
}

/// Where a display disparity places the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerceivedDepth {
    Finite {
        /// Perceived distance on the display `z_d`.
        distance: f64,
        /// Perceived target height `v_d - z_d`.
        height: f64,
    },
    /// Disparity at or beyond the inter-ocular distance: no finite depth.
    BeyondInfinity,
}

impl PerceivedDepth {
    pub fn height(&self) -> Option<f64> {
        match self {
            PerceivedDepth::Finite { height, .. } => Some(*height),
            PerceivedDepth::BeyondInfinity => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplayDisparity {
    /// Disparity on the focal plane for baseline `e_f`, metres.
    pub capture_m: f64,
    /// Disparity scaled to the display, metres.
    pub display_m: f64,
    /// Display disparity as an angle, arcmin (signed, crossed negative).
    pub display_arcmin: f64,
    pub depth: PerceivedDepth,
}

/// Capture-to-display scale factor `v_d tan(FOV_d/2) / (v_f tan(FOV_f/2))`.
pub fn display_scale(cap: &CaptureGeometry, disp: &DisplayModel) -> f64 {
    let td = (disp.fov_deg.to_radians() / 2.0).tan();
    let tf = (cap.fov_deg.to_radians() / 2.0).tan();
    disp.image_distance * td / (cap.focal_distance * tf)
}

/// Display disparity and perceived depth of a target `target_height` above
/// the focal plane.
pub fn perceived_target_height(
    cap: &CaptureGeometry,
    disp: &DisplayModel,
    target_height: f64,
) -> Result<DisplayDisparity> {
    cap.validate(target_height)?;
    disp.validate()?;
    let z_f = cap.focal_distance - target_height;
    let capture_m = disparity(cap.baseline, cap.focal_distance, z_f)?;
    let display_m = capture_m * display_scale(cap, disp);
    let depth = match perceived_distance(disp.eye_distance, disp.image_distance, display_m) {
        Ok(z_d) => PerceivedDepth::Finite {
            distance: z_d,
            height: disp.image_distance - z_d,
        },
        Err(Error::BeyondInfinity { .. }) => PerceivedDepth::BeyondInfinity,
        Err(e) => return Err(e),
    };
    Ok(DisplayDisparity {
        capture_m,
        display_m,
        display_arcmin: disp.arcmin(display_m),
        depth,
    })
}

/// Just-detectable depth interval `d_gamma v_d^2 / (c e_d + v_d)`.
pub fn jddi(observer: &ObserverModel, disp: &DisplayModel) -> Result<f64> {
    observer.validate()?;
    disp.validate()?;
    let v = disp.image_distance;
    Ok(observer.acuity_arcmin * v * v / (ARCMIN_PER_RADIAN * disp.eye_distance + v))
}

/// Disparity difference over angular separation, all in arcmin.
pub fn disparity_gradient(d1: f64, d2: f64, separation: f64) -> Result<f64> {
    if !(separation > 0.0) {
        return Err(Error::invalid(format!(
            "object separation must be positive, got {separation}"
        )));
    }
    Ok((d1 - d2).abs() / separation)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerceptionResult {
    pub target_height: f64,
    pub baseline: f64,
    pub disparity: DisplayDisparity,
    /// Perceived target height, `None` when beyond infinity.
    pub pth: Option<f64>,
    pub jddi: f64,
    /// Disparity gradient against the ground-level disparity.
    pub gradient: f64,
    pub depth_detectable: bool,
    pub fusible: bool,
    pub non_fusible_marker: bool,
}

impl PerceptionResult {
    /// Recomputes both flags from the numeric fields.
    pub fn flags_from(pth: Option<f64>, jddi: f64, gradient: f64, limit: f64) -> (bool, bool) {
        let detectable = pth.is_some_and(|p| p >= jddi);
        let fusible = pth.is_some() && gradient <= limit;
        (detectable, fusible)
    }
}

/// Full model evaluation for one target and baseline.
pub fn evaluate(
    cap: &CaptureGeometry,
    disp: &DisplayModel,
    observer: &ObserverModel,
    target_height: f64,
) -> Result<PerceptionResult> {
    let target = perceived_target_height(cap, disp, target_height)?;
    let ground = perceived_target_height(cap, disp, 0.0)?;
    let threshold = jddi(observer, disp)?;
    let gradient = disparity_gradient(
        target.display_arcmin,
        ground.display_arcmin,
        observer.separation_arcmin,
    )?;
    let pth = target.depth.height();
    let (depth_detectable, fusible) =
        PerceptionResult::flags_from(pth, threshold, gradient, observer.gradient_limit);
    Ok(PerceptionResult {
        target_height,
        baseline: cap.baseline,
        disparity: target,
        pth,
        jddi: threshold,
        gradient,
        depth_detectable,
        fusible,
        non_fusible_marker: pth.is_none(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityTable {
    /// Rows ordered by target, then baseline.
    pub rows: Vec<PerceptionResult>,
    pub gradient_limit: f64,
}

impl FeasibilityTable {
    pub fn for_target(&self, target_height: f64) -> impl Iterator<Item = &PerceptionResult> {
        self.rows
            .iter()
            .filter(move |r| r.target_height == target_height)
    }

    /// Smallest baseline at which the target is no longer fusible.
    pub fn first_non_fusible(&self, target_height: f64) -> Option<f64> {
        self.for_target(target_height)
            .find(|r| !r.fusible)
            .map(|r| r.baseline)
    }
}

/// Evaluates the model over every `(target, baseline)` combination.
/// Non-fusible entries are recorded, never fatal.
pub fn feasibility_region(
    template: &CaptureGeometry,
    disp: &DisplayModel,
    observer: &ObserverModel,
    targets: &[f64],
    baselines: &[f64],
) -> Result<FeasibilityTable> {
    if targets.is_empty() || baselines.is_empty() {
        return Err(Error::invalid("target and baseline grids must be non-empty"));
    }
    let mut rows = Vec::with_capacity(targets.len() * baselines.len());
    for &t in targets {
        for &e in baselines {
            rows.push(evaluate(&template.with_baseline(e), disp, observer, t)?);
        }
    }
    Ok(FeasibilityTable {
        rows,
        gradient_limit: observer.gradient_limit,
    })
}

/// Baseline at which the target's perceived height first reaches the JDDI,
/// found by bisection on `[0, max_baseline]`.
pub fn detectability_onset(
    template: &CaptureGeometry,
    disp: &DisplayModel,
    observer: &ObserverModel,
    target_height: f64,
    max_baseline: f64,
) -> Result<Option<f64>> {
    let threshold = jddi(observer, disp)?;
    let excess = |e: f64| -> Result<f64> {
        let r = perceived_target_height(&template.with_baseline(e), disp, target_height)?;
        Ok(r.depth.height().unwrap_or(f64::INFINITY) - threshold)
    };
    if excess(max_baseline)? < 0.0 {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0, max_baseline);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}
