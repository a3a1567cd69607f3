use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integral::StereoPair;
use crate::perception::DisplayModel;
use crate::raster::{PixelRect, Raster};
use crate::scene::TargetSpec;

/// Horizontal disparity of one region, right eye minus left eye.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisparityMeasurement {
    /// Sub-pixel disparity; `None` when the region has no texture to match.
    pub disparity_px: Option<f64>,
    /// The same disparity seen on the display, arcmin.
    pub disparity_arcmin: Option<f64>,
    /// Peak normalised cross-correlation, clamped to `[0, 1]`.
    pub confidence: f64,
    pub region: PixelRect,
}

/// 1D horizontal block matcher using normalised cross-correlation and a
/// parabolic fit around the integer peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockMatcher {
    pub max_disparity: usize,
    pub display: DisplayModel,
}

impl Default for BlockMatcher {
    fn default() -> Self {
        Self {
            max_disparity: 16,
            display: DisplayModel::default(),
        }
    }
}

/// Measures the disparity of `region` in a stereo pair with the default
/// matcher.
pub fn measured_disparity(pair: &StereoPair, region: PixelRect) -> Result<DisparityMeasurement> {
    BlockMatcher::default().measure(&pair.left.image, &pair.right.image, region)
}

/// Matching window for the top of an upright cylindrical target.
///
/// Seen off-nadir, a cylinder shows part of its side, and the base of that
/// side sits near the ground with almost no disparity. When every frame of
/// both eyes lies on the same side of the target, the silhouette edge facing
/// away from the cameras belongs to the top disc alone, so the window is
/// centred there. Otherwise it falls back to the centre of the top disc.
pub fn target_top_region(pair: &StereoPair, target: &TargetSpec, size: usize) -> PixelRect {
    let height = target.height;
    let (lx, ly) = pair.left.project_point(target.position[0], target.position[1], height);
    let (rx, ry) = pair.right.project_point(target.position[0], target.position[1], height);
    let (mut cx, cy) = ((lx + rx) / 2.0, (ly + ry) / 2.0);
    let radius_px = pair.left.intrinsics.focal_px() * target.radius / (pair.left.altitude - height);
    let xs = pair.left.frame_xs.iter().chain(&pair.right.frame_xs);
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if lo > target.position[0] + target.radius {
        cx -= radius_px;
    } else if hi < target.position[0] - target.radius {
        cx += radius_px;
    }
    PixelRect::centered(cx - 0.5, cy - 0.5, size)
}

impl BlockMatcher {
    /// Matches `region` of `left` against `right`. The display angle assumes
    /// the image width spans the display's field of view, which is the same
    /// capture-to-display scaling the perception model uses.
    pub fn measure(&self, left: &Raster, right: &Raster, region: PixelRect) -> Result<DisparityMeasurement> {
        if !left.same_shape(right) {
            return Err(Error::DimensionMismatch(
                left.width(),
                left.height(),
                right.width(),
                right.height(),
            ));
        }
        if region.is_empty() || !region.fits(left.width(), left.height()) {
            return Err(Error::invalid(format!(
                "region {region:?} is empty or outside the {}x{} image",
                left.width(),
                left.height()
            )));
        }
        let textureless = DisparityMeasurement {
            disparity_px: None,
            disparity_arcmin: None,
            confidence: 0.0,
            region,
        };

        let template: Vec<f64> = region.pixels().map(|(x, y)| left.get(x, y) as f64).collect();
        let n = template.len() as f64;
        let mean = template.iter().sum::<f64>() / n;
        let centred: Vec<f64> = template.iter().map(|v| v - mean).collect();
        let energy: f64 = centred.iter().map(|v| v * v).sum();
        if energy <= 1e-12 * n * (mean * mean + 1.0) {
            return Ok(textureless);
        }

        let max = self.max_disparity as i64;
        let width = left.width() as i64;
        let mut scores: Vec<(i64, f64)> = Vec::new();
        for d in -max..=max {
            let x0 = region.x0 as i64 + d;
            if x0 < 0 || x0 + region.width as i64 > width {
                continue;
            }
            let shifted = PixelRect { x0: x0 as usize, ..region };
            let cand: Vec<f64> = shifted.pixels().map(|(x, y)| right.get(x, y) as f64).collect();
            let cmean = cand.iter().sum::<f64>() / n;
            let mut cross = 0.0;
            let mut cenergy = 0.0;
            for (t, c) in centred.iter().zip(&cand) {
                let c = c - cmean;
                cross += t * c;
                cenergy += c * c;
            }
            let ncc = if cenergy > 0.0 {
                cross / (energy * cenergy).sqrt()
            } else {
                0.0
            };
            scores.push((d, ncc));
        }
        let Some(best) = scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
            .map(|(i, _)| i)
        else {
            return Ok(textureless);
        };
        let (d, peak) = scores[best];
        if peak <= 0.0 {
            return Ok(textureless);
        }
        let mut sub = d as f64;
        if best > 0 && best + 1 < scores.len() {
            let (cm, cp) = (scores[best - 1].1, scores[best + 1].1);
            let denom = cm - 2.0 * peak + cp;
            if denom < 0.0 {
                sub += 0.5 * (cm - cp) / denom;
            }
        }
        let display_m = sub * 2.0 * self.display.image_distance
            * (self.display.fov_deg.to_radians() / 2.0).tan()
            / left.width() as f64;
        Ok(DisparityMeasurement {
            disparity_px: Some(sub),
            disparity_arcmin: Some(self.display.arcmin(display_m)),
            confidence: peak.clamp(0.0, 1.0),
            region,
        })
    }
}
