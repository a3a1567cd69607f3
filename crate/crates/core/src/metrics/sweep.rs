use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integral::{stereo_pair, ScanStack, StereoPair};
use crate::raster::PixelRect;
use crate::scene::Scene;

use super::{measured_disparity, occlusion_suppression_score, rivalry_score, RadianceRefs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMetric {
    /// Block-matching confidence on the target region.
    Confidence,
    Rivalry,
    /// Occlusion suppression averaged over both eyes.
    Suppression,
    /// Labelled proxy: `suppression * confidence / (1 + rivalry)`.
    Composite,
}

impl SweepMetric {
    pub fn name(&self) -> &'static str {
        match self {
            SweepMetric::Confidence => "confidence",
            SweepMetric::Rivalry => "rivalry",
            SweepMetric::Suppression => "suppression",
            SweepMetric::Composite => "composite",
        }
    }
}

impl std::str::FromStr for SweepMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "confidence" => Ok(SweepMetric::Confidence),
            "rivalry" => Ok(SweepMetric::Rivalry),
            "suppression" => Ok(SweepMetric::Suppression),
            "composite" => Ok(SweepMetric::Composite),
            other => Err(Error::invalid(format!(
                "unknown metric '{other}' (expected confidence, rivalry, suppression or composite)"
            ))),
        }
    }
}

/// Everything a sweep cell needs besides `(e_f, a)`.
#[derive(Debug, Clone)]
pub struct SweepContext<'a> {
    pub viewpoint: f64,
    pub focal_distance: f64,
    /// Block-matching region for the confidence metric.
    pub region: PixelRect,
    pub scene: Option<&'a Scene>,
    pub target_index: usize,
    pub refs: RadianceRefs,
}

impl<'a> SweepContext<'a> {
    /// Context centred on one target of a simulated scene, with a 21 px
    /// matching window around its projection in the centre view.
    pub fn for_target(stack: &ScanStack, scene: &'a Scene, target_index: usize, viewpoint: f64, focal_distance: f64) -> Result<Self> {
        let t = scene.spec.targets.get(target_index).ok_or_else(|| {
            Error::invalid(format!("target index {target_index} out of range"))
        })?;
        let intr = stack.intrinsics();
        let (cx, cy) = intr.project(
            t.position[0] - viewpoint,
            t.position[1] - stack.path_y(),
            stack.altitude() - t.height,
        );
        Ok(Self {
            viewpoint,
            focal_distance,
            region: PixelRect::centered(cx - 0.5, cy - 0.5, 21),
            scene: Some(scene),
            target_index,
            refs: RadianceRefs::from_scene(scene),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum SweepCell {
    Value(f64),
    Infeasible,
}

impl SweepCell {
    pub fn value(&self) -> Option<f64> {
        match self {
            SweepCell::Value(v) => Some(*v),
            SweepCell::Infeasible => None,
        }
    }
}

/// Metric values over a rectangular `(a, e_f)` grid; `cells[i * baselines.len() + j]`
/// holds aperture `i` and baseline `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub metric: SweepMetric,
    pub baselines: Vec<f64>,
    pub apertures: Vec<f64>,
    pub cells: Vec<SweepCell>,
}

impl SweepGrid {
    pub fn get(&self, aperture_index: usize, baseline_index: usize) -> SweepCell {
        self.cells[aperture_index * self.baselines.len() + baseline_index]
    }

    /// `(a, e_f, value)` of the best feasible cell.
    pub fn argmax(&self) -> Option<(f64, f64, f64)> {
        let mut best: Option<(f64, f64, f64)> = None;
        for (i, &a) in self.apertures.iter().enumerate() {
            for (j, &e) in self.baselines.iter().enumerate() {
                if let SweepCell::Value(v) = self.get(i, j) {
                    if best.is_none_or(|b| v > b.2) {
                        best = Some((a, e, v));
                    }
                }
            }
        }
        best
    }
}

fn metric_on_pair(pair: &StereoPair, metric: SweepMetric, ctx: &SweepContext<'_>) -> Result<f64> {
    let suppression = || -> Result<f64> {
        let l = occlusion_suppression_score(&pair.left, ctx.scene, ctx.target_index)?;
        let r = occlusion_suppression_score(&pair.right, ctx.scene, ctx.target_index)?;
        Ok(0.5 * (l + r))
    };
    Ok(match metric {
        SweepMetric::Confidence => measured_disparity(pair, ctx.region)?.confidence,
        SweepMetric::Rivalry => rivalry_score(pair, &ctx.refs)?,
        SweepMetric::Suppression => suppression()?,
        SweepMetric::Composite => {
            let s = suppression()?;
            let c = measured_disparity(pair, ctx.region)?.confidence;
            let r = rivalry_score(pair, &ctx.refs)?;
            s * c / (1.0 + r)
        }
    })
}

/// Direct evaluation of one metric at `(e_f, a)`.
pub fn evaluate_cell(stack: &ScanStack, metric: SweepMetric, baseline: f64, aperture: f64, ctx: &SweepContext<'_>) -> Result<f64> {
    stack.check_stereo(ctx.viewpoint, aperture, baseline)?;
    let pair = stereo_pair(stack, ctx.viewpoint, baseline, aperture, ctx.focal_distance)?;
    metric_on_pair(&pair, metric, ctx)
}

/// Evaluates `metric` over every `(a, e_f)` cell. Cells violating
/// `e_f + a <= path length`, or whose eye windows hold no frame, are marked
/// infeasible.
pub fn parameter_sweep(
    stack: &ScanStack,
    metric: SweepMetric,
    baselines: &[f64],
    apertures: &[f64],
    ctx: &SweepContext<'_>,
) -> Result<SweepGrid> {
    if baselines.is_empty() || apertures.is_empty() {
        return Err(Error::invalid("sweep grids must be non-empty"));
    }
    let coords: Vec<(f64, f64)> = apertures
        .iter()
        .flat_map(|&a| baselines.iter().map(move |&e| (a, e)))
        .collect();
    let cells = coords
        .par_iter()
        .map(|&(a, e)| match evaluate_cell(stack, metric, e, a, ctx) {
            Ok(v) => Ok(SweepCell::Value(v)),
            Err(Error::Infeasible { .. } | Error::EmptyWindow { .. }) => Ok(SweepCell::Infeasible),
            Err(err) => Err(err),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepGrid {
        metric,
        baselines: baselines.to_vec(),
        apertures: apertures.to_vec(),
        cells,
    })
}
