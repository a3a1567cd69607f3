use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integral::ScanStack;
use crate::raster::sample_linear;
use crate::scene::{CameraIntrinsics, Scene};

use super::disc_pixels;

/// Depth hypotheses `min, min + step, ...` up to `max`, as distances below
/// the aperture plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthRange {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl DepthRange {
    pub fn hypotheses(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.min + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    /// Winning depth per pixel, metres below the aperture plane.
    pub depth: Vec<f32>,
    /// Photo-consistency of the winning hypothesis, `1 / (1 + cost)`; zero
    /// where fewer than two frames overlap.
    pub score: Vec<f32>,
    pub range: DepthRange,
    pub reference_x: f64,
    pub intrinsics: CameraIntrinsics,
    pub altitude: f64,
    pub path_y: f64,
}

impl DepthMap {
    pub fn depth_at(&self, x: usize, y: usize) -> f32 {
        self.depth[y * self.width + x]
    }

    pub fn score_at(&self, x: usize, y: usize) -> f32 {
        self.score[y * self.width + x]
    }

    /// Median depth over a set of pixels.
    pub fn median_depth(&self, pixels: &[(usize, usize)]) -> Option<f64> {
        median(pixels.iter().map(|&(x, y)| self.depth_at(x, y) as f64).collect())
    }

    pub fn median_score(&self, pixels: &[(usize, usize)]) -> Option<f64> {
        median(pixels.iter().map(|&(x, y)| self.score_at(x, y) as f64).collect())
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Winner-take-all plane sweep with variance photo-consistency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneSweep {
    /// Side of the square cost-aggregation window, pixels.
    pub window: usize,
}

impl Default for PlaneSweep {
    fn default() -> Self {
        Self { window: 21 }
    }
}

/// Plane sweep with the default 21 px aggregation window.
pub fn plane_sweep_depth(stack: &ScanStack, range: DepthRange) -> Result<DepthMap> {
    PlaneSweep::default().run(stack, range)
}

impl PlaneSweep {
    /// For each depth hypothesis, registers every frame into the reference
    /// (middle) view through the plane at that depth, takes the per-pixel
    /// variance across frames, averages it over the window and keeps the
    /// lowest-cost depth.
    pub fn run(&self, stack: &ScanStack, range: DepthRange) -> Result<DepthMap> {
        if stack.len() < 3 {
            return Err(Error::invalid(format!(
                "plane sweep needs at least 3 frames, got {}",
                stack.len()
            )));
        }
        let altitude = stack.altitude();
        if !(range.min > 0.0 && range.max <= altitude + 1e-9 && range.min <= range.max && range.step > 0.0) {
            return Err(Error::invalid(format!(
                "depth range [{}, {}] step {} must satisfy 0 < min <= max <= {altitude} and step > 0",
                range.min, range.max, range.step
            )));
        }
        if self.window == 0 {
            return Err(Error::invalid("aggregation window must be positive"));
        }
        let intr = stack.intrinsics();
        let (w, h) = (intr.width, intr.height);
        let f = intr.focal_px();
        let reference_x = stack.frames()[stack.len() / 2].pose.x;
        let xs = stack.xs();

        let mut best_cost = vec![f64::INFINITY; w * h];
        let mut best_depth = vec![range.max as f32; w * h];
        let mut var = vec![0.0f64; w * h];
        let mut valid = vec![false; w * h];

        for depth in range.hypotheses() {
            let shifts: Vec<f64> = xs.iter().map(|x| f * (reference_x - x) / depth).collect();
            var.par_chunks_mut(w)
                .zip(valid.par_chunks_mut(w))
                .enumerate()
                .for_each(|(y, (vrow, okrow))| {
                    let mut sum = vec![0.0f64; w];
                    let mut sq = vec![0.0f64; w];
                    let mut n = vec![0u32; w];
                    for (frame, &s) in stack.frames().iter().zip(&shifts) {
                        let src = frame.image.row(y);
                        for x in 0..w {
                            if let Some(v) = sample_linear(src, x as f64 + s) {
                                sum[x] += v;
                                sq[x] += v * v;
                                n[x] += 1;
                            }
                        }
                    }
                    for x in 0..w {
                        okrow[x] = n[x] >= 2;
                        vrow[x] = if okrow[x] {
                            let m = sum[x] / n[x] as f64;
                            (sq[x] / n[x] as f64 - m * m).max(0.0)
                        } else {
                            0.0
                        };
                    }
                });
            let cost = box_mean(&var, &valid, w, h, self.window);
            best_cost
                .par_iter_mut()
                .zip(best_depth.par_iter_mut())
                .zip(cost.par_iter())
                .for_each(|((bc, bd), c)| {
                    if let Some(c) = c {
                        if *c < *bc {
                            *bc = *c;
                            *bd = depth as f32;
                        }
                    }
                });
        }

        let score = best_cost
            .iter()
            .map(|&c| if c.is_finite() { (1.0 / (1.0 + c)) as f32 } else { 0.0 })
            .collect();
        Ok(DepthMap {
            width: w,
            height: h,
            depth: best_depth,
            score,
            range,
            reference_x,
            intrinsics: intr,
            altitude,
            path_y: stack.path_y(),
        })
    }
}

/// How well a depth map recovers one target of a simulated scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetDepthReport {
    pub target_index: usize,
    /// Distance of the target top below the aperture plane.
    pub true_depth: f64,
    /// Median recovered depth and score over the target's top disc.
    pub depth: f64,
    pub score: f64,
    /// Median score over a sparse grid of the whole image, a baseline for
    /// what a consistent match looks like in this scan.
    pub baseline_score: f64,
}

impl TargetDepthReport {
    /// Recovered height above ground.
    pub fn height(&self, altitude: f64) -> f64 {
        altitude - self.depth
    }

    pub fn depth_error(&self) -> f64 {
        self.depth - self.true_depth
    }

    /// Localised when the depth error is at most `tolerance`. The score is not
    /// part of this: the aggregation window straddles the target rim, so even
    /// a correct depth scores below clean ground.
    pub fn localised(&self, tolerance: f64) -> bool {
        self.depth_error().abs() <= tolerance
    }

    /// Whether the target match is at least as photo-consistent as the
    /// scan-wide baseline.
    pub fn above_baseline(&self) -> bool {
        self.score >= self.baseline_score
    }
}

/// Compares a depth map against a target's known top disc, shrunk by one
/// pixel so its rim does not mix with the ground.
pub fn target_depth_report(map: &DepthMap, scene: &Scene, target_index: usize) -> Result<TargetDepthReport> {
    let t = scene.spec.targets.get(target_index).ok_or_else(|| {
        Error::invalid(format!(
            "target index {target_index} out of range ({} targets)",
            scene.spec.targets.len()
        ))
    })?;
    let true_depth = map.altitude - t.height;
    let intr = map.intrinsics;
    let (cx, cy) = intr.project(t.position[0] - map.reference_x, t.position[1] - map.path_y, true_depth);
    let radius = (intr.focal_px() * t.radius / true_depth - 1.0).max(0.0);
    let footprint = disc_pixels(map.width, map.height, cx, cy, radius);
    let grid: Vec<(usize, usize)> = (0..map.height)
        .step_by(7)
        .flat_map(|y| (0..map.width).step_by(7).map(move |x| (x, y)))
        .collect();
    let not_visible = || Error::invalid(format!("target {target_index} is outside the depth map"));
    Ok(TargetDepthReport {
        target_index,
        true_depth,
        depth: map.median_depth(&footprint).ok_or_else(not_visible)?,
        score: map.median_score(&footprint).ok_or_else(not_visible)?,
        baseline_score: map.median_score(&grid).unwrap_or(0.0),
    })
}

/// Mean of `values` over valid pixels in a `size` x `size` window, via a
/// summed-area table. `None` where the pixel itself is invalid.
fn box_mean(values: &[f64], valid: &[bool], w: usize, h: usize, size: usize) -> Vec<Option<f64>> {
    let stride = w + 1;
    let mut sat = vec![0.0f64; stride * (h + 1)];
    let mut cnt = vec![0u32; stride * (h + 1)];
    for y in 0..h {
        let mut row_sum = 0.0;
        let mut row_cnt = 0u32;
        for x in 0..w {
            if valid[y * w + x] {
                row_sum += values[y * w + x];
                row_cnt += 1;
            }
            sat[(y + 1) * stride + x + 1] = sat[y * stride + x + 1] + row_sum;
            cnt[(y + 1) * stride + x + 1] = cnt[y * stride + x + 1] + row_cnt;
        }
    }
    let half = size / 2;
    (0..w * h)
        .into_par_iter()
        .map(|i| {
            if !valid[i] {
                return None;
            }
            let (x, y) = (i % w, i / w);
            let (x0, y0) = (x.saturating_sub(half), y.saturating_sub(half));
            let (x1, y1) = ((x + half + 1).min(w), (y + half + 1).min(h));
            let s = sat[y1 * stride + x1] - sat[y0 * stride + x1] - sat[y1 * stride + x0] + sat[y0 * stride + x0];
            let c = cnt[y1 * stride + x1] + cnt[y0 * stride + x0] - cnt[y0 * stride + x1] - cnt[y1 * stride + x0];
            Some(s / c as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hypotheses_include_both_ends() {
        let r = DepthRange { min: 24.0, max: 26.0, step: 0.25 };
        let h = r.hypotheses();
        assert_eq!(h.len(), 9);
        assert_eq!(*h.last().unwrap(), 26.0);
    }

    #[test]
    fn box_mean_matches_brute_force() {
        let (w, h) = (9, 7);
        let values: Vec<f64> = (0..w * h).map(|i| (i * 7 % 11) as f64).collect();
        let valid: Vec<bool> = (0..w * h).map(|i| i % 5 != 0).collect();
        let fast = box_mean(&values, &valid, w, h, 3);
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if !valid[i] {
                    assert_eq!(fast[i], None);
                    continue;
                }
                let (mut s, mut c) = (0.0, 0);
                for yy in y.saturating_sub(1)..(y + 2).min(h) {
                    for xx in x.saturating_sub(1)..(x + 2).min(w) {
                        if valid[yy * w + xx] {
                            s += values[yy * w + xx];
                            c += 1;
                        }
                    }
                }
                assert!((fast[i].unwrap() - s / c as f64).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(vec![]), None);
    }
}
