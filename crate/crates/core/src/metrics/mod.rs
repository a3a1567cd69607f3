//! Quantitative oracles on rendered stacks, integrals and stereo pairs.

mod contrast;
mod disparity;
mod planesweep;
mod rivalry;
mod suppression;
mod sweep;

pub use contrast::{contrast_metric, contrast_of, Contrast};
pub use disparity::{measured_disparity, target_top_region, BlockMatcher, DisparityMeasurement};
pub use planesweep::{plane_sweep_depth, target_depth_report, DepthMap, DepthRange, PlaneSweep, TargetDepthReport};
pub use rivalry::{rivalry_score, RadianceRefs};
pub use suppression::{occlusion_suppression_score, target_footprint};
pub use sweep::{evaluate_cell, parameter_sweep, SweepCell, SweepContext, SweepGrid, SweepMetric};

/// Pixels whose centres lie within `radius` of the continuous pixel position
/// `(cx, cy)` (pixel `i` has its centre at `i + 0.5`). Falls back to the
/// nearest pixel when the disc contains no centre.
pub fn disc_pixels(width: usize, height: usize, cx: f64, cy: f64, radius: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let x0 = (cx - radius - 1.0).floor().max(0.0) as usize;
    let y0 = (cy - radius - 1.0).floor().max(0.0) as usize;
    let x1 = ((cx + radius + 1.0).ceil().max(0.0) as usize).min(width);
    let y1 = ((cy + radius + 1.0).ceil().max(0.0) as usize).min(height);
    for y in y0..y1 {
        for x in x0..x1 {
            let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
            if dx * dx + dy * dy <= radius * radius {
                out.push((x, y));
            }
        }
    }
    if out.is_empty() && cx >= 0.0 && cy >= 0.0 && cx < width as f64 && cy < height as f64 {
        out.push((cx as usize, cy as usize));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::disc_pixels;

    #[test]
    fn disc_pixel_counts() {
        assert_eq!(disc_pixels(100, 100, 50.0, 50.0, 0.1).len(), 1);
        let n = disc_pixels(100, 100, 50.0, 50.0, 10.0).len() as f64;
        assert!((n - std::f64::consts::PI * 100.0).abs() < 12.0, "{n}");
        assert!(disc_pixels(100, 100, -50.0, 50.0, 3.0).is_empty());
    }
}
