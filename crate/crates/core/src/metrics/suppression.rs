use crate::error::{Error, Result};
use crate::integral::IntegralImage;
use crate::scene::Scene;

use super::disc_pixels;

/// In-focus core of a target's top disc in an integral image.
///
/// The disc is projected at the mean of its registered positions; it is then
/// shrunk by the defocus half-width the target's height produces across the
/// used frames, plus one pixel for resampling, so only pixels that cannot mix
/// with the surrounding ground remain.
pub fn target_footprint(integral: &IntegralImage, scene: &Scene, target_index: usize) -> Result<Vec<(usize, usize)>> {
    let t = scene.spec.targets.get(target_index).ok_or_else(|| {
        Error::invalid(format!(
            "target index {target_index} out of range ({} targets)",
            scene.spec.targets.len()
        ))
    })?;
    let f = integral.intrinsics.focal_px();
    let depth = integral.altitude - t.height;
    let (cx, cy) = integral.project_point(t.position[0], t.position[1], t.height);
    let lo = integral.frame_xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = integral.frame_xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let blur = f * (hi - lo) / 2.0 * (1.0 / depth - 1.0 / integral.params.focal_distance).abs();
    let radius = (f * t.radius / depth - blur - 1.0).max(0.0);
    let (w, h) = (integral.image.width(), integral.image.height());
    Ok(disc_pixels(w, h, cx, cy, radius)
        .into_iter()
        .filter(|&(x, y)| integral.covered(x, y))
        .collect())
}

/// Fraction of the target footprint whose integral value is closer to the
/// target radiance than to the occluder radiance. Needs simulated ground truth.
pub fn occlusion_suppression_score(
    integral: &IntegralImage,
    ground_truth: Option<&Scene>,
    target_index: usize,
) -> Result<f64> {
    let scene = ground_truth.ok_or_else(|| {
        Error::Unsupported("occlusion suppression needs scene ground truth (simulated stacks only)".into())
    })?;
    let pixels = target_footprint(integral, scene, target_index)?;
    if pixels.is_empty() {
        return Err(Error::invalid(format!(
            "target {target_index} is not visible in the integral image"
        )));
    }
    let target = scene.spec.targets[target_index].temp;
    let occluder = scene.spec.occluders.temp;
    let hits = pixels
        .iter()
        .filter(|&&(x, y)| {
            let v = integral.image.get(x, y) as f64;
            (v - target).abs() < (v - occluder).abs()
        })
        .count();
    Ok(hits as f64 / pixels.len() as f64)
}
