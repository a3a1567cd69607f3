//! Focal-plane registration and integration of scan frames.
//!
//! All poses share altitude and `y`, and the camera looks straight down, so
//! the homography induced by a horizontal focal plane at distance `h` reduces
//! to a horizontal shift of `f_px * dx / h` pixels. Integral images live in
//! the pixel grid of a virtual pinhole camera with the capture intrinsics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{sample_linear, Raster};
use crate::scene::{CameraIntrinsics, Frame, Pose};

/// Tolerance on window edges so poses computed as `x0 + i * spacing` land
/// inside closed windows.
const EDGE_EPS: f64 = 1e-9;

/// Linear gain/offset applied to a frame before integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Radiometry {
    pub gain: f64,
    pub offset: f64,
}

impl Default for Radiometry {
    fn default() -> Self {
        Self {
            gain: 1.0,
            offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanStack {
    frames: Vec<Frame>,
    radiometry: Option<Vec<Radiometry>>,
}

impl ScanStack {
    /// Builds a stack, ordering frames by their x position.
    pub fn new(mut frames: Vec<Frame>) -> Result<Self> {
        let Some(first) = frames.first() else {
            return Err(Error::invalid("a scan stack needs at least one frame"));
        };
        let (intr, z, y) = (first.intrinsics, first.pose.z, first.pose.y);
        intr.validate()?;
        for f in &frames {
            if f.intrinsics != intr {
                return Err(Error::invalid("all frames must share intrinsics"));
            }
            if f.pose.z != z || f.pose.y != y {
                return Err(Error::invalid(
                    "all frames must share altitude and y (linear constant-altitude path)",
                ));
            }
            if f.image.width() != intr.width || f.image.height() != intr.height {
                return Err(Error::DimensionMismatch(
                    f.image.width(),
                    f.image.height(),
                    intr.width,
                    intr.height,
                ));
            }
            if f.image.data().iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::invalid("frame radiance must be finite and >= 0"));
            }
        }
        if !(z > 0.0) {
            return Err(Error::invalid("altitude must be positive"));
        }
        frames.sort_by(|a, b| a.pose.x.total_cmp(&b.pose.x));
        if frames.windows(2).any(|w| w[0].pose.x >= w[1].pose.x) {
            return Err(Error::invalid("frame x positions must be distinct"));
        }
        Ok(Self {
            frames,
            radiometry: None,
        })
    }

    /// Attaches per-frame radiometric corrections (in x order).
    pub fn with_radiometry(mut self, corrections: Vec<Radiometry>) -> Result<Self> {
        if corrections.len() != self.frames.len() {
            return Err(Error::invalid(format!(
                "{} radiometric corrections for {} frames",
                corrections.len(),
                self.frames.len()
            )));
        }
        self.radiometry = Some(corrections);
        Ok(self)
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn intrinsics(&self) -> CameraIntrinsics {
        self.frames[0].intrinsics
    }

    pub fn altitude(&self) -> f64 {
        self.frames[0].pose.z
    }

    pub fn path_y(&self) -> f64 {
        self.frames[0].pose.y
    }

    pub fn xs(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.pose.x).collect()
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.frames[0].pose.x, self.frames[self.frames.len() - 1].pose.x)
    }

    pub fn path_length(&self) -> f64 {
        let (lo, hi) = self.x_range();
        hi - lo
    }

    /// Mean pose spacing, 0 for a single frame.
    pub fn spacing(&self) -> f64 {
        if self.frames.len() < 2 {
            0.0
        } else {
            self.path_length() / (self.frames.len() - 1) as f64
        }
    }

    /// Indices of frames whose x lies in the closed window `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> Vec<usize> {
        self.frames
            .iter()
            .enumerate()
            .filter(|(_, f)| f.pose.x >= lo - EDGE_EPS && f.pose.x <= hi + EDGE_EPS)
            .map(|(i, _)| i)
            .collect()
    }

    fn corrected(&self, index: usize, v: f64) -> f64 {
        match &self.radiometry {
            Some(r) => v * r[index].gain + r[index].offset,
            None => v,
        }
    }

    /// Checks that a stereo configuration respects `e_f + a <= path length`
    /// and keeps both eye viewpoints on the path.
    pub fn check_stereo(&self, u: f64, aperture: f64, baseline: f64) -> Result<()> {
        let length = self.path_length();
        let (lo, hi) = self.x_range();
        let constraint = format!(
            "e_f = {length} m - a is the maximum; a in [0, {length}], e_f in [0, {:.3}], u in [{lo} + e_f/2, {hi} - e_f/2]",
            (length - aperture).max(0.0)
        );
        if !(aperture >= 0.0 && aperture <= length + EDGE_EPS) {
            return Err(Error::Infeasible {
                message: format!("aperture a = {aperture} m outside [0, {length}] m"),
                constraint,
            });
        }
        if !(baseline >= 0.0) || baseline + aperture > length + EDGE_EPS {
            return Err(Error::Infeasible {
                message: format!(
                    "baseline e_f = {baseline} m with aperture a = {aperture} m exceeds the {length} m path (e_f + a <= {length})"
                ),
                constraint,
            });
        }
        if u - baseline / 2.0 < lo - EDGE_EPS || u + baseline / 2.0 > hi + EDGE_EPS {
            return Err(Error::Infeasible {
                message: format!(
                    "eye viewpoints {:.3} and {:.3} m leave the path [{lo}, {hi}] m",
                    u - baseline / 2.0,
                    u + baseline / 2.0
                ),
                constraint,
            });
        }
        Ok(())
    }

    /// Checks a monoscopic integral request: `u` on the path, `a` within it.
    pub fn check_integral(&self, u: f64, aperture: f64) -> Result<()> {
        let length = self.path_length();
        let (lo, hi) = self.x_range();
        let constraint = format!("u in [{lo}, {hi}] m, a in [0, {length}] m");
        if u < lo - EDGE_EPS || u > hi + EDGE_EPS {
            return Err(Error::Infeasible {
                message: format!("viewpoint u = {u} m outside the path [{lo}, {hi}] m"),
                constraint,
            });
        }
        if !(aperture >= 0.0 && aperture <= length + EDGE_EPS) {
            return Err(Error::Infeasible {
                message: format!("aperture a = {aperture} m outside [0, {length}] m"),
                constraint,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralParams {
    /// x of the virtual camera on the aperture line.
    pub viewpoint: f64,
    pub aperture: f64,
    /// Distance from the aperture plane to the focal plane.
    pub focal_distance: f64,
}

impl IntegralParams {
    pub fn new(viewpoint: f64, aperture: f64, focal_distance: f64) -> Self {
        Self {
            viewpoint,
            aperture,
            focal_distance,
        }
    }

    pub fn window(&self) -> (f64, f64) {
        (
            self.viewpoint - self.aperture / 2.0,
            self.viewpoint + self.aperture / 2.0,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralImage {
    pub image: Raster,
    /// Number of frames contributing to each pixel.
    pub coverage: Vec<u16>,
    pub params: IntegralParams,
    /// x of the virtual camera whose pixel grid the image is expressed in.
    /// Equals `params.viewpoint` except for the eyes of a stereo pair.
    pub reference_x: f64,
    pub frame_indices: Vec<usize>,
    pub frame_xs: Vec<f64>,
    pub intrinsics: CameraIntrinsics,
    pub altitude: f64,
    pub path_y: f64,
}

impl IntegralImage {
    pub fn frame_count(&self) -> usize {
        self.frame_indices.len()
    }

    #[inline]
    pub fn covered(&self, x: usize, y: usize) -> bool {
        self.coverage[y * self.image.width() + x] > 0
    }

    /// Pixel position at which a world point `(x, y, height)` appears in this
    /// integral: the mean of its registered positions over the used frames.
    pub fn project_point(&self, x: f64, y: f64, height: f64) -> (f64, f64) {
        let f = self.intrinsics.focal_px();
        let depth = self.altitude - height;
        let n = self.frame_xs.len() as f64;
        let mean_x = self.frame_xs.iter().sum::<f64>() / n;
        let (col, row) = self.intrinsics.project(x - mean_x, y - self.path_y, depth);
        (
            col + f * (mean_x - self.reference_x) / self.params.focal_distance,
            row,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StereoPair {
    pub left: IntegralImage,
    pub right: IntegralImage,
    pub baseline: f64,
    pub viewpoint: f64,
}

/// Registered image of one frame in a virtual camera's pixel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Registered {
    pub image: Raster,
    pub covered: Vec<bool>,
}

/// Horizontal pixel shift mapping virtual column `c` to source column `c + s`.
#[inline]
fn plane_shift(f: f64, virtual_x: f64, frame_x: f64, h: f64) -> f64 {
    f * (virtual_x - frame_x) / h
}

/// Warps `frame` into the pixel grid of a nadir camera at `virtual_pose` via
/// the focal plane at distance `h`.
pub fn project_to_viewpoint(frame: &Frame, virtual_pose: Pose, h: f64) -> Result<Registered> {
    if !(h > 0.0) {
        return Err(Error::invalid(format!("focal distance must be positive, got {h}")));
    }
    if virtual_pose.z != frame.pose.z || virtual_pose.y != frame.pose.y {
        return Err(Error::invalid(
            "virtual pose must share altitude and y with the frame",
        ));
    }
    let (w, rows) = (frame.image.width(), frame.image.height());
    let s = plane_shift(frame.intrinsics.focal_px(), virtual_pose.x, frame.pose.x, h);
    let mut image = Raster::new(w, rows);
    let mut covered = vec![false; w * rows];
    for y in 0..rows {
        let src = frame.image.row(y);
        for x in 0..w {
            if let Some(v) = sample_linear(src, x as f64 + s) {
                image.set(x, y, v as f32);
                covered[y * w + x] = true;
            }
        }
    }
    Ok(Registered { image, covered })
}

/// Averages the frames whose pose lies in `[u - a/2, u + a/2]`, registered on
/// the focal plane at distance `h` in the pixel grid of the camera at `u`.
pub fn integrate(stack: &ScanStack, params: IntegralParams) -> Result<IntegralImage> {
    integrate_into(stack, params, params.viewpoint)
}

/// As [`integrate`], but expressed in the pixel grid of the virtual camera at
/// `reference_x`.
pub fn integrate_into(stack: &ScanStack, params: IntegralParams, reference_x: f64) -> Result<IntegralImage> {
    let h = params.focal_distance;
    if !(h > 0.0) {
        return Err(Error::invalid(format!("focal distance must be positive, got {h}")));
    }
    if !(params.aperture >= 0.0) || !params.viewpoint.is_finite() {
        return Err(Error::invalid(format!(
            "aperture must be >= 0 and viewpoint finite, got a = {}, u = {}",
            params.aperture, params.viewpoint
        )));
    }
    let (lo, hi) = params.window();
    let indices = stack.window(lo, hi);
    if indices.is_empty() {
        let (path_min, path_max) = stack.x_range();
        return Err(Error::EmptyWindow {
            lo,
            hi,
            path_min,
            path_max,
        });
    }

    let intr = stack.intrinsics();
    let (w, rows) = (intr.width, intr.height);
    let f = intr.focal_px();
    let shifts: Vec<(usize, f64)> = indices
        .iter()
        .map(|&i| (i, plane_shift(f, reference_x, stack.frames[i].pose.x, h)))
        .collect();

    let mut image = Raster::new(w, rows);
    let mut coverage = vec![0u16; w * rows];
    image
        .data_mut()
        .par_chunks_mut(w)
        .zip(coverage.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, (out, cov))| {
            let mut sum = vec![0.0f64; w];
            for &(i, s) in &shifts {
                let src = stack.frames[i].image.row(y);
                for x in 0..w {
                    if let Some(v) = sample_linear(src, x as f64 + s) {
                        sum[x] += stack.corrected(i, v);
                        cov[x] += 1;
                    }
                }
            }
            for x in 0..w {
                if cov[x] > 0 {
                    out[x] = (sum[x] / cov[x] as f64) as f32;
                }
            }
        });

    Ok(IntegralImage {
        image,
        coverage,
        params,
        reference_x,
        frame_xs: indices.iter().map(|&i| stack.frames[i].pose.x).collect(),
        frame_indices: indices,
        intrinsics: intr,
        altitude: stack.altitude(),
        path_y: stack.path_y(),
    })
}

/// Left and right integrals at `u -/+ e_f/2`, both expressed in the pixel grid
/// of the centre viewpoint `u`, so features on the focal plane carry zero
/// disparity. Eye windows are independent and may share frames.
pub fn stereo_pair(stack: &ScanStack, u: f64, baseline: f64, aperture: f64, h: f64) -> Result<StereoPair> {
    if !(baseline >= 0.0) {
        return Err(Error::invalid(format!("baseline must be >= 0, got {baseline}")));
    }
    let left = integrate_into(stack, IntegralParams::new(u - baseline / 2.0, aperture, h), u)?;
    let right = integrate_into(stack, IntegralParams::new(u + baseline / 2.0, aperture, h), u)?;
    Ok(StereoPair {
        left,
        right,
        baseline,
        viewpoint: u,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisplayMode {
    SideBySide,
    Anaglyph,
}

impl std::str::FromStr for DisplayMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "side-by-side" | "sbs" => Ok(DisplayMode::SideBySide),
            "anaglyph" => Ok(DisplayMode::Anaglyph),
            other => Err(Error::invalid(format!(
                "unknown display mode '{other}' (expected side-by-side or anaglyph)"
            ))),
        }
    }
}

impl std::fmt::Display for DisplayMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DisplayMode::SideBySide => "side-by-side",
            DisplayMode::Anaglyph => "anaglyph",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DisplayImage {
    /// Left eye in the left half, right eye in the right half, radiance kept.
    SideBySide(Raster),
    /// Red carries the left eye, green and blue the right eye, each mapped
    /// linearly from `[lo, hi]` to `[0, 255]`.
    Anaglyph {
        width: usize,
        height: usize,
        rgb: Vec<u8>,
        lo: f32,
        hi: f32,
    },
}

impl DisplayImage {
    pub fn width(&self) -> usize {
        match self {
            DisplayImage::SideBySide(r) => r.width(),
            DisplayImage::Anaglyph { width, .. } => *width,
        }
    }

    /// Recovers the (left, right) eye radiances of an anaglyph, up to 8-bit
    /// quantisation.
    pub fn split_anaglyph(&self) -> Option<(Raster, Raster)> {
        let DisplayImage::Anaglyph {
            width,
            height,
            rgb,
            lo,
            hi,
        } = self
        else {
            return None;
        };
        let scale = (hi - lo) / 255.0;
        let decode = |c: u8| lo + c as f32 * scale;
        let left = rgb.chunks(3).map(|p| decode(p[0])).collect();
        let right = rgb.chunks(3).map(|p| decode(p[1])).collect();
        Some((
            Raster::from_vec(*width, *height, left),
            Raster::from_vec(*width, *height, right),
        ))
    }
}

/// Composes a stereo pair for display.
pub fn compose_display(pair: &StereoPair, mode: DisplayMode) -> Result<DisplayImage> {
    let (l, r) = (&pair.left.image, &pair.right.image);
    if !l.same_shape(r) {
        return Err(Error::DimensionMismatch(l.width(), l.height(), r.width(), r.height()));
    }
    let (w, h) = (l.width(), l.height());
    match mode {
        DisplayMode::SideBySide => {
            let mut out = Raster::new(2 * w, h);
            for y in 0..h {
                out.data_mut()[y * 2 * w..y * 2 * w + w].copy_from_slice(l.row(y));
                out.data_mut()[y * 2 * w + w..(y + 1) * 2 * w].copy_from_slice(r.row(y));
            }
            Ok(DisplayImage::SideBySide(out))
        }
        DisplayMode::Anaglyph => {
            let mut lo = f32::INFINITY;
            let mut hi = f32::NEG_INFINITY;
            for (img, eye) in [(l, &pair.left), (r, &pair.right)] {
                for (v, c) in img.data().iter().zip(&eye.coverage) {
                    if *c > 0 {
                        lo = lo.min(*v);
                        hi = hi.max(*v);
                    }
                }
            }
            if !(hi > lo) {
                lo = lo.min(0.0);
                hi = lo + 1.0;
            }
            let quant = |v: f32| (((v - lo) / (hi - lo)) * 255.0).round().clamp(0.0, 255.0) as u8;
            let mut rgb = Vec::with_capacity(w * h * 3);
            for (a, b) in l.data().iter().zip(r.data()) {
                let (qa, qb) = (quant(*a), quant(*b));
                rgb.extend_from_slice(&[qa, qb, qb]);
            }
            Ok(DisplayImage::Anaglyph {
                width: w,
                height: h,
                rgb,
                lo,
                hi,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_frame(x: f64, w: usize, h: usize) -> Frame {
        let data = (0..w * h).map(|i| ((i % w) as f32 * 0.5) + (i / w) as f32).collect();
        Frame {
            image: Raster::from_vec(w, h, data),
            pose: Pose::new(x, 0.0, 26.0),
            intrinsics: CameraIntrinsics::new(61.0, w, h),
        }
    }

    #[test]
    fn identity_warp_is_exact() {
        let f = ramp_frame(1.0, 32, 8);
        let reg = project_to_viewpoint(&f, f.pose, 26.0).unwrap();
        assert_eq!(reg.image, f.image);
        assert!(reg.covered.iter().all(|&c| c));
    }

    #[test]
    fn nonpositive_focal_distance_rejected() {
        let f = ramp_frame(0.0, 8, 8);
        assert!(project_to_viewpoint(&f, f.pose, 0.0).is_err());
        assert!(project_to_viewpoint(&f, f.pose, -1.0).is_err());
    }

    #[test]
    fn shift_marks_uncovered_border() {
        let f = ramp_frame(0.0, 64, 4);
        let virt = Pose::new(0.5, 0.0, 26.0);
        let reg = project_to_viewpoint(&f, virt, 26.0).unwrap();
        let s = f.intrinsics.focal_px() * 0.5 / 26.0;
        // Column x samples source x + s; the last ceil(s) columns fall off.
        let uncovered = reg.covered[..64].iter().filter(|c| !**c).count();
        assert_eq!(uncovered, s.ceil() as usize);
        let expect = (10.0 + s) * 0.5;
        assert!((reg.image.get(10, 0) as f64 - expect).abs() < 1e-4);
    }

    #[test]
    fn empty_window_names_range() {
        let stack = ScanStack::new(vec![ramp_frame(0.0, 8, 4), ramp_frame(0.5, 8, 4)]).unwrap();
        let err = integrate(&stack, IntegralParams::new(3.0, 1.0, 26.0)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[2.500, 3.500]") && msg.contains("[0.000, 0.500]"), "{msg}");
    }

    #[test]
    fn stack_rejects_duplicate_positions() {
        assert!(ScanStack::new(vec![ramp_frame(0.0, 8, 4), ramp_frame(0.0, 8, 4)]).is_err());
        assert!(ScanStack::new(vec![]).is_err());
    }

    #[test]
    fn window_edges_are_inclusive() {
        let frames = (0..5).map(|i| ramp_frame(i as f64 * 0.5, 8, 4)).collect();
        let stack = ScanStack::new(frames).unwrap();
        assert_eq!(stack.window(0.5, 1.5), vec![1, 2, 3]);
        let ii = integrate(&stack, IntegralParams::new(1.0, 1.0, 26.0)).unwrap();
        assert_eq!(ii.frame_count(), 3);
    }

    #[test]
    fn radiometry_hook_applies_gain_and_offset() {
        let stack = ScanStack::new(vec![ramp_frame(0.0, 8, 4)])
            .unwrap()
            .with_radiometry(vec![Radiometry { gain: 2.0, offset: 1.0 }])
            .unwrap();
        let ii = integrate(&stack, IntegralParams::new(0.0, 0.0, 26.0)).unwrap();
        assert_eq!(ii.image.get(3, 1), (3.0 * 0.5 + 1.0) * 2.0 + 1.0);
    }

    #[test]
    fn stereo_feasibility() {
        let frames = (0..29).map(|i| ramp_frame(i as f64 * 0.5 - 7.0, 8, 4)).collect();
        let stack = ScanStack::new(frames).unwrap();
        assert!(stack.check_stereo(0.0, 2.0, 12.0).is_ok());
        let err = stack.check_stereo(0.0, 2.0, 14.0).unwrap_err();
        assert!(matches!(err, Error::Infeasible { ref constraint, .. } if constraint.contains("e_f = 14 m - a is the maximum")));
        assert!(stack.check_stereo(6.0, 1.0, 4.0).is_err());
        assert!(stack.check_integral(7.5, 1.0).is_err());
    }

    #[test]
    fn side_by_side_and_anaglyph() {
        let frames = (0..3).map(|i| ramp_frame(i as f64 * 0.5, 16, 4)).collect();
        let stack = ScanStack::new(frames).unwrap();
        let pair = stereo_pair(&stack, 0.5, 0.0, 0.0, 26.0).unwrap();
        let DisplayImage::SideBySide(sbs) = compose_display(&pair, DisplayMode::SideBySide).unwrap() else {
            panic!()
        };
        assert_eq!(sbs.width(), 32);
        assert_eq!(sbs.get(17, 2), pair.right.image.get(1, 2));
        let ana = compose_display(&pair, DisplayMode::Anaglyph).unwrap();
        let DisplayImage::Anaglyph { rgb, .. } = &ana else { panic!() };
        assert!(rgb.chunks(3).all(|p| p[0] == p[1] && p[1] == p[2]));
    }

    #[test]
    fn mismatched_pair_rejected() {
        let a = ScanStack::new(vec![ramp_frame(0.0, 8, 4)]).unwrap();
        let b = ScanStack::new(vec![ramp_frame(0.0, 10, 4)]).unwrap();
        let mut pair = stereo_pair(&a, 0.0, 0.0, 0.0, 26.0).unwrap();
        pair.right = integrate(&b, IntegralParams::new(0.0, 0.0, 26.0)).unwrap();
        assert!(matches!(
            compose_display(&pair, DisplayMode::Anaglyph),
            Err(Error::DimensionMismatch(..))
        ));
    }
}
