//! Procedural occluded scenes and a nadir pinhole ray caster.
//!
//! A scene is a flat textured ground plane carrying upright cylindrical
//! targets, covered by a single canopy layer of opaque horizontal discs. Every
//! surface has a constant radiance except the ground, which carries a seeded
//! value-noise texture. Everything is a pure function of the [`SceneSpec`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integral::ScanStack;
use crate::raster::Raster;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    /// World size in metres along x and y, centred on the origin.
    pub extent: [f64; 2],
    pub ground_temp: f64,
    pub ground_noise_amp: f64,
    /// Lattice spacing of the coarsest ground-noise octave, metres.
    #[serde(default = "default_noise_scale")]
    pub ground_noise_scale: f64,
    #[serde(default)]
    pub targets: Vec<TargetSpec>,
    #[serde(default)]
    pub occluders: OccluderLayerSpec,
    pub seed: u64,
}

fn default_noise_scale() -> f64 {
    0.6
}

/// Upright cylinder standing on the ground.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub position: [f64; 2],
    pub height: f64,
    pub radius: f64,
    pub temp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccluderLayerSpec {
    /// Mean number of canopy discs (crowns or foliage clumps) per square metre.
    pub density: f64,
    pub crown_height: f64,
    #[serde(default)]
    pub crown_height_jitter: f64,
    pub crown_radius: f64,
    #[serde(default)]
    pub crown_radius_jitter: f64,
    pub temp: f64,
    /// Relative amplitude of the spatial density modulation, in `[0, 1]`.
    #[serde(default)]
    pub density_variation: f64,
    /// Length scale of the density modulation, metres.
    #[serde(default = "default_variation_scale")]
    pub variation_scale: f64,
}

fn default_variation_scale() -> f64 {
    8.0
}

impl Default for OccluderLayerSpec {
    fn default() -> Self {
        Self {
            density: 0.0,
            crown_height: 21.0,
            crown_height_jitter: 0.0,
            crown_radius: 1.5,
            crown_radius_jitter: 0.0,
            temp: 16.0,
            density_variation: 0.0,
            variation_scale: default_variation_scale(),
        }
    }
}

/// Opaque horizontal disc of the canopy layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Occluder {
    pub center: [f64; 2],
    pub height: f64,
    pub radius: f64,
}

/// Camera position; the view direction is always nadir.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    /// Full horizontal field of view in degrees.
    pub fov_deg: f64,
    pub width: usize,
    pub height: usize,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self {
            fov_deg: 61.0,
            width: 640,
            height: 512,
        }
    }
}

impl CameraIntrinsics {
    pub fn new(fov_deg: f64, width: usize, height: usize) -> Self {
        Self {
            fov_deg,
            width,
            height,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return Err(Error::invalid(format!(
                "field of view must be in (0, 180) degrees, got {}",
                self.fov_deg
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid(format!(
                "resolution must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        Ok(())
    }

    /// Focal length in pixels, `(width / 2) / tan(fov / 2)`.
    pub fn focal_px(&self) -> f64 {
        (self.width as f64 / 2.0) / (self.fov_deg.to_radians() / 2.0).tan()
    }

    /// Continuous pixel coordinate (pixel centres at `i + 0.5`) of a point at
    /// horizontal offset `(dx, dy)` from the camera and `depth` below it.
    pub fn project(&self, dx: f64, dy: f64, depth: f64) -> (f64, f64) {
        let f = self.focal_px();
        (
            self.width as f64 / 2.0 + f * dx / depth,
            self.height as f64 / 2.0 + f * dy / depth,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub image: Raster,
    pub pose: Pose,
    pub intrinsics: CameraIntrinsics,
}

/// Linear constant-altitude flight path along +x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlightPath {
    pub x_start: f64,
    pub length: f64,
    pub spacing: f64,
    pub altitude: f64,
    #[serde(default)]
    pub y: f64,
}

impl Default for FlightPath {
    /// 14 m path sampled every 0.5 m at 26 m AGL, centred on the origin.
    fn default() -> Self {
        Self {
            x_start: -7.0,
            length: 14.0,
            spacing: 0.5,
            altitude: 26.0,
            y: 0.0,
        }
    }
}

impl FlightPath {
    pub fn frame_count(&self) -> usize {
        (self.length / self.spacing + 1e-9).floor() as usize + 1
    }

    pub fn poses(&self) -> Vec<Pose> {
        (0..self.frame_count())
            .map(|i| Pose::new(self.x_start + i as f64 * self.spacing, self.y, self.altitude))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scene {
    pub spec: SceneSpec,
    pub occluders: Vec<Occluder>,
    #[serde(skip)]
    grid: OccluderGrid,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let [w, d] = self.extent;
        if !(w > 0.0 && d > 0.0) {
            return Err(Error::invalid(format!(
                "extent must be positive, got {w} x {d}"
            )));
        }
        if !(self.ground_temp >= 0.0) || !(self.ground_noise_amp >= 0.0) {
            return Err(Error::invalid("ground radiance and noise must be non-negative"));
        }
        if self.ground_noise_amp > self.ground_temp {
            return Err(Error::invalid(
                "ground noise amplitude exceeds ground radiance (radiance must stay >= 0)",
            ));
        }
        if !(self.ground_noise_scale > 0.0) {
            return Err(Error::invalid("ground noise scale must be positive"));
        }
        for (i, t) in self.targets.iter().enumerate() {
            let [x, y] = t.position;
            if x.abs() > w / 2.0 || y.abs() > d / 2.0 {
                return Err(Error::invalid(format!(
                    "target {i} at ({x}, {y}) lies outside the {w} x {d} m extent"
                )));
            }
            if !(t.height >= 0.0) || !(t.radius > 0.0) || !(t.temp >= 0.0) {
                return Err(Error::invalid(format!(
                    "target {i} needs height >= 0, radius > 0 and radiance >= 0"
                )));
            }
        }
        let o = &self.occluders;
        if !(o.density >= 0.0) {
            return Err(Error::invalid("occluder density must be >= 0"));
        }
        if o.density > 0.0 {
            if !(o.crown_height > o.crown_height_jitter.abs()) {
                return Err(Error::invalid("crown height must exceed its jitter"));
            }
            if !(o.crown_radius > o.crown_radius_jitter.abs()) {
                return Err(Error::invalid("crown radius must exceed its jitter"));
            }
            if !(o.temp >= 0.0) {
                return Err(Error::invalid("occluder radiance must be >= 0"));
            }
            if !(0.0..=1.0).contains(&o.density_variation) || !(o.variation_scale > 0.0) {
                return Err(Error::invalid(
                    "density variation must be in [0, 1] with a positive scale",
                ));
            }
        }
        Ok(())
    }
}

impl Scene {
    /// Highest point of any scene geometry.
    pub fn max_height(&self) -> f64 {
        let t = self.spec.targets.iter().map(|t| t.height);
        let o = self.occluders.iter().map(|o| o.height);
        t.chain(o).fold(0.0, f64::max)
    }

    /// Ground radiance at world position `(x, y)`.
    pub fn ground_radiance(&self, x: f64, y: f64) -> f64 {
        let s = &self.spec;
        if s.ground_noise_amp == 0.0 {
            return s.ground_temp;
        }
        let coarse = value_noise(x, y, s.ground_noise_scale, s.seed, 0x67);
        let fine = value_noise(x, y, s.ground_noise_scale * 0.43, s.seed, 0x68);
        let n = 0.65 * coarse + 0.35 * fine;
        s.ground_temp + s.ground_noise_amp * (2.0 * n - 1.0)
    }

    /// Radiance seen along the ray leaving `origin` with horizontal slope
    /// `(dx, dy)` per metre of descent.
    fn trace(&self, origin: Pose, dx: f64, dy: f64) -> f64 {
        let mut best_z = f64::NEG_INFINITY;
        let mut radiance = 0.0;

        if let Some(z) = self.grid.first_hit(&self.occluders, origin, dx, dy) {
            best_z = z;
            radiance = self.spec.occluders.temp;
        }
        for t in &self.spec.targets {
            if t.height <= best_z {
                continue;
            }
            if let Some(z) = cylinder_hit(t, origin, dx, dy) {
                if z > best_z {
                    best_z = z;
                    radiance = t.temp;
                }
            }
        }
        if best_z == f64::NEG_INFINITY {
            let x = origin.x + origin.z * dx;
            let y = origin.y + origin.z * dy;
            radiance = self.ground_radiance(x, y);
        }
        radiance
    }
}

/// Height at which the ray first meets the target cylinder (top disc or side
/// wall), if at all.
fn cylinder_hit(t: &TargetSpec, origin: Pose, dx: f64, dy: f64) -> Option<f64> {
    let [cx, cy] = t.position;
    let r2 = t.radius * t.radius;
    // Horizontal offset from the axis after descending `s` metres: q0 + s * d.
    let (qx, qy) = (origin.x - cx, origin.y - cy);
    let s_top = origin.z - t.height;
    let (tx, ty) = (qx + s_top * dx, qy + s_top * dy);
    if tx * tx + ty * ty <= r2 {
        return Some(t.height);
    }
    let a = dx * dx + dy * dy;
    if a == 0.0 {
        return None;
    }
    let b = 2.0 * (qx * dx + qy * dy);
    let c = qx * qx + qy * qy - r2;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let s_enter = (-b - disc.sqrt()) / (2.0 * a);
    if s_enter >= s_top && s_enter <= origin.z {
        Some(origin.z - s_enter)
    } else {
        None
    }
}

/// Uniform bucket grid over the canopy plane. Each disc is registered in every
/// cell its bounding box touches.
#[derive(Debug, Clone, PartialEq, Default)]
struct OccluderGrid {
    origin: [f64; 2],
    cell: f64,
    dims: [usize; 2],
    cells: Vec<Vec<u32>>,
    z_range: [f64; 2],
}

impl OccluderGrid {
    fn build(extent: [f64; 2], occluders: &[Occluder]) -> Self {
        if occluders.is_empty() {
            return Self::default();
        }
        let max_r = occluders.iter().map(|o| o.radius).fold(0.0, f64::max);
        let cell = (2.0 * max_r).max(0.1);
        let origin = [-extent[0] / 2.0 - max_r, -extent[1] / 2.0 - max_r];
        let dims = [
            ((extent[0] + 2.0 * max_r) / cell).ceil() as usize + 1,
            ((extent[1] + 2.0 * max_r) / cell).ceil() as usize + 1,
        ];
        let mut cells = vec![Vec::new(); dims[0] * dims[1]];
        let mut z_range = [f64::INFINITY, f64::NEG_INFINITY];
        for (i, o) in occluders.iter().enumerate() {
            z_range[0] = z_range[0].min(o.height);
            z_range[1] = z_range[1].max(o.height);
            let (x0, y0) = Self::cell_of(origin, cell, dims, o.center[0] - o.radius, o.center[1] - o.radius);
            let (x1, y1) = Self::cell_of(origin, cell, dims, o.center[0] + o.radius, o.center[1] + o.radius);
            for cy in y0..=y1 {
                for cx in x0..=x1 {
                    cells[cy * dims[0] + cx].push(i as u32);
                }
            }
        }
        Self {
            origin,
            cell,
            dims,
            cells,
            z_range,
        }
    }

    fn cell_of(origin: [f64; 2], cell: f64, dims: [usize; 2], x: f64, y: f64) -> (usize, usize) {
        let cx = ((x - origin[0]) / cell).floor().clamp(0.0, (dims[0] - 1) as f64);
        let cy = ((y - origin[1]) / cell).floor().clamp(0.0, (dims[1] - 1) as f64);
        (cx as usize, cy as usize)
    }

    /// Height of the highest disc hit by the ray.
    fn first_hit(&self, occluders: &[Occluder], origin: Pose, dx: f64, dy: f64) -> Option<f64> {
        if self.cells.is_empty() {
            return None;
        }
        let at = |z: f64| {
            let s = origin.z - z;
            (origin.x + s * dx, origin.y + s * dy)
        };
        let (ax, ay) = at(self.z_range[1]);
        let (bx, by) = at(self.z_range[0]);
        let lo = [ax.min(bx), ay.min(by)];
        let hi = [ax.max(bx), ay.max(by)];
        let world_hi = [
            self.origin[0] + self.cell * self.dims[0] as f64,
            self.origin[1] + self.cell * self.dims[1] as f64,
        ];
        if hi[0] < self.origin[0] || hi[1] < self.origin[1] || lo[0] > world_hi[0] || lo[1] > world_hi[1] {
            return None;
        }
        let (x0, y0) = Self::cell_of(self.origin, self.cell, self.dims, lo[0], lo[1]);
        let (x1, y1) = Self::cell_of(self.origin, self.cell, self.dims, hi[0], hi[1]);
        let mut best: Option<f64> = None;
        for cy in y0..=y1 {
            for cx in x0..=x1 {
                for &i in &self.cells[cy * self.dims[0] + cx] {
                    let o = &occluders[i as usize];
                    if best.is_some_and(|b| b >= o.height) {
                        continue;
                    }
                    let (px, py) = at(o.height);
                    let (ex, ey) = (px - o.center[0], py - o.center[1]);
                    if ex * ex + ey * ey <= o.radius * o.radius {
                        best = Some(o.height);
                    }
                }
            }
        }
        best
    }
}

/// Builds the scene described by `spec`. The same spec always yields the same
/// scene.
pub fn generate_scene(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let layer = &spec.occluders;
    let [w, d] = spec.extent;
    let mut occluders = Vec::new();
    if layer.density > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let v = layer.density_variation;
        let ceiling = layer.density * (1.0 + v);
        let mean = ceiling * w * d;
        let n = Poisson::new(mean)
            .map_err(|e| Error::invalid(format!("occluder count distribution: {e}")))?
            .sample(&mut rng) as usize;
        for _ in 0..n {
            let x = (rng.random::<f64>() - 0.5) * w;
            let y = (rng.random::<f64>() - 0.5) * d;
            let dh = rng.random::<f64>() * 2.0 - 1.0;
            let dr = rng.random::<f64>() * 2.0 - 1.0;
            let accept = rng.random::<f64>();
            if v > 0.0 {
                let m = value_noise(x, y, layer.variation_scale, spec.seed, 0x0cc1);
                let local = 1.0 + v * (2.0 * m - 1.0);
                if accept * (1.0 + v) > local {
                    continue;
                }
            }
            occluders.push(Occluder {
                center: [x, y],
                height: layer.crown_height + layer.crown_height_jitter * dh,
                radius: layer.crown_radius + layer.crown_radius_jitter * dr,
            });
        }
    }
    let grid = OccluderGrid::build(spec.extent, &occluders);
    Ok(Scene {
        spec: spec.clone(),
        occluders,
        grid,
    })
}

impl Scene {
    /// Scene with hand-placed occluders; the `SceneSpec` occluder layer only
    /// supplies their radiance.
    pub fn with_occluders(spec: SceneSpec, occluders: Vec<Occluder>) -> Result<Scene> {
        spec.validate()?;
        for (i, o) in occluders.iter().enumerate() {
            if !(o.radius > 0.0) || !(o.height > 0.0) || !o.center.iter().all(|c| c.is_finite()) {
                return Err(Error::invalid(format!(
                    "occluder {i} needs a finite centre, radius > 0 and height > 0"
                )));
            }
        }
        let grid = OccluderGrid::build(spec.extent, &occluders);
        Ok(Scene {
            spec,
            occluders,
            grid,
        })
    }
}

fn check_pose(scene: &Scene, pose: &Pose) -> Result<()> {
    let top = scene.max_height();
    if !(pose.z > top) {
        return Err(Error::invalid(format!(
            "camera altitude {} m must exceed the highest scene geometry ({} m)",
            pose.z, top
        )));
    }
    Ok(())
}

/// Ray-casts one nadir frame: each pixel takes the radiance of the first
/// surface its centre ray meets.
pub fn render_frame(scene: &Scene, pose: Pose, intrinsics: CameraIntrinsics) -> Result<Frame> {
    intrinsics.validate()?;
    check_pose(scene, &pose)?;
    Ok(render_unchecked(scene, pose, intrinsics))
}

fn render_unchecked(scene: &Scene, pose: Pose, intrinsics: CameraIntrinsics) -> Frame {
    let (w, h) = (intrinsics.width, intrinsics.height);
    let f = intrinsics.focal_px();
    let mut image = Raster::new(w, h);
    image
        .data_mut()
        .par_chunks_mut(w)
        .enumerate()
        .for_each(|(row, out)| {
            let dy = (row as f64 + 0.5 - h as f64 / 2.0) / f;
            for (col, px) in out.iter_mut().enumerate() {
                let dx = (col as f64 + 0.5 - w as f64 / 2.0) / f;
                *px = scene.trace(pose, dx, dy) as f32;
            }
        });
    Frame {
        image,
        pose,
        intrinsics,
    }
}

/// Renders the frames of a linear flight path.
pub fn render_scan(scene: &Scene, path: &FlightPath, intrinsics: CameraIntrinsics) -> Result<ScanStack> {
    intrinsics.validate()?;
    if !(path.spacing > 0.0) || !(path.length >= 0.0) {
        return Err(Error::invalid(format!(
            "flight path needs spacing > 0 and length >= 0, got spacing {} and length {}",
            path.spacing, path.length
        )));
    }
    let poses = path.poses();
    check_pose(scene, &poses[0])?;
    let frames = poses
        .into_par_iter()
        .map(|p| render_unchecked(scene, p, intrinsics))
        .collect();
    ScanStack::new(frames)
}

/// Fraction of sample points on the target's top disc with an unobstructed
/// line of sight to the camera through the canopy layer.
pub fn ground_truth_visibility(scene: &Scene, pose: Pose, target_index: usize) -> Result<f64> {
    let t = scene.spec.targets.get(target_index).ok_or_else(|| {
        Error::invalid(format!(
            "target index {target_index} out of range ({} targets)",
            scene.spec.targets.len()
        ))
    })?;
    check_pose(scene, &pose)?;
    // Only discs near the sight lines can block them; the bounding box of the
    // disc swept up to the camera keeps the brute-force check cheap.
    let reach = t.radius + scene.occluders.iter().map(|o| o.radius).fold(0.0, f64::max);
    let (lo_x, hi_x) = (t.position[0].min(pose.x) - reach, t.position[0].max(pose.x) + reach);
    let (lo_y, hi_y) = (t.position[1].min(pose.y) - reach, t.position[1].max(pose.y) + reach);
    let candidates: Vec<&Occluder> = scene
        .occluders
        .iter()
        .filter(|o| (lo_x..=hi_x).contains(&o.center[0]) && (lo_y..=hi_y).contains(&o.center[1]))
        .collect();
    const N: usize = 21;
    let mut total = 0usize;
    let mut visible = 0usize;
    for j in 0..N {
        for i in 0..N {
            let u = (i as f64 + 0.5) / N as f64 * 2.0 - 1.0;
            let v = (j as f64 + 0.5) / N as f64 * 2.0 - 1.0;
            if u * u + v * v > 1.0 {
                continue;
            }
            total += 1;
            let p = [t.position[0] + u * t.radius, t.position[1] + v * t.radius];
            let blocked = candidates.iter().any(|o| {
                if o.height <= t.height || o.height >= pose.z {
                    return false;
                }
                let s = (o.height - t.height) / (pose.z - t.height);
                let x = p[0] + s * (pose.x - p[0]);
                let y = p[1] + s * (pose.y - p[1]);
                let (ex, ey) = (x - o.center[0], y - o.center[1]);
                ex * ex + ey * ey <= o.radius * o.radius
            });
            if !blocked {
                visible += 1;
            }
        }
    }
    Ok(visible as f64 / total as f64)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn lattice(ix: i64, iy: i64, seed: u64, salt: u64) -> f64 {
    let h = splitmix64(
        seed ^ splitmix64(salt ^ splitmix64((ix as u64) ^ splitmix64(iy as u64).rotate_left(17))),
    );
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Smoothstep-interpolated lattice noise in `[0, 1]`.
fn value_noise(x: f64, y: f64, scale: f64, seed: u64, salt: u64) -> f64 {
    let (fx, fy) = (x / scale, y / scale);
    let (ix, iy) = (fx.floor(), fy.floor());
    let (tx, ty) = (fx - ix, fy - iy);
    let (sx, sy) = (tx * tx * (3.0 - 2.0 * tx), ty * ty * (3.0 - 2.0 * ty));
    let (ix, iy) = (ix as i64, iy as i64);
    let v00 = lattice(ix, iy, seed, salt);
    let v10 = lattice(ix + 1, iy, seed, salt);
    let v01 = lattice(ix, iy + 1, seed, salt);
    let v11 = lattice(ix + 1, iy + 1, seed, salt);
    let top = v00 + (v10 - v00) * sx;
    let bottom = v01 + (v11 - v01) * sx;
    top + (bottom - top) * sy
}
