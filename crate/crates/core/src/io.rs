//! On-disk formats.
//!
//! A scan stack directory holds `frame_NNN.png` (16-bit grayscale, radiance
//! times [`RADIANCE_SCALE`]), a `poses.txt` sidecar with one line per frame
//! (`index x y z fov width height`) and, for simulated stacks, `scene.toml`
//! with the generating scene. Integral images and pairs are written as PNG
//! next to a `key = value` provenance sidecar.

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::codecs::png::PngEncoder;
use image::{ImageBuffer, Luma, Rgb};

use crate::error::{Error, Result};
use crate::format::sig6;
use crate::integral::{DisplayImage, ScanStack};
use crate::metrics::{DepthMap, DisparityMeasurement, SweepCell, SweepGrid};
use crate::perception::{FeasibilityTable, PerceptionResult};
use crate::raster::Raster;
use crate::scene::{generate_scene, CameraIntrinsics, Frame, Pose, Scene, SceneSpec};

/// PNG counts per radiance unit.
pub const RADIANCE_SCALE: f64 = 1000.0;
/// PNG counts per metre of depth.
pub const DEPTH_SCALE: f64 = 1000.0;

pub const POSES_FILE: &str = "poses.txt";
pub const SCENE_FILE: &str = "scene.toml";

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:03}.png")
}

fn to_counts(v: f32, scale: f64) -> u16 {
    (v as f64 * scale).round().clamp(0.0, u16::MAX as f64) as u16
}

/// Encodes a raster as 16-bit grayscale PNG bytes.
pub fn encode_png16(raster: &Raster, scale: f64) -> Result<Vec<u8>> {
    let counts: Vec<u16> = raster.data().iter().map(|&v| to_counts(v, scale)).collect();
    let img: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(raster.width() as u32, raster.height() as u32, counts)
            .expect("buffer matches dimensions");
    let mut out = Vec::new();
    img.write_with_encoder(PngEncoder::new(Cursor::new(&mut out)))?;
    Ok(out)
}

pub fn decode_png16(bytes: &[u8], scale: f64) -> Result<Raster> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)?.into_luma16();
    let (w, h) = img.dimensions();
    let data = img.into_raw().into_iter().map(|c| (c as f64 / scale) as f32).collect();
    Ok(Raster::from_vec(w as usize, h as usize, data))
}

/// PNG bytes of a composed stereo display: side-by-side as 16-bit grayscale
/// radiance, anaglyph as 8-bit RGB.
pub fn encode_display(display: &DisplayImage) -> Result<Vec<u8>> {
    match display {
        DisplayImage::SideBySide(r) => encode_png16(r, RADIANCE_SCALE),
        DisplayImage::Anaglyph {
            width, height, rgb, ..
        } => {
            let img: ImageBuffer<Rgb<u8>, Vec<u8>> =
                ImageBuffer::from_raw(*width as u32, *height as u32, rgb.clone())
                    .expect("buffer matches dimensions");
            let mut out = Vec::new();
            img.write_with_encoder(PngEncoder::new(Cursor::new(&mut out)))?;
            Ok(out)
        }
    }
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `entries` as `key = value` lines under a comment header.
pub fn write_sidecar(path: &Path, header: &str, entries: &[(String, String)]) -> Result<()> {
    let mut s = format!("# {header}\n");
    for (k, v) in entries {
        s.push_str(&format!("{k} = {v}\n"));
    }
    write_bytes(path, s.as_bytes())
}

pub fn read_sidecar(path: &Path) -> Result<Vec<(String, String)>> {
    let text = read_string(path)?;
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::format(path, format!("expected 'key = value', got '{line}'")))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Per-frame pose record of a stack sidecar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseRecord {
    pub index: usize,
    pub pose: Pose,
    pub intrinsics: CameraIntrinsics,
}

/// Renders the poses sidecar. Positions use the shortest representation that
/// parses back to the same value.
pub fn format_poses(stack: &ScanStack) -> String {
    let mut s = String::from("# aos scan stack\n");
    s.push_str(&format!("# radiance_scale {RADIANCE_SCALE}\n"));
    s.push_str("# index x y z fov width height\n");
    for (i, f) in stack.frames().iter().enumerate() {
        s.push_str(&format!(
            "{i} {} {} {} {} {} {}\n",
            f.pose.x, f.pose.y, f.pose.z, f.intrinsics.fov_deg, f.intrinsics.width, f.intrinsics.height
        ));
    }
    s
}

pub fn parse_poses(path: &Path, text: &str) -> Result<Vec<PoseRecord>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| Error::format(path, format!("line {}: {what}: '{line}'", n + 1));
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 7 {
            return Err(bad("expected 7 fields"));
        }
        let num = |i: usize| fields[i].parse::<f64>().map_err(|_| bad("bad number"));
        let int = |i: usize| fields[i].parse::<usize>().map_err(|_| bad("bad integer"));
        out.push(PoseRecord {
            index: int(0)?,
            pose: Pose::new(num(1)?, num(2)?, num(3)?),
            intrinsics: CameraIntrinsics::new(num(4)?, int(5)?, int(6)?),
        });
    }
    if out.is_empty() {
        return Err(Error::format(path, "no frames listed"));
    }
    Ok(out)
}

/// Writes a stack directory. The directory must exist.
pub fn write_stack(dir: &Path, stack: &ScanStack, scene: Option<&Scene>) -> Result<()> {
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist"),
        ));
    }
    for (i, f) in stack.frames().iter().enumerate() {
        write_bytes(&dir.join(frame_file_name(i)), &encode_png16(&f.image, RADIANCE_SCALE)?)?;
    }
    write_bytes(&dir.join(POSES_FILE), format_poses(stack).as_bytes())?;
    if let Some(scene) = scene {
        write_scene(&dir.join(SCENE_FILE), scene)?;
    }
    Ok(())
}

/// Loads a stack directory and, when present, regenerates its scene.
pub fn read_stack(dir: &Path) -> Result<(ScanStack, Option<Scene>)> {
    let poses_path = dir.join(POSES_FILE);
    let records = parse_poses(&poses_path, &read_string(&poses_path)?)?;
    let mut frames = Vec::with_capacity(records.len());
    for r in &records {
        let path = dir.join(frame_file_name(r.index));
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let image = decode_png16(&bytes, RADIANCE_SCALE)?;
        if image.width() != r.intrinsics.width || image.height() != r.intrinsics.height {
            return Err(Error::format(
                &path,
                format!(
                    "image is {}x{} but the sidecar says {}x{}",
                    image.width(),
                    image.height(),
                    r.intrinsics.width,
                    r.intrinsics.height
                ),
            ));
        }
        frames.push(Frame {
            image,
            pose: r.pose,
            intrinsics: r.intrinsics,
        });
    }
    let stack = ScanStack::new(frames)?;
    let scene_path = dir.join(SCENE_FILE);
    let scene = if scene_path.exists() {
        Some(read_scene(&scene_path)?)
    } else {
        None
    };
    Ok((stack, scene))
}

pub fn write_scene(path: &Path, scene: &Scene) -> Result<()> {
    let text = toml::to_string(scene).map_err(|e| Error::format(path, e.to_string()))?;
    write_bytes(path, text.as_bytes())
}

/// Reads a scene spec (a scene file's extra `occluders` list is ignored and
/// regenerated from the seed).
pub fn read_scene_spec(path: &Path) -> Result<SceneSpec> {
    let text = read_string(path)?;
    #[derive(serde::Deserialize)]
    struct Wrapped {
        spec: SceneSpec,
    }
    if let Ok(w) = toml::from_str::<Wrapped>(&text) {
        return Ok(w.spec);
    }
    toml::from_str::<SceneSpec>(&text).map_err(|e| Error::format(path, e.to_string()))
}

pub fn read_scene(path: &Path) -> Result<Scene> {
    generate_scene(&read_scene_spec(path)?)
}

/// Sidecar path next to an image: `out.png` -> `out.txt`.
pub fn sidecar_path(image_path: &Path) -> PathBuf {
    image_path.with_extension("txt")
}

pub fn write_depth_map(path: &Path, map: &DepthMap, provenance: &[(String, String)]) -> Result<()> {
    let raster = Raster::from_vec(map.width, map.height, map.depth.clone());
    write_bytes(path, &encode_png16(&raster, DEPTH_SCALE)?)?;
    let mut entries = vec![
        ("depth_scale".to_string(), format!("{DEPTH_SCALE} # PNG counts per metre below the aperture plane")),
        ("depth_min".to_string(), sig6(map.range.min)),
        ("depth_max".to_string(), sig6(map.range.max)),
        ("depth_step".to_string(), sig6(map.range.step)),
        ("reference_x".to_string(), sig6(map.reference_x)),
    ];
    entries.extend_from_slice(provenance);
    write_sidecar(&sidecar_path(path), "aos depth map", &entries)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io("<csv buffer>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

pub const FEASIBILITY_HEADER: [&str; 9] = [
    "target_h",
    "e_f",
    "d_display_m",
    "d_display_arcmin",
    "gradient",
    "PTH_m",
    "JDDI_m",
    "detectable",
    "fusible",
];

/// Marker written in the PTH column for targets perceived beyond infinity.
pub const BEYOND_INFINITY: &str = "beyond_infinity";

fn feasibility_record(r: &PerceptionResult) -> [String; 9] {
    [
        sig6(r.target_height),
        sig6(r.baseline),
        sig6(r.disparity.display_m),
        sig6(r.disparity.display_arcmin),
        sig6(r.gradient),
        r.pth.map(sig6).unwrap_or_else(|| BEYOND_INFINITY.to_string()),
        sig6(r.jddi),
        r.depth_detectable.to_string(),
        r.fusible.to_string(),
    ]
}

pub fn feasibility_csv(table: &FeasibilityTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(FEASIBILITY_HEADER)?;
    for r in &table.rows {
        w.write_record(feasibility_record(r))?;
    }
    finish(w)
}

/// One parsed row of a feasibility CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityCsvRow {
    pub target_h: f64,
    pub e_f: f64,
    pub d_display_m: f64,
    pub d_display_arcmin: f64,
    pub gradient: f64,
    pub pth_m: Option<f64>,
    pub jddi_m: f64,
    pub detectable: bool,
    pub fusible: bool,
}

pub fn parse_feasibility_csv(text: &str) -> Result<Vec<FeasibilityCsvRow>> {
    let path = Path::new("<feasibility csv>");
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|_| Error::format(path, format!("bad number '{}'", &rec[i])))
        };
        let flag = |i: usize| {
            rec[i]
                .parse::<bool>()
                .map_err(|_| Error::format(path, format!("bad flag '{}'", &rec[i])))
        };
        out.push(FeasibilityCsvRow {
            target_h: num(0)?,
            e_f: num(1)?,
            d_display_m: num(2)?,
            d_display_arcmin: num(3)?,
            gradient: num(4)?,
            pth_m: if &rec[5] == BEYOND_INFINITY { None } else { Some(num(5)?) },
            jddi_m: num(6)?,
            detectable: flag(7)?,
            fusible: flag(8)?,
        });
    }
    Ok(out)
}

pub fn sweep_csv(grid: &SweepGrid) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["metric", "a", "e_f", "value"])?;
    for (i, &a) in grid.apertures.iter().enumerate() {
        for (j, &e) in grid.baselines.iter().enumerate() {
            let v = match grid.get(i, j) {
                SweepCell::Value(v) => sig6(v),
                SweepCell::Infeasible => "infeasible".to_string(),
            };
            w.write_record([grid.metric.name().to_string(), sig6(a), sig6(e), v])?;
        }
    }
    finish(w)
}

pub fn disparity_csv(rows: &[DisparityMeasurement]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x0", "y0", "width", "height", "disparity_px", "disparity_arcmin", "confidence"])?;
    for m in rows {
        let opt = |v: Option<f64>| v.map(sig6).unwrap_or_else(|| "none".to_string());
        w.write_record([
            m.region.x0.to_string(),
            m.region.y0.to_string(),
            m.region.width.to_string(),
            m.region.height.to_string(),
            opt(m.disparity_px),
            opt(m.disparity_arcmin),
            sig6(m.confidence),
        ])?;
    }
    finish(w)
}
