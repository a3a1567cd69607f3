use std::path::{Path, PathBuf};

use aos_core::format::sig6;
use aos_core::io::{
    feasibility_csv, sidecar_path, sweep_csv, write_bytes, write_depth_map, write_sidecar, write_stack, POSES_FILE,
};
use aos_core::metrics::{parameter_sweep, target_depth_report, DepthRange, PlaneSweep, SweepContext, SweepMetric};
use aos_core::perception::detectability_onset;
use aos_core::presets::Preset;
use aos_core::render::{integral_png, stereo_pngs, ViewParams};
use aos_core::{
    feasibility_region, generate_scene, render_scan, CameraIntrinsics, CaptureGeometry, DisplayModel, FlightPath,
    ObserverModel, ScanStack, Scene, SceneSpec,
};
use aos_service::PerceptionEntry;

use crate::config::{parse_grid, pick, FileConfig, GridValue};
use crate::{CliError, IntegrateArgs, PerceptionArgs, PlanesweepArgs, ServeArgs, SimulateArgs, StereoArgs, SweepArgs};

type Entries = Vec<(String, String)>;

fn entry(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn provenance(command: &str) -> Entries {
    vec![
        entry("tool", concat!("aos ", env!("CARGO_PKG_VERSION"))),
        entry("command", command),
    ]
}

fn require<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("--{flag} is required (on the command line or in --config)")))
}

fn existing_dir(path: &Path) -> Result<(), CliError> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::Io(format!("{}: output directory does not exist", path.display())))
    }
}

/// The directory an output file will be written into must already exist.
fn output_file(path: &Path) -> Result<(), CliError> {
    match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(parent) => existing_dir(parent),
        None => Ok(()),
    }
}

fn stack_dir(args: Option<PathBuf>, file: &FileConfig) -> Result<PathBuf, CliError> {
    let dir = require(args.or_else(|| file.stack.clone()), "stack")?;
    if !dir.join(POSES_FILE).is_file() {
        return Err(CliError::Io(format!("{}: not a stack directory (no {POSES_FILE})", dir.display())));
    }
    Ok(dir)
}

fn load_stack(dir: &Path) -> Result<(ScanStack, Option<Scene>), CliError> {
    Ok(aos_core::io::read_stack(dir)?)
}

fn grid(flag: Option<&str>, file: Option<&GridValue>, name: &str, default: &str) -> Result<Vec<f64>, CliError> {
    match (flag, file) {
        (Some(text), _) => parse_grid(name, text),
        (None, Some(g)) => g.values(name),
        (None, None) => parse_grid(name, default),
    }
}

fn list(v: &[f64]) -> String {
    v.iter().map(|&x| sig6(x)).collect::<Vec<_>>().join(",")
}

enum TableFormat {
    Csv,
    Json,
}

fn table_format(flag: Option<String>, file: &FileConfig) -> Result<TableFormat, CliError> {
    match pick(flag, file.format.clone(), "csv".into()).as_str() {
        "csv" => Ok(TableFormat::Csv),
        "json" => Ok(TableFormat::Json),
        other => Err(CliError::Usage(format!("unknown --format '{other}' (expected csv or json)"))),
    }
}

fn json_text<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

/// Resolves `--scene`: a preset name, else a scene TOML file. The seed flag
/// overrides a file's seed.
fn scene_spec(scene: &str, seed: Option<u64>) -> Result<(SceneSpec, String), CliError> {
    if let Ok(preset) = scene.parse::<Preset>() {
        let seed = seed.unwrap_or(0);
        return Ok((preset.spec(seed), preset.name().to_string()));
    }
    let path = Path::new(scene);
    if !path.exists() {
        return Err(CliError::Usage(format!(
            "--scene '{scene}' is neither a preset (preset-1 .. preset-4) nor an existing scene file"
        )));
    }
    let mut spec = aos_core::io::read_scene_spec(path)?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    Ok((spec, scene.to_string()))
}

pub fn simulate(args: SimulateArgs, file: &FileConfig) -> Result<(), CliError> {
    let out = require(args.out.or_else(|| file.out.clone()), "out")?;
    let scene_name = pick(args.scene, file.scene.clone(), "preset-1".into());
    let seed = args.seed.or(file.seed);
    let width = pick(args.width, file.width, 640);
    let height = pick(args.height, file.height, 512);
    existing_dir(&out)?;
    let (spec, label) = scene_spec(&scene_name, seed)?;
    let intr = CameraIntrinsics::new(61.0, width, height);
    intr.validate()?;
    let path = FlightPath::default();

    let scene = generate_scene(&spec)?;
    let stack = render_scan(&scene, &path, intr)?;
    write_stack(&out, &stack, Some(&scene))?;

    let mut p = provenance("simulate");
    p.extend([
        entry("scene", &label),
        entry("seed", spec.seed),
        entry("width", width),
        entry("height", height),
        entry("fov_deg", sig6(intr.fov_deg)),
        entry("path_x_start", sig6(path.x_start)),
        entry("path_length", sig6(path.length)),
        entry("path_spacing", sig6(path.spacing)),
        entry("altitude", sig6(path.altitude)),
        entry("frames", stack.len()),
        entry("occluders", scene.occluders.len()),
    ]);
    write_sidecar(&out.join("provenance.txt"), "aos simulate", &p)?;
    println!("wrote {} frames to {}", stack.len(), out.display());
    Ok(())
}

fn view_defaults(stack: &ScanStack, u: Option<f64>, h: Option<f64>) -> (f64, f64) {
    let (lo, hi) = stack.x_range();
    (u.unwrap_or(0.5 * (lo + hi)), h.unwrap_or(stack.altitude()))
}

pub fn integrate(args: IntegrateArgs, file: &FileConfig) -> Result<(), CliError> {
    let dir = stack_dir(args.stack, file)?;
    let out = require(args.out.or_else(|| file.out.clone()), "out")?;
    output_file(&out)?;
    let (stack, _) = load_stack(&dir)?;
    let (u, h) = view_defaults(&stack, args.u.or(file.u), args.h.or(file.h));
    let a = pick(args.a, file.a, stack.path_length());
    let view = ViewParams::new(u, a, 0.0, h)?;
    let png = integral_png(&stack, view)?;
    write_bytes(&out, &png)?;

    let (lo, hi) = (view.u() - view.a() / 2.0, view.u() + view.a() / 2.0);
    let mut p = provenance("integrate");
    p.push(entry("stack", dir.display()));
    p.extend(view.provenance().into_iter().filter(|(k, _)| k != "e_f"));
    p.push(entry("frames_used", stack.window(lo, hi).len()));
    p.push(entry("radiance_scale", aos_core::io::RADIANCE_SCALE));
    write_sidecar(&sidecar_path(&out), "aos integrate", &p)?;
    println!("wrote {}", out.display());
    Ok(())
}

pub fn stereo(args: StereoArgs, file: &FileConfig) -> Result<(), CliError> {
    let dir = stack_dir(args.stack, file)?;
    let out = require(args.out.or_else(|| file.out.clone()), "out")?;
    existing_dir(&out)?;
    let (stack, _) = load_stack(&dir)?;
    let (u, h) = view_defaults(&stack, args.u.or(file.u), args.h.or(file.h));
    let a = pick(args.a, file.a, 2.0);
    let ef = pick(args.ef, file.ef, 1.0);
    let view = ViewParams::new(u, a, ef, h)?;
    let pngs = stereo_pngs(&stack, view)?;
    for (name, bytes) in [
        ("left.png", &pngs.left),
        ("right.png", &pngs.right),
        ("side_by_side.png", &pngs.side_by_side),
        ("anaglyph.png", &pngs.anaglyph),
    ] {
        write_bytes(&out.join(name), bytes)?;
    }
    let mut p = provenance("stereo");
    p.push(entry("stack", dir.display()));
    p.extend(view.provenance());
    p.push(entry("radiance_scale", aos_core::io::RADIANCE_SCALE));
    write_sidecar(&out.join("stereo.txt"), "aos stereo", &p)?;
    println!("wrote stereo pair to {}", out.display());
    Ok(())
}

pub fn perception(args: PerceptionArgs, file: &FileConfig) -> Result<(), CliError> {
    let baselines = match (&args.grid_ef, args.ef, &file.grid_ef, file.ef) {
        (Some(g), _, _, _) => parse_grid("grid-ef", g)?,
        (None, Some(e), _, _) => vec![e],
        (None, None, Some(g), _) => g.values("grid-ef")?,
        (None, None, None, Some(e)) => vec![e],
        (None, None, None, None) => parse_grid("grid-ef", "0:14:0.5")?,
    };
    let targets = grid(args.targets.as_deref(), file.targets.as_ref(), "targets", "0.3,1.8,21")?;
    let defaults = (CaptureGeometry::default(), DisplayModel::default(), ObserverModel::default());
    let cap = CaptureGeometry {
        focal_distance: pick(args.vf, file.vf, defaults.0.focal_distance),
        baseline: 0.0,
        fov_deg: pick(args.fov_f, file.fov_f, defaults.0.fov_deg),
    };
    let disp = DisplayModel {
        eye_distance: pick(args.ed, file.ed, defaults.1.eye_distance),
        image_distance: pick(args.vd, file.vd, defaults.1.image_distance),
        fov_deg: pick(args.fov_d, file.fov_d, defaults.1.fov_deg),
    };
    let obs = ObserverModel {
        acuity_arcmin: pick(args.acuity, file.acuity, defaults.2.acuity_arcmin),
        gradient_limit: pick(args.gradient_limit, file.gradient_limit, defaults.2.gradient_limit),
        separation_arcmin: pick(args.separation, file.separation, defaults.2.separation_arcmin),
    };
    let format = table_format(args.format, file)?;
    let out = args.out.or_else(|| file.out.clone());
    if let Some(out) = &out {
        output_file(out)?;
    }
    disp.validate()?;
    obs.validate()?;

    let table = feasibility_region(&cap, &disp, &obs, &targets, &baselines)?;
    let text = match format {
        TableFormat::Csv => feasibility_csv(&table)?,
        TableFormat::Json => json_text(&table.rows.iter().map(PerceptionEntry::from).collect::<Vec<_>>()),
    };

    let max_e = baselines.iter().copied().fold(0.0, f64::max);
    let mut summary = Vec::new();
    for &t in &targets {
        let onset = detectability_onset(&cap, &disp, &obs, t, max_e)?;
        let exit = table.first_non_fusible(t);
        summary.push(format!(
            "target_h={} jddi_m={} detectable_from_e_f={} first_non_fusible_e_f={}",
            sig6(t),
            sig6(table.rows[0].jddi),
            onset.map_or("none".into(), sig6),
            exit.map_or("none".into(), sig6),
        ));
    }

    match out {
        Some(out) => {
            write_bytes(&out, text.as_bytes())?;
            let mut p = provenance("perception");
            p.extend([
                entry("targets", list(&targets)),
                entry("e_f", list(&baselines)),
                entry("v_f", sig6(cap.focal_distance)),
                entry("fov_f", sig6(cap.fov_deg)),
                entry("e_d", sig6(disp.eye_distance)),
                entry("v_d", sig6(disp.image_distance)),
                entry("fov_d", sig6(disp.fov_deg)),
                entry("acuity_arcmin", sig6(obs.acuity_arcmin)),
                entry("gradient_limit", sig6(obs.gradient_limit)),
                entry("separation_arcmin", sig6(obs.separation_arcmin)),
            ]);
            write_sidecar(&sidecar_path(&out), "aos perception", &p)?;
            for line in summary {
                println!("{line}");
            }
        }
        None => {
            print!("{text}");
            for line in summary {
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}

pub fn sweep(args: SweepArgs, file: &FileConfig) -> Result<(), CliError> {
    let dir = stack_dir(args.stack, file)?;
    let out = require(args.out.or_else(|| file.out.clone()), "out")?;
    output_file(&out)?;
    let metric: SweepMetric = pick(args.metric, file.metric.clone(), "composite".into()).parse()?;
    let apertures = grid(args.grid_a.as_deref(), file.grid_a.as_ref(), "grid-a", "1,2,4,8")?;
    let baselines = grid(args.grid_ef.as_deref(), file.grid_ef.as_ref(), "grid-ef", "0.5,1,2,4")?;
    let target = pick(args.target, file.target, 0);
    let format = table_format(args.format, file)?;
    let (stack, scene) = load_stack(&dir)?;
    let scene = scene.ok_or_else(|| {
        CliError::Usage(format!(
            "{}: sweeps need the scene ground truth (scene.toml), which this stack lacks",
            dir.display()
        ))
    })?;
    let (u, h) = view_defaults(&stack, args.u.or(file.u), args.h.or(file.h));
    // Snap like every other viewing parameter.
    let view = ViewParams::new(u, 0.0, 0.0, h)?;
    let ctx = SweepContext::for_target(&stack, &scene, target, view.u(), view.h())?;
    let grid = parameter_sweep(&stack, metric, &baselines, &apertures, &ctx)?;
    let text = match format {
        TableFormat::Csv => sweep_csv(&grid)?,
        TableFormat::Json => json_text(&grid),
    };
    write_bytes(&out, text.as_bytes())?;

    let mut p = provenance("sweep");
    p.extend([
        entry("stack", dir.display()),
        entry("metric", metric.name()),
        entry("a", list(&apertures)),
        entry("e_f", list(&baselines)),
        entry("u", sig6(view.u())),
        entry("h", sig6(view.h())),
        entry("target", target),
    ]);
    write_sidecar(&sidecar_path(&out), "aos sweep", &p)?;
    match grid.argmax() {
        Some((a, e, v)) => println!("argmax metric={} a={} e_f={} value={}", metric.name(), sig6(a), sig6(e), sig6(v)),
        None => println!("argmax metric={} none (every cell infeasible)", metric.name()),
    }
    Ok(())
}

pub fn planesweep(args: PlanesweepArgs, file: &FileConfig) -> Result<(), CliError> {
    let dir = stack_dir(args.stack, file)?;
    let out = require(args.out.or_else(|| file.out.clone()), "out")?;
    output_file(&out)?;
    let (stack, scene) = load_stack(&dir)?;
    let range = DepthRange {
        min: pick(args.depth_min, file.depth_min, 3.0),
        max: pick(args.depth_max, file.depth_max, stack.altitude()),
        step: pick(args.depth_step, file.depth_step, 0.1),
    };
    let sweep = PlaneSweep {
        window: pick(args.window, file.window, PlaneSweep::default().window),
    };
    let map = sweep.run(&stack, range)?;
    let mut p = provenance("planesweep");
    p.extend([entry("stack", dir.display()), entry("window", sweep.window)]);
    write_depth_map(&out, &map, &p)?;
    println!("wrote {}", out.display());
    if let Some(scene) = scene {
        for i in 0..scene.spec.targets.len() {
            let Ok(r) = target_depth_report(&map, &scene, i) else {
                continue;
            };
            println!(
                "target={i} true_height={} height={} depth_error={} score={} baseline_score={} localised={}",
                sig6(map.altitude - r.true_depth),
                sig6(r.height(map.altitude)),
                sig6(r.depth_error()),
                sig6(r.score),
                sig6(r.baseline_score),
                r.localised(2.0),
            );
        }
    }
    Ok(())
}

pub fn serve(args: ServeArgs) -> Result<(), CliError> {
    if !args.data_dir.is_dir() {
        return Err(CliError::Io(format!("{}: data directory does not exist", args.data_dir.display())));
    }
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Io(format!("cannot start runtime: {e}")))?;
    runtime
        .block_on(aos_service::serve(aos_service::ServeConfig {
            host: args.host,
            port: args.port,
            data_dir: args.data_dir.clone(),
            cache_entries: args.cache,
        }))
        .map_err(|e| CliError::Io(format!("{}: {e}", args.data_dir.display())))
}
