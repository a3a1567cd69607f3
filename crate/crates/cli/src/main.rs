//! `aos`: simulate occluded scans, render integral and stereo images, evaluate
//! the stereo perception model, sweep metrics and serve stacks over HTTP.
//!
//! Exit codes: 0 success, 2 invalid usage or parameters, 3 I/O failure.
//! Errors are printed as a single line starting with `error:`.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) => m,
        }
    }
}

impl From<aos_core::Error> for CliError {
    fn from(e: aos_core::Error) -> Self {
        match e {
            aos_core::Error::Infeasible { message, constraint } => {
                CliError::Usage(format!("{message}; feasible ranges: {constraint}"))
            }
            e if e.is_usage() => CliError::Usage(e.to_string()),
            e => CliError::Io(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "aos", version, about = "Synthetic-aperture stereo imaging toolkit")]
struct Cli {
    /// TOML file supplying values for any flag not given on the command line.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a scan stack of a preset or scene file into a directory.
    Simulate(SimulateArgs),
    /// Render the integral image of a stack at (u, a, h).
    Integrate(IntegrateArgs),
    /// Render a stereo integral pair with side-by-side and anaglyph composites.
    Stereo(StereoArgs),
    /// Tabulate the perception model over targets and baselines.
    Perception(PerceptionArgs),
    /// Evaluate an image metric over an (a, e_f) grid.
    Sweep(SweepArgs),
    /// Plane-sweep depth reconstruction of a stack.
    Planesweep(PlanesweepArgs),
    /// Serve the stacks of a data directory over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Preset (preset-1 .. preset-4, or open, forest, dense, sparse) or scene TOML file. Default preset-1.
    #[arg(long)]
    pub scene: Option<String>,
    /// Random seed; overrides the seed of a scene file. Default 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Frame width in pixels. Default 640.
    #[arg(long)]
    pub width: Option<usize>,
    /// Frame height in pixels. Default 512.
    #[arg(long)]
    pub height: Option<usize>,
    /// Existing output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    /// Stack directory (frames plus poses.txt).
    #[arg(long)]
    pub stack: Option<PathBuf>,
    /// Viewpoint on the path, metres. Default: path centre.
    #[arg(long, allow_negative_numbers = true)]
    pub u: Option<f64>,
    /// Synthetic aperture, metres. Default: the whole path.
    #[arg(long)]
    pub a: Option<f64>,
    /// Focal distance below the aperture plane, metres. Default: flight altitude.
    #[arg(long)]
    pub h: Option<f64>,
    /// Output PNG; provenance goes next to it with a .txt extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StereoArgs {
    #[arg(long)]
    pub stack: Option<PathBuf>,
    /// Centre viewpoint, metres. Default: path centre.
    #[arg(long, allow_negative_numbers = true)]
    pub u: Option<f64>,
    /// Aperture per eye, metres. Default 2.
    #[arg(long)]
    pub a: Option<f64>,
    /// Stereo baseline e_f, metres. Default 1.
    #[arg(long)]
    pub ef: Option<f64>,
    /// Focal distance, metres. Default: flight altitude.
    #[arg(long)]
    pub h: Option<f64>,
    /// Existing output directory for left.png, right.png, side_by_side.png, anaglyph.png and stereo.txt.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PerceptionArgs {
    /// Single baseline e_f, metres (used when --grid-ef is absent).
    #[arg(long)]
    pub ef: Option<f64>,
    /// Baselines: comma list or start:stop:step. Default 0:14:0.5.
    #[arg(long)]
    pub grid_ef: Option<String>,
    /// Target heights above ground, metres. Default 0.3,1.8,21.
    #[arg(long)]
    pub targets: Option<String>,
    /// Capture focal distance v_f, metres. Default 26.
    #[arg(long)]
    pub vf: Option<f64>,
    /// Camera field of view, degrees. Default 61.
    #[arg(long)]
    pub fov_f: Option<f64>,
    /// Inter-ocular distance e_d, metres. Default 0.065.
    #[arg(long)]
    pub ed: Option<f64>,
    /// Display image distance v_d, metres. Default 2.4852.
    #[arg(long)]
    pub vd: Option<f64>,
    /// Display field of view, degrees. Default 68.
    #[arg(long)]
    pub fov_d: Option<f64>,
    /// Stereo acuity, arcmin. Default 6.
    #[arg(long)]
    pub acuity: Option<f64>,
    /// Disparity gradient fusion limit. Default 1.
    #[arg(long)]
    pub gradient_limit: Option<f64>,
    /// Angular separation between target and ground reference, arcmin. Default 60.
    #[arg(long)]
    pub separation: Option<f64>,
    /// Output file. Without it the table goes to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv (default) or json.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub stack: Option<PathBuf>,
    /// confidence, rivalry, suppression or composite (default).
    #[arg(long)]
    pub metric: Option<String>,
    /// Apertures: comma list or start:stop:step. Default 1,2,4,8.
    #[arg(long)]
    pub grid_a: Option<String>,
    /// Baselines: comma list or start:stop:step. Default 0.5,1,2,4.
    #[arg(long)]
    pub grid_ef: Option<String>,
    /// Centre viewpoint, metres. Default: path centre.
    #[arg(long, allow_negative_numbers = true)]
    pub u: Option<f64>,
    /// Focal distance, metres. Default: flight altitude.
    #[arg(long)]
    pub h: Option<f64>,
    /// Index of the scene target the metrics look at. Default 0.
    #[arg(long)]
    pub target: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv (default) or json.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct PlanesweepArgs {
    #[arg(long)]
    pub stack: Option<PathBuf>,
    /// Nearest depth hypothesis below the aperture plane, metres. Default 3.
    #[arg(long)]
    pub depth_min: Option<f64>,
    /// Farthest depth hypothesis, metres. Default: flight altitude.
    #[arg(long)]
    pub depth_max: Option<f64>,
    /// Hypothesis spacing, metres. Default 0.1.
    #[arg(long)]
    pub depth_step: Option<f64>,
    /// Cost aggregation window, pixels. Default 21.
    #[arg(long)]
    pub window: Option<usize>,
    /// Output 16-bit depth PNG.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "AOS_HOST", default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, env = "AOS_PORT", default_value_t = 8080)]
    pub port: u16,
    /// Directory holding stack subdirectories.
    #[arg(long, env = "AOS_DATA_DIR", default_value = ".")]
    pub data_dir: PathBuf,
    /// Rendered images kept in memory.
    #[arg(long, default_value_t = aos_service::DEFAULT_CACHE_ENTRIES)]
    pub cache: usize,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = config::FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Simulate(a) => commands::simulate(a, &file),
        Command::Integrate(a) => commands::integrate(a, &file),
        Command::Stereo(a) => commands::stereo(a, &file),
        Command::Perception(a) => commands::perception(a, &file),
        Command::Sweep(a) => commands::sweep(a, &file),
        Command::Planesweep(a) => commands::planesweep(a, &file),
        Command::Serve(a) => commands::serve(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
