//! Synthetic-aperture stereo imaging toolkit.
//!
//! The crate is organised along the processing chain:
//!
//! - [`scene`]: procedural occluded scenes and a nadir ray-casting camera that
//!   renders scan stacks along a linear flight path.
//! - [`integral`]: registration of scan frames onto a focal plane and their
//!   averaging into integral images and stereo integral pairs.
//! - [`perception`]: the display-scaled stereo perception model (perceived
//!   distance, perceived target height, just-detectable depth interval,
//!   disparity gradient) and its feasibility sweep.
//! - [`metrics`]: quantitative oracles on rendered data (block-matched
//!   disparity, contrast, rivalry, occlusion suppression, parameter sweeps and
//!   a plane-sweep depth demonstrator).
//! - [`io`]: PNG stacks with pose sidecars, provenance files and CSV exports.
//! - [`render`]: millimetre-snapped image products shared by the front ends.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod format;
pub mod integral;
pub mod io;
pub mod metrics;
pub mod perception;
pub mod presets;
pub mod raster;
pub mod render;
pub mod scene;

pub use error::{Error, Result};
pub use integral::{
    compose_display, integrate, project_to_viewpoint, stereo_pair, DisplayImage, DisplayMode,
    IntegralImage, IntegralParams, ScanStack, StereoPair,
};
pub use perception::{
    disparity, disparity_gradient, feasibility_region, jddi, perceived_distance,
    perceived_target_height, CaptureGeometry, DisplayModel, ObserverModel, PerceptionResult,
};
pub use raster::{PixelRect, Raster};
pub use scene::{
    generate_scene, ground_truth_visibility, render_frame, render_scan, CameraIntrinsics,
    FlightPath, Frame, Occluder, OccluderLayerSpec, Pose, Scene, SceneSpec, TargetSpec,
};
