//! Built-in scenes: one open field and three forests of different density.
//!
//! The canopy is modelled as leaves of about 3 cm radius rather
//! than solid crowns, so it has the gaps a synthetic aperture can look
//! through; a slow density modulation groups the clumps into trees.

use std::str::FromStr;

use crate::error::Error;
use crate::scene::{OccluderLayerSpec, SceneSpec, TargetSpec};

pub const STANDING_HEIGHT: f64 = 1.8;
pub const LYING_HEIGHT: f64 = 0.3;
pub const CROWN_HEIGHT: f64 = 21.0;

pub const GROUND_TEMP: f64 = 10.0;
pub const TARGET_TEMP: f64 = 30.0;
pub const CROWN_TEMP: f64 = 16.0;

/// Open field and forest variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Open field, standing and lying person.
    Open,
    /// Forest, one standing person.
    Forest,
    /// Denser forest, standing and lying person.
    DenseForest,
    /// Sparser forest, standing person and a 0.3 m object.
    SparseForest,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::Open,
        Preset::Forest,
        Preset::DenseForest,
        Preset::SparseForest,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Open => "preset-1",
            Preset::Forest => "preset-2",
            Preset::DenseForest => "preset-3",
            Preset::SparseForest => "preset-4",
        }
    }

    pub fn density(&self) -> f64 {
        match self {
            Preset::Open => 0.0,
            Preset::Forest => 80.0,
            Preset::DenseForest => 110.0,
            Preset::SparseForest => 45.0,
        }
    }

    pub fn spec(&self, seed: u64) -> SceneSpec {
        let standing = TargetSpec {
            position: [-4.0, 0.6],
            height: STANDING_HEIGHT,
            radius: 0.4,
            temp: TARGET_TEMP,
        };
        let low = TargetSpec {
            position: [1.8, -0.8],
            height: LYING_HEIGHT,
            radius: 0.5,
            temp: TARGET_TEMP,
        };
        let targets = match self {
            Preset::Forest => vec![standing],
            _ => vec![standing, low],
        };
        SceneSpec {
            extent: [50.0, 30.0],
            ground_temp: GROUND_TEMP,
            ground_noise_amp: 1.5,
            ground_noise_scale: 0.6,
            targets,
            occluders: OccluderLayerSpec {
                density: self.density(),
                crown_height: CROWN_HEIGHT,
                crown_height_jitter: 0.3,
                crown_radius: 0.03,
                crown_radius_jitter: 0.01,
                temp: CROWN_TEMP,
                density_variation: 0.2,
                variation_scale: 6.0,
            },
            seed,
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "preset-1" | "1" | "open" => Ok(Preset::Open),
            "preset-2" | "2" | "forest" => Ok(Preset::Forest),
            "preset-3" | "3" | "dense" => Ok(Preset::DenseForest),
            "preset-4" | "4" | "sparse" => Ok(Preset::SparseForest),
            other => Err(Error::invalid(format!(
                "unknown scene preset '{other}' (expected preset-1 .. preset-4)"
            ))),
        }
    }
}
