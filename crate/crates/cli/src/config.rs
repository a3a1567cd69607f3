//! Config-file values and their merge with command-line flags.
//!
//! Precedence is flag, then config file, then built-in default. The config
//! file is TOML with the flag names as keys (dashes written as underscores).

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

/// A grid given either as a TOML array or as text (`1,2,4` or `start:stop:step`).
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GridValue {
    List(Vec<f64>),
    Text(String),
}

impl GridValue {
    pub fn values(&self, name: &str) -> Result<Vec<f64>, CliError> {
        match self {
            GridValue::List(v) => check_grid(name, v.clone()),
            GridValue::Text(s) => parse_grid(name, s),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub scene: Option<String>,
    pub seed: Option<u64>,
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub stack: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub u: Option<f64>,
    pub a: Option<f64>,
    pub ef: Option<f64>,
    pub h: Option<f64>,
    pub grid_a: Option<GridValue>,
    pub grid_ef: Option<GridValue>,
    pub metric: Option<String>,
    pub format: Option<String>,
    pub target: Option<usize>,
    pub targets: Option<GridValue>,
    pub vf: Option<f64>,
    pub fov_f: Option<f64>,
    pub ed: Option<f64>,
    pub vd: Option<f64>,
    pub fov_d: Option<f64>,
    pub acuity: Option<f64>,
    pub gradient_limit: Option<f64>,
    pub separation: Option<f64>,
    pub depth_min: Option<f64>,
    pub depth_max: Option<f64>,
    pub depth_step: Option<f64>,
    pub window: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

/// Flag value, else config value, else default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn parse_grid(name: &str, text: &str) -> Result<Vec<f64>, CliError> {
    let bad = |why: &str| CliError::Usage(format!("--{name} '{text}': {why}"));
    let values = if let Some((start, rest)) = text.split_once(':') {
        let (stop, step) = rest.split_once(':').ok_or_else(|| bad("range form is start:stop:step"))?;
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("not a number"));
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(bad("needs step > 0 and stop >= start"));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if n > 100_000 {
            return Err(bad("too many grid points"));
        }
        // Drop accumulated float error so 0.1 steps give 0.3, not 0.30000000000000004.
        (0..n).map(|i| round_nano(start + i as f64 * step)).collect()
    } else {
        text.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad("expected comma-separated numbers")))
            .collect::<Result<Vec<_>, _>>()?
    };
    check_grid(name, values)
}

fn round_nano(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}

fn check_grid(name: &str, v: Vec<f64>) -> Result<Vec<f64>, CliError> {
    if v.is_empty() {
        return Err(CliError::Usage(format!("--{name} is empty")));
    }
    if let Some(x) = v.iter().find(|x| !x.is_finite()) {
        return Err(CliError::Usage(format!("--{name} contains {x}")));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("g", "1, 2,4").unwrap(), vec![1.0, 2.0, 4.0]);
        assert_eq!(parse_grid("g", "0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("g", "0:0.3:0.1").unwrap(), vec![0.0, 0.1, 0.2, 0.3]);
        assert!(parse_grid("g", "1:0:1").is_err());
        assert!(parse_grid("g", "a,b").is_err());
    }

    #[test]
    fn precedence() {
        assert_eq!(pick(Some(1), Some(2), 3), 1);
        assert_eq!(pick(None, Some(2), 3), 2);
        assert_eq!(pick(None, None, 3), 3);
    }

    #[test]
    fn file_rejects_unknown_keys() {
        assert!(toml::from_str::<FileConfig>("seeed = 3").is_err());
        let c: FileConfig = toml::from_str("seed = 3\ngrid_a = [1.0, 2.0]\ngrid_ef = \"0.5,1\"").unwrap();
        assert_eq!(c.seed, Some(3));
        assert_eq!(c.grid_a.unwrap().values("grid-a").unwrap(), vec![1.0, 2.0]);
        assert_eq!(c.grid_ef.unwrap().values("grid-ef").unwrap(), vec![0.5, 1.0]);
    }
}
